#include "phnmf/figures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "phnmf/error.hpp"
#include "phnmf/stage_io.hpp"

namespace phnmf {

namespace {

constexpr double kSize = 480.0;
constexpr double kMargin = 60.0;
constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("error while writing " + path.string());
}

}  // namespace

std::string scatter_svg(const std::vector<ScatterPoint>& points, std::size_t i, std::size_t j) {
    if (i == j) throw ParameterError("scatter needs two different components");
    double xmax = 0.0, ymax = 0.0;
    for (const auto& p : points) {
        xmax = std::max(xmax, p.x);
        ymax = std::max(ymax, p.y);
    }
    if (xmax <= 0.0) xmax = 1.0;
    if (ymax <= 0.0) ymax = 1.0;
    std::map<std::string, std::size_t> colour;
    for (const auto& p : points) colour.emplace(p.label, 0);
    std::size_t next = 0;
    for (auto& [label, c] : colour) c = next++ % std::size(kPalette);

    const double plot = kSize - 2 * kMargin;
    auto px = [&](double x) { return kMargin + plot * x / xmax; };
    auto py = [&](double y) { return kSize - kMargin - plot * y / ymax; };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(kSize + 120) + "\" height=\"" + fixed(kSize) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const std::string x0 = fixed(kMargin), x1 = fixed(kSize - kMargin), y0 = fixed(kSize - kMargin),
                      y1 = fixed(kMargin);
    s += "<line x1=\"" + x0 + "\" y1=\"" + y0 + "\" x2=\"" + x1 + "\" y2=\"" + y0 + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + x0 + "\" y1=\"" + y0 + "\" x2=\"" + x0 + "\" y2=\"" + y1 + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + x0 + "\" y=\"" + fixed(kSize - kMargin + 16) + "\" text-anchor=\"middle\">0</text>\n";
    s += "<text x=\"" + x1 + "\" y=\"" + fixed(kSize - kMargin + 16) + "\" text-anchor=\"middle\">" + tick(xmax) +
         "</text>\n";
    s += "<text x=\"" + fixed(kMargin - 6) + "\" y=\"" + y0 + "\" text-anchor=\"end\">0</text>\n";
    s += "<text x=\"" + fixed(kMargin - 6) + "\" y=\"" + y1 + "\" text-anchor=\"end\">" + tick(ymax) + "</text>\n";
    s += "<text x=\"" + fixed(kSize / 2) + "\" y=\"" + fixed(kSize - 15) + "\" text-anchor=\"middle\">λ_" +
         std::to_string(i) + "</text>\n";
    s += "<text x=\"15\" y=\"" + fixed(kSize / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " +
         fixed(kSize / 2) + ")\">λ_" + std::to_string(j) + "</text>\n";
    s += "<g id=\"points\">\n";
    for (const auto& p : points)
        s += "<circle cx=\"" + fixed(px(p.x)) + "\" cy=\"" + fixed(py(p.y)) + "\" r=\"3\" fill=\"" +
             kPalette[colour.at(p.label)] + "\"/>\n";
    s += "</g>\n";
    double ly = kMargin;
    for (const auto& [label, c] : colour) {
        s += "<circle cx=\"" + fixed(kSize + 10) + "\" cy=\"" + fixed(ly) + "\" r=\"4\" fill=\"" + kPalette[c] + "\"/>\n";
        s += "<text x=\"" + fixed(kSize + 20) + "\" y=\"" + fixed(ly + 4) + "\">" + escape(label) + "</text>\n";
        ly += 18;
    }
    s += "</svg>\n";
    return s;
}

std::string heatmap_pgm(std::span<const double> block, const Grid& grid) {
    if (block.size() != grid.size())
        throw ConsistencyError("heatmap block has " + std::to_string(block.size()) + " entries, grid has " +
                               std::to_string(grid.size()) + " bins");
    double top = 0.0;
    for (double v : block) top = std::max(top, v);
    std::string s = "P5\n" + std::to_string(grid.bins) + " " + std::to_string(grid.bins) + "\n255\n";
    for (double v : block) {
        const double scaled = top > 0.0 ? std::clamp(v / top, 0.0, 1.0) * 255.0 : 0.0;
        s.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(scaled))));
    }
    return s;
}

void emit_scatter(const std::filesystem::path& coefficients_csv, const std::filesystem::path& samples_csv,
                  std::size_t i, std::size_t j, const std::filesystem::path& out) {
    const CoefficientTable coef = read_coefficients_csv(coefficients_csv);
    const auto M = static_cast<std::size_t>(coef.lambda.cols());
    if (i == j || i >= M || j >= M)
        throw ParameterError("component pair (" + std::to_string(i) + ", " + std::to_string(j) +
                             ") invalid for M = " + std::to_string(M));
    std::map<std::size_t, std::string> stage;
    for (const auto& s : read_samples_csv(samples_csv)) stage[s.id] = s.stage_label;
    std::vector<ScatterPoint> points;
    for (std::size_t n = 0; n < coef.sample_ids.size(); ++n) {
        const auto it = stage.find(coef.sample_ids[n]);
        if (it == stage.end()) throw LookupError("sample " + std::to_string(coef.sample_ids[n]) + " missing from samples file");
        points.push_back({coef.lambda(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)),
                          coef.lambda(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)), it->second});
    }
    write_file(out, scatter_svg(points, i, j));
}

void emit_feature_heatmap(std::span<const double> block, const Grid& grid, const std::filesystem::path& out) {
    write_file(out, heatmap_pgm(block, grid));
}

}  // namespace phnmf
