#include "phnmf/stage_io.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "phnmf/csv.hpp"
#include "phnmf/error.hpp"

namespace phnmf {

namespace {

const std::vector<std::string> kSamplesHeader{"sample_id", "specimen_label", "stage_label", "volume", "ox",
                                              "oy",        "oz",             "edge",        "pore_fraction",
                                              "kept"};

std::size_t parse_size(const std::string& field, const std::filesystem::path& path) {
    const long long v = csv::parse_integer(field);
    if (v < 0) throw FormatError(path.string() + ": negative value '" + field + "'");
    return static_cast<std::size_t>(v);
}

std::vector<std::string> numbered_header(const std::string& first, const std::string& prefix, std::size_t n) {
    std::vector<std::string> h{first};
    for (std::size_t i = 0; i < n; ++i) h.push_back(prefix + std::to_string(i));
    return h;
}

void check_numbered_header(const csv::Table& t, std::size_t skip, const std::string& prefix,
                           const std::filesystem::path& path) {
    for (std::size_t i = skip; i < t.header.size(); ++i)
        if (t.header[i] != prefix + std::to_string(i - skip))
            throw FormatError(path.string() + ": unexpected column '" + t.header[i] + "'");
}

}  // namespace

std::string sample_stem(std::size_t id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sample_%05zu", id);
    return buf;
}

void write_samples_csv(const std::filesystem::path& path, const std::vector<SampleRecord>& samples) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : samples)
        rows.push_back({std::to_string(s.id), s.specimen_label, s.stage_label, std::to_string(s.volume),
                        std::to_string(s.origin[0]), std::to_string(s.origin[1]), std::to_string(s.origin[2]),
                        std::to_string(s.edge), csv::format_number(s.pore_fraction), s.kept ? "1" : "0"});
    csv::write(path, kSamplesHeader, rows);
}

std::vector<SampleRecord> read_samples_csv(const std::filesystem::path& path) {
    const csv::Table t = csv::read(path, kSamplesHeader);
    std::vector<SampleRecord> out;
    for (const auto& r : t.rows) {
        SampleRecord s;
        s.id = parse_size(r[0], path);
        s.specimen_label = r[1];
        s.stage_label = r[2];
        s.volume = parse_size(r[3], path);
        for (int a = 0; a < 3; ++a) s.origin[a] = parse_size(r[4 + a], path);
        s.edge = parse_size(r[7], path);
        s.pore_fraction = csv::parse_number(r[8]);
        if (r[9] != "0" && r[9] != "1") throw FormatError(path.string() + ": kept must be 0 or 1");
        s.kept = r[9] == "1";
        if (!out.empty() && s.id <= out.back().id) throw FormatError(path.string() + ": sample ids must increase");
        out.push_back(std::move(s));
    }
    return out;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table) {
    if (table.rows.size() != table.sample_ids.size()) throw ConsistencyError("feature rows and sample ids differ in count");
    const std::size_t width = table.rows.empty() ? 0 : table.rows.front().size();
    std::vector<std::vector<std::string>> rows;
    rows.reserve(table.rows.size());
    for (std::size_t n = 0; n < table.rows.size(); ++n) {
        if (table.rows[n].size() != width) throw ConsistencyError("feature rows differ in length");
        std::vector<std::string> row{std::to_string(table.sample_ids[n])};
        row.reserve(width + 1);
        for (double v : table.rows[n]) row.push_back(csv::format_number(v));
        rows.push_back(std::move(row));
    }
    csv::write(path, numbered_header("sample_id", "v", width), rows);
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
    const csv::Table t = csv::read(path);
    if (t.header.empty() || t.header[0] != "sample_id") throw FormatError(path.string() + ": first column must be sample_id");
    check_numbered_header(t, 1, "v", path);
    FeatureTable out;
    for (const auto& r : t.rows) {
        const std::size_t id = parse_size(r[0], path);
        if (!out.sample_ids.empty() && id <= out.sample_ids.back())
            throw FormatError(path.string() + ": sample ids must increase");
        out.sample_ids.push_back(id);
        std::vector<double> row;
        row.reserve(r.size() - 1);
        for (std::size_t i = 1; i < r.size(); ++i) row.push_back(csv::parse_number(r[i]));
        out.rows.push_back(std::move(row));
    }
    return out;
}

void write_coefficients_csv(const std::filesystem::path& path, const CoefficientTable& table) {
    const auto N = static_cast<std::size_t>(table.lambda.rows());
    if (table.sample_ids.size() != N || table.specimen_labels.size() != N)
        throw ConsistencyError("coefficient rows, sample ids and labels differ in count");
    std::vector<std::string> header{"sample_id", "specimen_label"};
    for (Eigen::Index m = 0; m < table.lambda.cols(); ++m) header.push_back("lambda_" + std::to_string(m));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t n = 0; n < N; ++n) {
        std::vector<std::string> row{std::to_string(table.sample_ids[n]), table.specimen_labels[n]};
        for (Eigen::Index m = 0; m < table.lambda.cols(); ++m)
            row.push_back(csv::format_number(table.lambda(static_cast<Eigen::Index>(n), m)));
        rows.push_back(std::move(row));
    }
    csv::write(path, header, rows);
}

CoefficientTable read_coefficients_csv(const std::filesystem::path& path) {
    const csv::Table t = csv::read(path);
    if (t.header.size() < 3 || t.header[0] != "sample_id" || t.header[1] != "specimen_label")
        throw FormatError(path.string() + ": expected sample_id,specimen_label,lambda_0,...");
    check_numbered_header(t, 2, "lambda_", path);
    CoefficientTable out;
    out.lambda.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size() - 2));
    for (std::size_t n = 0; n < t.rows.size(); ++n) {
        const auto& r = t.rows[n];
        out.sample_ids.push_back(parse_size(r[0], path));
        out.specimen_labels.push_back(r[1]);
        for (std::size_t m = 2; m < r.size(); ++m)
            out.lambda(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m - 2)) = csv::parse_number(r[m]);
    }
    return out;
}

void write_basis_csv(const std::filesystem::path& path, const Eigen::MatrixXd& basis) {
    std::vector<std::vector<std::string>> rows;
    for (Eigen::Index m = 0; m < basis.rows(); ++m) {
        std::vector<std::string> row{std::to_string(m)};
        for (Eigen::Index f = 0; f < basis.cols(); ++f) row.push_back(csv::format_number(basis(m, f)));
        rows.push_back(std::move(row));
    }
    csv::write(path, numbered_header("component", "v", static_cast<std::size_t>(basis.cols())), rows);
}

Eigen::MatrixXd read_basis_csv(const std::filesystem::path& path) {
    const csv::Table t = csv::read(path);
    if (t.header.empty() || t.header[0] != "component") throw FormatError(path.string() + ": first column must be component");
    check_numbered_header(t, 1, "v", path);
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size() - 1));
    for (std::size_t m = 0; m < t.rows.size(); ++m) {
        if (parse_size(t.rows[m][0], path) != m) throw FormatError(path.string() + ": components must be numbered 0, 1, ...");
        for (std::size_t f = 1; f < t.rows[m].size(); ++f)
            basis(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(f - 1)) = csv::parse_number(t.rows[m][f]);
    }
    return basis;
}

void write_grids_json(const std::filesystem::path& path, const GridSet& gs) {
    nlohmann::json dims = nlohmann::json::array();
    for (int k = 0; k < 3; ++k) {
        const Grid& g = gs.grids[k];
        dims.push_back({{"dim", k},
                        {"x_min", g.x_min},
                        {"x_max", g.x_max},
                        {"y_min", g.y_min},
                        {"y_max", g.y_max},
                        {"bins", g.bins},
                        {"empty", gs.empty[k]}});
    }
    const nlohmann::json j = {{"grids", dims}, {"offsets", gs.offsets}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("error while writing " + path.string());
}

GridSet read_grids_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    GridSet gs;
    try {
        const nlohmann::json j = nlohmann::json::parse(in);
        const auto& dims = j.at("grids");
        if (dims.size() != 3) throw FormatError(path.string() + ": expected three grids");
        for (int k = 0; k < 3; ++k) {
            const auto& d = dims.at(static_cast<std::size_t>(k));
            if (d.at("dim").get<int>() != k) throw FormatError(path.string() + ": grids out of order");
            gs.grids[k] = Grid{d.at("x_min").get<double>(), d.at("x_max").get<double>(), d.at("y_min").get<double>(),
                               d.at("y_max").get<double>(), d.at("bins").get<std::size_t>()};
            gs.empty[k] = d.at("empty").get<bool>();
        }
        gs.offsets = j.at("offsets").get<std::array<std::size_t, 4>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return gs;
}

}  // namespace phnmf
