#include "phnmf/inverse_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phnmf/csv.hpp"
#include "phnmf/error.hpp"

namespace phnmf {

namespace {

const std::vector<std::string> kOriginHeader{"row", "sample_id", "component", "ox", "oy", "oz", "dim",
                                             "birth", "death", "bx", "by", "bz", "bex", "bey",
                                             "bez", "dx", "dy", "dz", "dex", "dey", "dez"};
const std::vector<std::string> kCycleHeader{"row", "x", "y", "z", "ex", "ey", "ez"};

std::size_t parse_index(const std::string& field) {
    const long long v = csv::parse_integer(field);
    if (v < 0) throw FormatError("negative index '" + field + "'");
    return static_cast<std::size_t>(v);
}

}  // namespace

bool FeatureRegion::contains(std::size_t bin) const { return std::binary_search(bins.begin(), bins.end(), bin); }

FeatureRegion feature_region(std::span<const double> block, int dim, const Grid& grid, double q) {
    if (!(q > 0.0 && q <= 1.0)) throw ParameterError("mass fraction q must lie in (0, 1]");
    if (dim < 0 || dim > 2) throw ParameterError("dimension must be 0, 1 or 2");
    if (block.size() != grid.size())
        throw ConsistencyError("block has " + std::to_string(block.size()) + " entries but the grid has " +
                               std::to_string(grid.size()) + " bins");
    for (double v : block)
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("feature block entries must be finite and nonnegative");

    std::vector<std::size_t> order(block.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return block[a] > block[b]; });

    // Summing in selection order makes the full prefix equal the total exactly.
    double total = 0.0;
    for (std::size_t i : order) total += block[i];
    if (total == 0.0) throw EmptyFeatureError("feature block of dimension " + std::to_string(dim) + " is all zero");

    FeatureRegion region;
    region.dim = dim;
    region.grid = grid;
    region.target = q;
    double mass = 0.0;
    for (std::size_t i : order) {
        if (block[i] == 0.0) break;
        if (q < 1.0 && mass >= q * total) break;
        region.bins.push_back(i);
        mass += block[i];
    }
    region.captured = mass / total;
    std::sort(region.bins.begin(), region.bins.end());
    return region;
}

std::vector<Pair> select_pairs(const PersistenceDiagram& pd, const FeatureRegion& region) {
    std::vector<Pair> out;
    for (const Pair& p : pd[region.dim]) {
        if (p.essential()) continue;
        const auto bin = region.grid.bin_of(p.birth, p.death);
        if (bin && region.contains(*bin)) out.push_back(p);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Pair& a, const Pair& b) { return a.persistence() > b.persistence(); });
    return out;
}

OriginReport locate_origin(const CubeSample& sample, const CubicalPersistence& cp, const Pair& pair,
                           std::size_t component) {
    if (!(cp.complex().shape() == sample.volume.shape))
        throw ConsistencyError("persistence was computed on a volume of another shape than sample " +
                               std::to_string(sample.id));
    if (!cp.contains(pair))
        throw LookupError("pair (" + csv::format_number(pair.birth) + ", " + csv::format_number(pair.death) +
                          ") of dimension " + std::to_string(pair.dim) + " is not in the diagram of sample " +
                          std::to_string(sample.id));
    OriginReport r;
    r.sample_id = sample.id;
    r.component = component;
    r.cube_origin = sample.origin;
    r.pair = pair;
    if (!pair.essential()) r.cycle = cp.representative_cycle(pair);
    return r;
}

void write_origin_csv(const std::filesystem::path& path, const std::filesystem::path& cycles_path,
                      const std::vector<OriginReport>& reports) {
    std::vector<std::vector<std::string>> rows, cycle_rows;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const OriginReport& r = reports[i];
        std::vector<std::string> row{std::to_string(i), std::to_string(r.sample_id), std::to_string(r.component)};
        for (std::size_t o : r.cube_origin) row.push_back(std::to_string(o));
        row.push_back(std::to_string(r.pair.dim));
        row.push_back(csv::format_number(r.pair.birth));
        row.push_back(csv::format_number(r.pair.death));
        append_cell(row, r.pair.birth_cell);
        if (r.pair.death_cell)
            append_cell(row, *r.pair.death_cell);
        else
            row.insert(row.end(), 6, "");
        rows.push_back(std::move(row));
        for (const Cell& c : r.cycle) {
            std::vector<std::string> crow{std::to_string(i)};
            append_cell(crow, c);
            cycle_rows.push_back(std::move(crow));
        }
    }
    csv::write(path, kOriginHeader, rows);
    csv::write(cycles_path, kCycleHeader, cycle_rows);
}

std::vector<OriginReport> read_origin_csv(const std::filesystem::path& path, const std::filesystem::path& cycles_path) {
    const csv::Table t = csv::read(path, kOriginHeader);
    std::vector<OriginReport> out;
    for (const auto& row : t.rows) {
        if (parse_index(row[0]) != out.size()) throw FormatError(path.string() + ": rows must be numbered 0, 1, ...");
        OriginReport r;
        r.sample_id = parse_index(row[1]);
        r.component = parse_index(row[2]);
        for (int a = 0; a < 3; ++a) r.cube_origin[a] = parse_index(row[3 + a]);
        r.pair.dim = static_cast<int>(csv::parse_integer(row[6]));
        if (r.pair.dim < 0 || r.pair.dim > 2) throw FormatError(path.string() + ": dimension out of range");
        r.pair.birth = csv::parse_number(row[7]);
        r.pair.death = csv::parse_number(row[8]);
        r.pair.birth_cell = parse_cell(row, 9);
        if (!std::isinf(r.pair.death)) r.pair.death_cell = parse_cell(row, 15);
        out.push_back(std::move(r));
    }
    const csv::Table c = csv::read(cycles_path, kCycleHeader);
    for (const auto& row : c.rows) {
        const std::size_t i = parse_index(row[0]);
        if (i >= out.size()) throw FormatError(cycles_path.string() + ": cycle row refers to a missing report");
        out[i].cycle.push_back(parse_cell(row, 1));
    }
    return out;
}

}  // namespace phnmf
