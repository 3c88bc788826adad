#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "phnmf/cubical_persistence.hpp"
#include "phnmf/vectorize.hpp"
#include "phnmf/voxel_io.hpp"

namespace phnmf {

/// High-mass part of one feature distribution block.
struct FeatureRegion {
    int dim = 0;
    Grid grid;
    std::vector<std::size_t> bins;  // ascending flat indices
    double target = 0.0;            // requested fraction q
    double captured = 0.0;          // selected mass / total mass, >= target

    bool contains(std::size_t bin) const;
};

/// Greedy top-mass bins of a block laid out on grid: bins are taken in
/// descending value (lower index first on ties) until the captured fraction
/// reaches q. q = 1 takes every nonzero bin. Throws ParameterError for q
/// outside (0, 1], ConsistencyError when the block does not fit the grid,
/// DomainError for negative entries and EmptyFeatureError for an all-zero block.
FeatureRegion feature_region(std::span<const double> block, int dim, const Grid& grid, double q);

/// Finite pairs of dimension region.dim whose bin lies in the region,
/// by descending persistence (diagram order among equals).
std::vector<Pair> select_pairs(const PersistenceDiagram& pd, const FeatureRegion& region);

struct OriginReport {
    std::size_t sample_id = 0;
    std::size_t component = 0;
    std::array<std::size_t, 3> cube_origin{};  // cube position in its parent volume
    Pair pair;
    std::vector<Cell> cycle;  // empty for essential pairs
};

/// Birth and death cells of a pair plus its representative cycle, in the
/// cube's own coordinates. Throws LookupError when the pair is not in the
/// diagram of cp and ConsistencyError when cp was built from another shape.
OriginReport locate_origin(const CubeSample& sample, const CubicalPersistence& cp, const Pair& pair,
                           std::size_t component);

/// origins.csv lists one report per row; the sidecar lists cycle cells keyed
/// by the row index.
void write_origin_csv(const std::filesystem::path& path, const std::filesystem::path& cycles_path,
                      const std::vector<OriginReport>& reports);
std::vector<OriginReport> read_origin_csv(const std::filesystem::path& path, const std::filesystem::path& cycles_path);

}  // namespace phnmf
