#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "phnmf/cubical_persistence.hpp"

namespace phnmf {

/// Persistence image parameters: Gaussian width, arctan weight C and p, and
/// the number of bins per axis.
struct PIParams {
    double sigma = 2.0;
    double C = 1.0;
    double p = 1.0;
    std::size_t bins_per_axis = 64;

    void validate() const;
};

/// Birth x death rectangle split into B x B bins. Bin (i, j) covers birth
/// bin i and death bin j and sits at flat index j * B + i.
struct Grid {
    double x_min = 0.0, x_max = 1.0;  // birth
    double y_min = 0.0, y_max = 1.0;  // death
    std::size_t bins = 1;

    double bin_width_x() const noexcept { return (x_max - x_min) / static_cast<double>(bins); }
    double bin_width_y() const noexcept { return (y_max - y_min) / static_cast<double>(bins); }
    double x_center(std::size_t i) const noexcept { return x_min + (static_cast<double>(i) + 0.5) * bin_width_x(); }
    double y_center(std::size_t j) const noexcept { return y_min + (static_cast<double>(j) + 0.5) * bin_width_y(); }
    std::size_t size() const noexcept { return bins * bins; }

    /// Flat index of the bin holding (birth, death); nullopt outside the grid.
    /// Bins are half-open except the last one, which also takes the upper edge.
    std::optional<std::size_t> bin_of(double birth, double death) const noexcept;

    bool operator==(const Grid&) const = default;
};

struct PersistenceImage {
    std::size_t sample_id = 0;
    int dim = 0;
    Grid grid;
    std::vector<double> values;  // length grid.size(), all >= 0
};

/// Three per-dimension images of one sample stacked in order 0, 1, 2.
struct ConcatVector {
    std::size_t sample_id = 0;
    std::vector<double> values;
    std::array<std::size_t, 4> offsets{};  // block k is [offsets[k], offsets[k+1])

    std::span<const double> block(int k) const {
        return std::span<const double>(values).subspan(offsets[k], offsets[k + 1] - offsets[k]);
    }
};

/// arctan(C * (death - birth)^p); zero on the diagonal.
double pair_weight(double birth, double death, const PIParams& params);

/// Shared grid for dimension k: the extent of all finite pairs of all
/// diagrams padded by 3 sigma on each side. Throws EmptyFeatureError when
/// no diagram has a finite pair in dimension k.
Grid fit_grid(std::span<const PersistenceDiagram> diagrams, int k, const PIParams& params);

/// Persistence surface sampled at bin centres; essential pairs are skipped.
PersistenceImage persistence_image(const PersistenceDiagram& pd, int k, const Grid& grid, const PIParams& params);

/// Rescales an image to unit total mass (sum of entries); all-zero images are
/// left unchanged.
void normalize_unit_mass(PersistenceImage& pi);

/// Throws ConsistencyError when the images are from different samples or
/// not in dimension order 0, 1, 2.
ConcatVector concatenate(const PersistenceImage& pi0, const PersistenceImage& pi1, const PersistenceImage& pi2);

}  // namespace phnmf
