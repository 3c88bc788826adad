#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "phnmf/vectorize.hpp"

namespace phnmf {

struct ScatterPoint {
    double x = 0.0;
    double y = 0.0;
    std::string label;  // colour key
};

/// SVG scatter of coefficient pair (lambda_i, lambda_j), one colour per
/// distinct label (sorted), with a legend. Axes start at 0. Throws
/// ParameterError when i == j.
std::string scatter_svg(const std::vector<ScatterPoint>& points, std::size_t i, std::size_t j);

/// Binary PGM (P5) of a B x B block: pixel (column i, row j) shows bin
/// j * B + i, scaled linearly from [0, max] to [0, 255]. An all-zero block is
/// black. Throws ConsistencyError when the block length is not B^2.
std::string heatmap_pgm(std::span<const double> block, const Grid& grid);

/// Reads coefficients.csv and colours by the stage labels in samples.csv.
/// Throws ParameterError when i == j or either index is not below M.
void emit_scatter(const std::filesystem::path& coefficients_csv, const std::filesystem::path& samples_csv,
                  std::size_t i, std::size_t j, const std::filesystem::path& out);

void emit_feature_heatmap(std::span<const double> block, const Grid& grid, const std::filesystem::path& out);

}  // namespace phnmf
