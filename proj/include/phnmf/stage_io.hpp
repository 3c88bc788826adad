#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phnmf/vectorize.hpp"

namespace phnmf {

/// One candidate cube of a run (kept or filtered out).
struct SampleRecord {
    std::size_t id = 0;
    std::string specimen_label;
    std::string stage_label;
    std::size_t volume = 0;  // index into the config's volume list
    std::array<std::size_t, 3> origin{};
    std::size_t edge = 0;
    double pore_fraction = 0.0;
    bool kept = false;

    bool operator==(const SampleRecord&) const = default;
};

void write_samples_csv(const std::filesystem::path& path, const std::vector<SampleRecord>& samples);
std::vector<SampleRecord> read_samples_csv(const std::filesystem::path& path);

/// "sample_00042"; ids wider than five digits keep all digits.
std::string sample_stem(std::size_t id);

/// Rows of per-sample feature values: header sample_id,v0,...,v{n-1}.
struct FeatureTable {
    std::vector<std::size_t> sample_ids;
    std::vector<std::vector<double>> rows;
};

void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table);
/// Throws FormatError on ragged rows or non-increasing sample ids.
FeatureTable read_feature_csv(const std::filesystem::path& path);

struct CoefficientTable {
    std::vector<std::size_t> sample_ids;
    std::vector<std::string> specimen_labels;
    Eigen::MatrixXd lambda;  // N x M
};

/// Header sample_id,specimen_label,lambda_0,...,lambda_{M-1}.
void write_coefficients_csv(const std::filesystem::path& path, const CoefficientTable& table);
CoefficientTable read_coefficients_csv(const std::filesystem::path& path);

/// Header component,v0,...; one row per component.
void write_basis_csv(const std::filesystem::path& path, const Eigen::MatrixXd& basis);
Eigen::MatrixXd read_basis_csv(const std::filesystem::path& path);

/// Per-dimension grids shared by all samples, plus the concatenation layout.
/// A dimension without finite pairs in any sample is marked empty; its block
/// is all zero.
struct GridSet {
    std::array<Grid, 3> grids{};
    std::array<bool, 3> empty{};
    std::array<std::size_t, 4> offsets{};

    bool operator==(const GridSet&) const = default;
};

void write_grids_json(const std::filesystem::path& path, const GridSet& grids);
GridSet read_grids_json(const std::filesystem::path& path);

}  // namespace phnmf
