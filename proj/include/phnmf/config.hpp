#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "phnmf/distance_transform.hpp"
#include "phnmf/factorize.hpp"
#include "phnmf/vectorize.hpp"
#include "phnmf/voxel_io.hpp"

namespace phnmf {

struct VolumeEntry {
    std::filesystem::path path;  // resolved against the config directory
    VolumeMeta meta;
    std::string specimen_label;
    std::string stage_label;
};

struct InverseOptions {
    double q = 0.8;                         // mass fraction of each feature region
    std::size_t samples_per_component = 3;  // highest-coefficient samples inspected
    std::size_t pairs_per_sample = 5;       // per dimension, most persistent first
};

/// Everything a run needs. Defaults follow the library defaults; M = 3.
struct RunConfig {
    std::vector<VolumeEntry> volumes;
    std::size_t cube_edge = 150;
    double pore_threshold = 0.4;
    Polarity polarity = Polarity::ForegroundNegative;
    std::array<PIParams, 3> pi{};  // one per homology dimension
    bool normalize_blocks = false;
    std::size_t components = 3;
    NmfOptions nmf;
    InverseOptions inverse;
    unsigned threads = 0;  // 0 = hardware concurrency
    std::filesystem::path output_dir = "phnmf_out";

    /// Throws ParameterError for out-of-range settings and IoError for
    /// missing volume files.
    void validate() const;
};

/// Parses a JSON config. Relative paths are taken relative to base_dir.
/// Unknown keys anywhere are a FormatError.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON text of the config (all settings spelled out, sorted keys).
std::string config_json(const RunConfig& config);

}  // namespace phnmf
