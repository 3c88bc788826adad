#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

#include "phnmf/config.hpp"

namespace phnmf {

enum class Stage { Sdt, Pd, Pi, Nmf, Invert, Plot };

const char* to_string(Stage s) noexcept;

/// File names under the output directory.
struct RunLayout {
    std::filesystem::path root;

    std::filesystem::path samples() const { return root / "samples.csv"; }
    std::filesystem::path sdt_dir() const { return root / "sdt"; }
    std::filesystem::path sdt_file(std::size_t id) const;
    std::filesystem::path sdt_sidecar(std::size_t id) const;
    std::filesystem::path diagram_dir() const { return root / "diagrams"; }
    std::filesystem::path diagram(std::size_t id) const;
    std::filesystem::path grids() const { return root / "grids.json"; }
    std::filesystem::path pi(int k) const { return root / ("pi_dim" + std::to_string(k) + ".csv"); }
    std::filesystem::path concat() const { return root / "concat.csv"; }
    std::filesystem::path coefficients() const { return root / "coefficients.csv"; }
    std::filesystem::path basis() const { return root / "basis.csv"; }
    std::filesystem::path nmf_summary() const { return root / "nmf.json"; }
    std::filesystem::path origins() const { return root / "origins.csv"; }
    std::filesystem::path origin_cycles() const { return root / "origin_cycles.csv"; }
    std::filesystem::path plot_dir() const { return root / "plots"; }
    std::filesystem::path manifest() const { return root / "run_manifest.json"; }
};

/// Runs one stage from the files left by the previous ones and rewrites the
/// run manifest. Errors are rethrown as StageError naming the stage and,
/// where one is involved, the sample id. Progress lines go to log if given.
void run_stage(const RunConfig& config, Stage stage, std::ostream* log = nullptr);

/// sdt, pd, pi, nmf, invert and plot in order.
void run_pipeline(const RunConfig& config, std::ostream* log = nullptr);

/// Rebuilds run_manifest.json from the config and the stage files present.
void write_manifest(const RunConfig& config);

/// Calls fn(i) for every i in [0, n) on up to threads workers (0 = hardware
/// concurrency). When calls throw, the exception of the lowest index is
/// rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace phnmf
