#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace phnmf {

/// Nonnegative data, one row per sample.
struct DataMatrix {
    Eigen::MatrixXd values;
    std::vector<std::size_t> sample_ids;  // aligned with rows
};

enum class NmfSolver {
    Hals,            // column-wise exact updates with extrapolation and restarts
    Multiplicative,  // Lee-Seung
};

const char* to_string(NmfSolver s) noexcept;
/// "hals" or "mu"; throws ParameterError otherwise.
NmfSolver nmf_solver_from_string(const std::string& s);

struct NmfOptions {
    std::uint64_t seed = 0;
    int max_iter = 500;
    double rel_tol = 1e-6;
    NmfSolver solver = NmfSolver::Hals;
    /// Sweeps (HALS) or updates (MU) applied to each factor per iteration.
    int inner_updates = 5;
};

/// V ~ coefficients * basis with both factors nonnegative.
struct FactorModel {
    std::size_t components = 0;
    Eigen::MatrixXd coefficients;  // N x M
    Eigen::MatrixXd basis;         // M x F, rows are concatenated feature distributions
    double error = 0.0;            // relative Frobenius error at exit
    int iterations = 0;
    std::uint64_t seed = 0;
    std::vector<double> objective_trace;  // ||V - WH||_F after init and after every iteration
};

/// Frobenius-norm NMF.
///
/// Factors start from seeded uniform (0,1] entries scaled by sqrt(mean(V)/M).
/// The HALS solver extrapolates both factors and falls back to the last
/// accepted iterate whenever that would raise the objective, so the trace
/// never increases for either solver. Iteration stops after max_iter rounds
/// or once an accepted step lowers the objective by less than rel_tol
/// (relative). Components are finally ordered by
/// descending total coefficient mass. Throws ParameterError when M is not in
/// [1, min(N, F)] and DomainError when V has a negative or non-finite entry.
FactorModel nmf(const DataMatrix& V, std::size_t M, const NmfOptions& opts = {});

/// ||V - coefficients * basis||_F / ||V||_F (0 when V is zero and the model is exact).
double reconstruction_error(const Eigen::MatrixXd& V, const FactorModel& model);

/// Basis row m cut into per-dimension blocks.
struct ConcatFeature {
    std::array<std::vector<double>, 3> blocks;
};

/// Splits every basis row at the given ConcatVector offsets. Throws
/// ConsistencyError when offsets do not span the basis width.
std::vector<ConcatFeature> split_components(const FactorModel& model, const std::array<std::size_t, 4>& offsets);

}  // namespace phnmf
