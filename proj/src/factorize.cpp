#include "phnmf/factorize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "phnmf/error.hpp"

namespace phnmf {

namespace {

constexpr double kDenominatorFloor = 1e-12;

// Uniform in (0, 1] from the top 53 bits; identical on every platform.
double unit_interval(std::mt19937_64& rng) {
    return 1.0 - static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// One pass of multiplicative updates on H (rows of H against columns of W).
void multiplicative_rows(const Eigen::MatrixXd& WtV, const Eigen::MatrixXd& WtW, Eigen::MatrixXd& H, int passes) {
    for (int pass = 0; pass < passes; ++pass)
        H = H.cwiseProduct(WtV).cwiseQuotient(((WtW * H).array() + kDenominatorFloor).matrix());
}

// Exact nonnegative minimisation over one row of H at a time.
void hals_rows(const Eigen::MatrixXd& WtV, const Eigen::MatrixXd& WtW, Eigen::MatrixXd& H, int passes) {
    for (int pass = 0; pass < passes; ++pass)
        for (Eigen::Index k = 0; k < H.rows(); ++k) {
            const double d = std::max(WtW(k, k), kDenominatorFloor);
            H.row(k) = (H.row(k) + (WtV.row(k) - WtW.row(k) * H) / d).cwiseMax(0.0);
        }
}

void update_h(const Eigen::MatrixXd& V, const Eigen::MatrixXd& W, Eigen::MatrixXd& H, const NmfOptions& opts) {
    const Eigen::MatrixXd WtV = W.transpose() * V;
    const Eigen::MatrixXd WtW = W.transpose() * W;
    if (opts.solver == NmfSolver::Hals)
        hals_rows(WtV, WtW, H, opts.inner_updates);
    else
        multiplicative_rows(WtV, WtW, H, opts.inner_updates);
}

void update_w(const Eigen::MatrixXd& V, Eigen::MatrixXd& W, const Eigen::MatrixXd& H, const NmfOptions& opts) {
    const Eigen::MatrixXd HVt = H * V.transpose();
    const Eigen::MatrixXd HHt = H * H.transpose();
    Eigen::MatrixXd Wt = W.transpose();
    if (opts.solver == NmfSolver::Hals)
        hals_rows(HVt, HHt, Wt, opts.inner_updates);
    else
        multiplicative_rows(HVt, HHt, Wt, opts.inner_updates);
    W = Wt.transpose();
}

}  // namespace

const char* to_string(NmfSolver s) noexcept { return s == NmfSolver::Hals ? "hals" : "mu"; }

NmfSolver nmf_solver_from_string(const std::string& s) {
    if (s == "hals") return NmfSolver::Hals;
    if (s == "mu") return NmfSolver::Multiplicative;
    throw ParameterError("unknown NMF solver '" + s + "' (expected hals or mu)");
}

FactorModel nmf(const DataMatrix& data, std::size_t M, const NmfOptions& opts) {
    const Eigen::MatrixXd& V = data.values;
    const auto N = static_cast<std::size_t>(V.rows());
    const auto F = static_cast<std::size_t>(V.cols());
    if (M < 1 || M > std::min(N, F))
        throw ParameterError("component count " + std::to_string(M) + " outside [1, min(N, F)] = [1, " +
                             std::to_string(std::min(N, F)) + "]");
    if (opts.max_iter < 0) throw ParameterError("max_iter must be nonnegative");
    if (opts.inner_updates < 1) throw ParameterError("inner_updates must be at least 1");
    if (!(opts.rel_tol >= 0.0)) throw ParameterError("rel_tol must be nonnegative");
    for (Eigen::Index i = 0; i < V.size(); ++i) {
        const double v = V.data()[i];
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("NMF input must be finite and nonnegative");
    }

    const auto m = static_cast<Eigen::Index>(M);
    std::mt19937_64 rng(opts.seed);
    const double scale = std::sqrt(V.mean() / static_cast<double>(M));
    Eigen::MatrixXd W(V.rows(), m), H(m, V.cols());
    for (Eigen::Index c = 0; c < W.cols(); ++c)
        for (Eigen::Index r = 0; r < W.rows(); ++r) W(r, c) = scale * unit_interval(rng);
    for (Eigen::Index c = 0; c < H.cols(); ++c)
        for (Eigen::Index r = 0; r < H.rows(); ++r) H(r, c) = scale * unit_interval(rng);

    FactorModel model;
    model.components = M;
    model.seed = opts.seed;
    double objective = (V - W * H).norm();
    model.objective_trace.push_back(objective);

    // Extrapolation weight and its cap, grown after accepted steps and cut
    // back after rejected ones. MU runs with beta = 0 throughout.
    const bool extrapolate = opts.solver == NmfSolver::Hals;
    double beta = extrapolate ? 0.5 : 0.0, beta_cap = 1.0;
    Eigen::MatrixXd Wy = W, Hy = H;

    for (int it = 0; it < opts.max_iter && objective > 0.0; ++it) {
        model.iterations = it + 1;
        Eigen::MatrixXd Hn = Hy;
        update_h(V, Wy, Hn, opts);
        Eigen::MatrixXd Hy_next = Hn;
        if (extrapolate) Hy_next = (Hn + beta * (Hn - H)).cwiseMax(0.0);
        Eigen::MatrixXd Wn = Wy;
        update_w(V, Wn, Hy_next, opts);

        const double trial = (V - Wn * Hn).norm();
        if (extrapolate && trial > objective) {
            Wy = W;
            Hy = H;
            beta_cap = beta;
            beta /= 1.5;
            model.objective_trace.push_back(objective);
            continue;
        }
        if (extrapolate) {
            Wy = (Wn + beta * (Wn - W)).cwiseMax(0.0);
            Hy = Hy_next;
            beta = std::min(beta_cap, beta * 1.01);
            beta_cap = std::min(1.0, beta_cap * 1.005);
        } else {
            Wy = Wn;
            Hy = Hn;
        }
        W = std::move(Wn);
        H = std::move(Hn);
        const double previous = objective;
        objective = trial;
        model.objective_trace.push_back(objective);
        if (previous > 0.0 && (previous - objective) / previous < opts.rel_tol) break;
    }

    // Reorder components by descending coefficient mass; ties keep index order.
    std::vector<Eigen::Index> order(M);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const Eigen::VectorXd mass = W.colwise().sum();
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return mass(a) > mass(b); });
    model.coefficients.resize(W.rows(), m);
    model.basis.resize(m, H.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
        model.coefficients.col(i) = W.col(order[static_cast<std::size_t>(i)]);
        model.basis.row(i) = H.row(order[static_cast<std::size_t>(i)]);
    }
    model.error = reconstruction_error(V, model);
    return model;
}

double reconstruction_error(const Eigen::MatrixXd& V, const FactorModel& model) {
    if (model.coefficients.rows() != V.rows() || model.basis.cols() != V.cols() ||
        model.coefficients.cols() != model.basis.rows())
        throw ConsistencyError("factor shapes do not match the data matrix");
    const double residual = (V - model.coefficients * model.basis).norm();
    const double norm = V.norm();
    if (norm == 0.0) return residual == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return residual / norm;
}

std::vector<ConcatFeature> split_components(const FactorModel& model, const std::array<std::size_t, 4>& offsets) {
    if (offsets[0] != 0 || offsets[1] < offsets[0] || offsets[2] < offsets[1] || offsets[3] < offsets[2] ||
        offsets[3] != static_cast<std::size_t>(model.basis.cols()))
        throw ConsistencyError("block offsets do not match the basis width " + std::to_string(model.basis.cols()));
    std::vector<ConcatFeature> out(static_cast<std::size_t>(model.basis.rows()));
    for (Eigen::Index m = 0; m < model.basis.rows(); ++m)
        for (int k = 0; k < 3; ++k) {
            auto& blk = out[static_cast<std::size_t>(m)].blocks[k];
            blk.resize(offsets[k + 1] - offsets[k]);
            for (std::size_t f = offsets[k]; f < offsets[k + 1]; ++f)
                blk[f - offsets[k]] = model.basis(m, static_cast<Eigen::Index>(f));
        }
    return out;
}

}  // namespace phnmf
