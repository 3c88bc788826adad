#include <doctest.h>

#include <random>

#include "phnmf/error.hpp"
#include "phnmf/factorize.hpp"

using namespace phnmf;

namespace {

DataMatrix data(const Eigen::MatrixXd& v) {
    DataMatrix d;
    d.values = v;
    for (Eigen::Index i = 0; i < v.rows(); ++i) d.sample_ids.push_back(static_cast<std::size_t>(i));
    return d;
}

Eigen::MatrixXd random_nonnegative(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
}

// Frobenius quotient recomputed entry by entry.
double direct_error(const Eigen::MatrixXd& V, const Eigen::MatrixXd& W, const Eigen::MatrixXd& H) {
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < V.rows(); ++i)
        for (Eigen::Index j = 0; j < V.cols(); ++j) {
            double approx = 0.0;
            for (Eigen::Index m = 0; m < W.cols(); ++m) approx += W(i, m) * H(m, j);
            num += (V(i, j) - approx) * (V(i, j) - approx);
            den += V(i, j) * V(i, j);
        }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("nmf small exact factorizations") {
    for (NmfSolver solver : {NmfSolver::Hals, NmfSolver::Multiplicative}) {
        NmfOptions opts;
        opts.solver = solver;
        Eigen::MatrixXd rank1(2, 2);
        rank1 << 1, 2, 2, 4;
        const auto m1 = nmf(data(rank1), 1, opts);
        CHECK(m1.error < 1e-6);

        const auto m2 = nmf(data(Eigen::MatrixXd::Identity(2, 2)), 2, opts);
        CHECK(m2.error < 1e-3);
        CHECK(m2.coefficients.minCoeff() >= 0.0);
        CHECK(m2.basis.minCoeff() >= 0.0);
    }
}

TEST_CASE("nmf argument checks") {
    Eigen::MatrixXd v = Eigen::MatrixXd::Ones(3, 4);
    CHECK_THROWS_AS(nmf(data(v), 0), ParameterError);
    CHECK_THROWS_AS(nmf(data(v), 4), ParameterError);
    v(1, 2) = -0.5;
    CHECK_THROWS_AS(nmf(data(v), 2), DomainError);
    v(1, 2) = 0.5;
    NmfOptions opts;
    opts.inner_updates = 0;
    CHECK_THROWS_AS(nmf(data(v), 2, opts), ParameterError);
    CHECK(nmf_solver_from_string("mu") == NmfSolver::Multiplicative);
    CHECK(std::string(to_string(nmf_solver_from_string("hals"))) == "hals");
    CHECK_THROWS_AS(nmf_solver_from_string("als"), ParameterError);
}

TEST_CASE("nmf objective is monotone and factors stay nonnegative") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 6; ++trial) {
        const auto V = random_nonnegative(20, 50, rng);
        NmfOptions opts;
        opts.solver = trial % 2 ? NmfSolver::Multiplicative : NmfSolver::Hals;
        opts.seed = static_cast<std::uint64_t>(trial);
        opts.rel_tol = 0;
        opts.max_iter = 200;
        const auto m = nmf(data(V), 4, opts);
        CHECK(m.iterations == 200);
        CHECK(m.objective_trace.size() == 201);
        for (std::size_t i = 1; i < m.objective_trace.size(); ++i)
            CHECK(m.objective_trace[i] <= m.objective_trace[i - 1] + 1e-12);
        CHECK(m.coefficients.minCoeff() >= 0.0);
        CHECK(m.basis.minCoeff() >= 0.0);
        CHECK(reconstruction_error(V, m) == doctest::Approx(direct_error(V, m.coefficients, m.basis)).epsilon(1e-12));
        CHECK(m.error == doctest::Approx(m.objective_trace.back() / V.norm()));
    }
}

TEST_CASE("nmf recovers synthetic rank-3 data") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 3; ++trial) {
        const Eigen::MatrixXd V = random_nonnegative(30, 3, rng) * random_nonnegative(3, 40, rng);
        NmfOptions opts;
        opts.seed = 11 + static_cast<std::uint64_t>(trial);
        const auto m = nmf(data(V), 3, opts);
        CHECK(m.iterations <= 500);
        CHECK(m.error < 1e-3);
    }
}

TEST_CASE("nmf is deterministic and orders components by mass") {
    std::mt19937_64 rng(5);
    const auto V = random_nonnegative(15, 25, rng);
    NmfOptions opts;
    opts.seed = 42;
    const auto a = nmf(data(V), 3, opts);
    const auto b = nmf(data(V), 3, opts);
    CHECK(a.coefficients == b.coefficients);
    CHECK(a.basis == b.basis);
    CHECK(a.objective_trace == b.objective_trace);
    const Eigen::VectorXd mass = a.coefficients.colwise().sum();
    CHECK(mass(0) >= mass(1));
    CHECK(mass(1) >= mass(2));
    opts.seed = 43;
    CHECK(nmf(data(V), 3, opts).coefficients != a.coefficients);
}

TEST_CASE("argmax component survives row rescaling") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> scale(0.2, 5.0);
    int agree = 0, total = 0;
    for (int trial = 0; trial < 4; ++trial) {
        // Rows dominated by one of three separated components.
        Eigen::MatrixXd W = 0.05 * random_nonnegative(40, 3, rng);
        for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, i % 3) += 1.0;
        Eigen::MatrixXd H = 0.05 * random_nonnegative(3, 30, rng);
        for (Eigen::Index j = 0; j < H.cols(); ++j) H(j % 3, j) += 1.0;
        const Eigen::MatrixXd V = W * H;
        Eigen::MatrixXd Vs = V;
        std::vector<double> c(static_cast<std::size_t>(V.rows()));
        for (Eigen::Index i = 0; i < V.rows(); ++i) {
            c[static_cast<std::size_t>(i)] = scale(rng);
            Vs.row(i) *= c[static_cast<std::size_t>(i)];
        }
        const auto a = nmf(data(V), 3);
        const auto b = nmf(data(Vs), 3);
        // Match components of b to a through their basis rows.
        std::array<Eigen::Index, 3> map{};
        for (Eigen::Index m = 0; m < 3; ++m) {
            double best = -1;
            for (Eigen::Index n = 0; n < 3; ++n) {
                const double cs = a.basis.row(m).dot(b.basis.row(n)) / (a.basis.row(m).norm() * b.basis.row(n).norm());
                if (cs > best) {
                    best = cs;
                    map[static_cast<std::size_t>(m)] = n;
                }
            }
        }
        for (Eigen::Index i = 0; i < V.rows(); ++i) {
            Eigen::Index ia = 0, ib = 0;
            a.coefficients.row(i).maxCoeff(&ia);
            b.coefficients.row(i).maxCoeff(&ib);
            agree += map[static_cast<std::size_t>(ia)] == ib ? 1 : 0;
            ++total;
        }
    }
    CHECK(double(agree) / total >= 0.95);
}

TEST_CASE("reconstruction_error and split_components") {
    Eigen::MatrixXd V(2, 3);
    V << 1, 0, 2, 0, 3, 1;
    FactorModel exact;
    exact.coefficients = Eigen::MatrixXd::Identity(2, 2);
    exact.basis = V;
    CHECK(reconstruction_error(V, exact) == 0.0);
    FactorModel zero;
    zero.coefficients = Eigen::MatrixXd::Zero(2, 2);
    zero.basis = Eigen::MatrixXd::Zero(2, 3);
    CHECK(reconstruction_error(V, zero) == 1.0);

    std::mt19937_64 rng(1);
    FactorModel m;
    m.basis = random_nonnegative(3, 48, rng);
    const auto parts = split_components(m, {0, 16, 32, 48});
    REQUIRE(parts.size() == 3);
    for (Eigen::Index r = 0; r < 3; ++r) {
        std::vector<double> joined;
        for (const auto& blk : parts[static_cast<std::size_t>(r)].blocks) {
            CHECK(blk.size() == 16);
            joined.insert(joined.end(), blk.begin(), blk.end());
        }
        for (Eigen::Index f = 0; f < 48; ++f) CHECK(joined[static_cast<std::size_t>(f)] == m.basis(r, f));
    }
    CHECK_THROWS_AS(split_components(m, {0, 16, 32, 47}), ConsistencyError);
    CHECK_THROWS_AS(split_components(m, {0, 20, 16, 48}), ConsistencyError);
}
