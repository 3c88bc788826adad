// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any fails.

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/oracles.hpp"
#include "phnmf/cubical_persistence.hpp"
#include "phnmf/distance_transform.hpp"
#include "phnmf/factorize.hpp"
#include "phnmf/pipeline.hpp"
#include "phnmf/stage_io.hpp"
#include "phnmf/vectorize.hpp"
#include "support/synthetic.hpp"
#include "unit/temp_dir.hpp"

using namespace phnmf;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::vector<oracle::Triple> triples(const PersistenceDiagram& pd) {
    std::vector<oracle::Triple> out;
    for (int k = 0; k < 3; ++k)
        for (const Pair& p : pd[k]) out.emplace_back(k, p.birth, p.death);
    std::sort(out.begin(), out.end());
    return out;
}

Pair finite(double b, double d) {
    Pair p;
    p.birth = b;
    p.death = d;
    p.death_cell = Cell{};
    return p;
}

DataMatrix data(const Eigen::MatrixXd& v) {
    DataMatrix d;
    d.values = v;
    for (Eigen::Index i = 0; i < v.rows(); ++i) d.sample_ids.push_back(static_cast<std::size_t>(i));
    return d;
}

Eigen::MatrixXd uniform_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return aa > 0 && bb > 0 ? ab / std::sqrt(aa * bb) : 0.0;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Outcome persistence_oracle() {
    const auto t0 = Clock::now();
    int bad = 0;
    std::size_t pairs = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto sv = signed_manhattan_sdt(oracle::random_volume({8, 8, 8}, seed));
        const auto got = triples(compute_persistence(FilteredComplex(sv)));
        pairs += got.size();
        if (got != oracle::naive_diagram(sv)) ++bad;
    }
    const double t = seconds_since(t0);
    return {bad == 0 && t < 60, std::to_string(50 - bad) + "/50 volumes match, " + std::to_string(pairs) +
                                    " pairs, " + fmt("%.1f s", t)};
}

Outcome sdt_oracle() {
    const auto t0 = Clock::now();
    int bad = 0;
    for (std::uint64_t seed = 101; seed <= 150; ++seed) {
        const double p = 0.1 + 0.8 * static_cast<double>(seed % 9) / 8.0;
        const auto vol = oracle::random_volume({16, 16, 16}, seed, p);
        if (signed_manhattan_sdt(vol).values != oracle::brute_sdt(vol)) ++bad;
    }
    const double t = seconds_since(t0);
    return {bad == 0 && t < 30, std::to_string(50 - bad) + "/50 volumes match, " + fmt("%.1f s", t)};
}

Outcome euler_identity() {
    int checked = 0, bad = 0;
    for (std::uint64_t seed = 201; seed <= 220; ++seed) {
        const auto sv = signed_manhattan_sdt(oracle::random_volume({6, 6, 6}, seed));
        const auto pd = compute_persistence(FilteredComplex(sv));
        const auto [lo, hi] = std::minmax_element(sv.values.begin(), sv.values.end());
        for (int t = *lo - 1; t <= *hi + 1; ++t) {
            long chi = 0;
            for (int k = 0; k < 3; ++k) chi += (k % 2 ? -1L : 1L) * static_cast<long>(betti_curve(pd, k, t));
            ++checked;
            if (chi != oracle::sublevel_euler(sv, t)) ++bad;
        }
    }
    return {bad == 0, std::to_string(checked - bad) + "/" + std::to_string(checked) + " thresholds agree"};
}

Outcome pi_closed_form() {
    PIParams params;
    params.sigma = 1;
    params.C = 1;
    params.p = 1;
    params.bins_per_axis = 5;
    PersistenceDiagram pd;
    pd[0] = {finite(0, 1)};
    const Grid g{-3, 3, -2, 4, 5};  // centre bin (2, 2) sits on (0, 1)
    const double centre = persistence_image(pd, 0, g, params).values[2 * 5 + 2];
    const double err = std::abs(centre - std::atan(1.0));
    bool ok = err < 1e-9;

    // Mass: bins no wider than sigma / 2 and a 3 sigma margin around every pair.
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> ub(-6, 6), ul(0.2, 5), us(0.5, 2);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        PIParams mp;
        mp.sigma = us(rng);
        mp.C = 0.5 + 0.1 * trial;
        mp.p = 1 + 0.05 * trial;
        PersistenceDiagram d;
        for (int i = 0; i < 10; ++i) {
            const double b = ub(rng);
            Pair q = finite(b, b + ul(rng));
            q.dim = 1;
            d[1].push_back(q);
        }
        mp.bins_per_axis = 1;
        const Grid probe = fit_grid(std::span(&d, 1), 1, mp);
        const double extent = std::max(probe.x_max - probe.x_min, probe.y_max - probe.y_min);
        mp.bins_per_axis = static_cast<std::size_t>(std::ceil(extent / (mp.sigma / 2)));
        const Grid grid = fit_grid(std::span(&d, 1), 1, mp);
        const auto pi = persistence_image(d, 1, grid, mp);
        double mass = 0.0, weight = 0.0;
        for (double v : pi.values) mass += v;
        mass *= grid.bin_width_x() * grid.bin_width_y();
        for (const Pair& q : d[1]) weight += std::atan(mp.C * std::pow(q.death - q.birth, mp.p));
        const double expect = 2 * std::numbers::pi * mp.sigma * mp.sigma * weight;
        worst = std::max(worst, std::abs(mass - expect) / expect);
    }
    ok = ok && worst < 0.02;
    return {ok, "centre error " + fmt("%.2e", err) + ", worst mass deviation " + fmt("%.3f%%", 100 * worst) +
                    " over 20 diagrams"};
}

Outcome nmf_checks() {
    std::mt19937_64 rng(505);
    int rises = 0;
    double worst_rise = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto V = uniform_matrix(20, 50, rng);
        NmfOptions opts;
        opts.seed = static_cast<std::uint64_t>(trial);
        for (NmfSolver s : {NmfSolver::Hals, NmfSolver::Multiplicative}) {
            opts.solver = s;
            const auto m = nmf(data(V), 4, opts);
            for (std::size_t i = 1; i < m.objective_trace.size(); ++i) {
                const double rise = m.objective_trace[i] - m.objective_trace[i - 1];
                worst_rise = std::max(worst_rise, rise);
                if (rise > 1e-12) ++rises;
            }
        }
    }
    // Rank-3 recovery on 50 x 100 products of uniform factors.
    int recovered = 0;
    double worst_err = 0.0;
    int max_iters = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd V = uniform_matrix(50, 3, rng) * uniform_matrix(3, 100, rng);
        NmfOptions opts;
        opts.seed = 1000 + static_cast<std::uint64_t>(trial);
        const auto m = nmf(data(V), 3, opts);
        worst_err = std::max(worst_err, m.error);
        max_iters = std::max(max_iters, m.iterations);
        if (m.error < 1e-3 && m.iterations <= 500) ++recovered;
    }
    return {rises == 0 && recovered == 10,
            std::to_string(rises) + " objective rises over 40 runs (largest " + fmt("%.1e", worst_rise) + "), rank-3 " +
                std::to_string(recovered) + "/10 recovered, worst error " + fmt("%.1e", worst_err) + " within " +
                std::to_string(max_iters) + " iterations"};
}

// Two families written one 32^3 cube per volume.
RunConfig family_run(const TempDir& dir, const fs::path& out) {
    RunConfig cfg;
    for (std::uint64_t s = 0; s < 16; ++s) {
        cfg.volumes.push_back(synth::write_volume(dir.path(), "a" + std::to_string(s),
                                                  synth::dense_small_balls({32, 32, 32}, 600 + s), "A", "dense"));
        cfg.volumes.push_back(synth::write_volume(dir.path(), "b" + std::to_string(s),
                                                  synth::sparse_large_blobs({32, 32, 32}, 700 + s), "B", "sparse"));
    }
    cfg.cube_edge = 32;
    cfg.pore_threshold = 1.0;
    cfg.components = 2;
    for (auto& p : cfg.pi) {
        p.sigma = 1.0;
        p.bins_per_axis = 32;
    }
    // Sparse cubes carry almost no image mass next to the dense ones, so
    // without per-block unit mass both components model the dense family.
    cfg.normalize_blocks = true;
    cfg.nmf.seed = 7;
    cfg.output_dir = out;
    return cfg;
}

Outcome discrimination(const TempDir& dir) {
    const auto t0 = Clock::now();
    const RunConfig cfg = family_run(dir, dir / "families");
    run_pipeline(cfg);
    const double t = seconds_since(t0);
    const RunLayout layout{cfg.output_dir};
    const auto coef = read_coefficients_csv(layout.coefficients());
    std::size_t agree = 0;
    for (std::size_t n = 0; n < coef.sample_ids.size(); ++n) {
        const auto row = coef.lambda.row(static_cast<Eigen::Index>(n));
        const int arg = row(1) > row(0) ? 1 : 0;
        agree += (arg == 0) == (coef.specimen_labels[n] == "A");
    }
    const std::size_t N = coef.sample_ids.size();
    const std::size_t best = std::max(agree, N - agree);
    const double rate = N ? static_cast<double>(best) / static_cast<double>(N) : 0.0;
    return {N >= 32 && rate >= 0.9 && t < 300,
            std::to_string(best) + "/" + std::to_string(N) + " cubes match their family, " + fmt("%.1f s", t)};
}

// Gaussian bump on a B x B block, flat index j * B + i.
std::vector<double> bump(std::size_t B, double ci, double cj, double w) {
    std::vector<double> v(B * B);
    for (std::size_t j = 0; j < B; ++j)
        for (std::size_t i = 0; i < B; ++i) {
            const double di = static_cast<double>(i) - ci, dj = static_cast<double>(j) - cj;
            v[j * B + i] = std::exp(-(di * di + dj * dj) / (2 * w * w));
        }
    return v;
}

Outcome confounding() {
    const std::size_t B = 16;
    const auto psi00 = bump(B, 3, 5, 1.5), psi01 = bump(B, 11, 13, 1.5);
    const auto psi10 = bump(B, 4, 10, 1.5), psi11 = bump(B, 12, 4, 1.5);
    const auto psi2 = bump(B, 8, 8, 2.0);
    const double alpha = 0.7, beta = 0.3;
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> u(0, 1);
    const Eigen::Index N = 60, F = static_cast<Eigen::Index>(3 * B * B);
    Eigen::MatrixXd V(N, F);
    for (Eigen::Index n = 0; n < N; ++n) {
        const double a = u(rng), b = u(rng);
        for (std::size_t f = 0; f < B * B; ++f) {
            const auto e = static_cast<Eigen::Index>(f);
            const auto bb = static_cast<Eigen::Index>(B * B);
            V(n, e) = a * psi00[f] + b * psi01[f];
            V(n, bb + e) = a * psi10[f] + b * psi11[f];
            V(n, 2 * bb + e) = (alpha * a + beta * b) * psi2[f];
        }
    }
    NmfOptions opts;
    opts.seed = 3;
    const auto model = nmf(data(V), 2, opts);
    const auto parts = split_components(model, {0, B * B, 2 * B * B, 3 * B * B});
    double worst = 1.0;
    for (const auto& p : parts) worst = std::min(worst, cosine(p.blocks[2], psi2));
    // The lower blocks separate cleanly, which is what hides the mixing in dim 2.
    const double sep = std::max(cosine(parts[0].blocks[0], psi00), cosine(parts[0].blocks[0], psi01));
    return {worst >= 0.9, "dim-2 blocks vs shared distribution: min cosine " + fmt("%.4f", worst) +
                              ", dim-0 block of component 0 vs nearest source " + fmt("%.4f", sep)};
}

Outcome determinism(const TempDir& dir) {
    const RunConfig a = family_run(dir, dir / "rerun_a");
    RunConfig b = a;
    b.output_dir = dir / "rerun_b";
    run_pipeline(a);
    run_pipeline(b);
    std::size_t files = 0, differ = 0;
    for (const auto& e : fs::recursive_directory_iterator(a.output_dir)) {
        if (e.path().extension() != ".csv") continue;
        ++files;
        const auto rel = fs::relative(e.path(), a.output_dir);
        if (synth::slurp(e.path()) != synth::slurp(b.output_dir / rel)) ++differ;
    }
    std::size_t files_b = 0;
    for (const auto& e : fs::recursive_directory_iterator(b.output_dir)) files_b += e.path().extension() == ".csv";
    return {files > 0 && differ == 0 && files == files_b,
            std::to_string(files - differ) + "/" + std::to_string(files) + " CSV files identical"};
}

Outcome scale() {
    const auto vol = synth::ball_microstructure({150, 150, 150}, 909);
    const auto t0 = Clock::now();
    const auto sv = signed_manhattan_sdt(vol);
    PersistenceDiagram pd = compute_persistence(FilteredComplex(sv));
    std::size_t pairs = 0;
    for (int k = 0; k < 3; ++k) {
        pairs += pd[k].size();
        PIParams params;
        if (pd.finite_count(k) == 0) continue;
        const Grid g = fit_grid(std::span(&pd, 1), k, params);
        (void)persistence_image(pd, k, g, params);
    }
    const double t = seconds_since(t0);
    rusage ru{};
    getrusage(RUSAGE_SELF, &ru);
    const double gb = static_cast<double>(ru.ru_maxrss) / (1024.0 * 1024.0);  // ru_maxrss is in KiB
    return {t < 600 && gb < 16, std::to_string(pairs) + " pairs, " + fmt("%.1f s", t) + ", peak RSS " +
                                    fmt("%.2f GiB", gb)};
}

}  // namespace

int main() {
    TempDir dir("phnmf_acceptance");
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"persistence matches naive reduction on 50 random 8^3 volumes", persistence_oracle},
        {"signed Manhattan SDT matches all-pairs search on 50 random 16^3 volumes", sdt_oracle},
        {"Euler characteristic identity on 20 random 6^3 volumes", euler_identity},
        {"persistence image closed form and mass", pi_closed_form},
        {"NMF objective monotone and rank-3 recovery", nmf_checks},
        {"dense vs sparse families separated by argmax component", [&] { return discrimination(dir); }},
        {"shared dim-2 distribution appears in both components", confounding},
        {"pipeline rerun gives identical CSV files", [&] { return determinism(dir); }},
        {"150^3 cube through SDT, persistence and images", scale},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed ? 1 : 0;
}
