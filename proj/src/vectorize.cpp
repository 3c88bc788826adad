#include "phnmf/vectorize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "phnmf/error.hpp"

namespace phnmf {

void PIParams::validate() const {
    if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
    if (!(C > 0.0)) throw ParameterError("C must be positive");
    if (!(p >= 1.0)) throw ParameterError("p must be at least 1");
    if (bins_per_axis == 0) throw ParameterError("bins_per_axis must be positive");
}

std::optional<std::size_t> Grid::bin_of(double birth, double death) const noexcept {
    if (!(birth >= x_min && birth <= x_max && death >= y_min && death <= y_max)) return std::nullopt;
    auto index = [this](double v, double lo, double width) {
        const auto i = static_cast<std::size_t>(std::floor((v - lo) / width));
        return std::min(i, bins - 1);
    };
    return index(death, y_min, bin_width_y()) * bins + index(birth, x_min, bin_width_x());
}

double pair_weight(double birth, double death, const PIParams& params) {
    const double persistence = death - birth;
    if (persistence <= 0.0) return 0.0;
    return std::atan(params.C * std::pow(persistence, params.p));
}

Grid fit_grid(std::span<const PersistenceDiagram> diagrams, int k, const PIParams& params) {
    params.validate();
    if (k < 0 || k > 2) throw ParameterError("homology dimension must be 0, 1 or 2");
    double bmin = std::numeric_limits<double>::infinity(), bmax = -bmin;
    double dmin = bmin, dmax = -bmin;
    bool any = false;
    for (const auto& pd : diagrams)
        for (const Pair& p : pd[k]) {
            if (p.essential()) continue;
            any = true;
            bmin = std::min(bmin, p.birth);
            bmax = std::max(bmax, p.birth);
            dmin = std::min(dmin, p.death);
            dmax = std::max(dmax, p.death);
        }
    if (!any) throw EmptyFeatureError("no finite pairs in dimension " + std::to_string(k));
    const double pad = 3.0 * params.sigma;
    Grid g;
    g.x_min = bmin - pad;
    g.x_max = bmax + pad;
    g.y_min = dmin - pad;
    g.y_max = dmax + pad;
    g.bins = params.bins_per_axis;
    return g;
}

PersistenceImage persistence_image(const PersistenceDiagram& pd, int k, const Grid& grid, const PIParams& params) {
    params.validate();
    if (k < 0 || k > 2) throw ParameterError("homology dimension must be 0, 1 or 2");
    PersistenceImage pi;
    pi.sample_id = pd.sample_id;
    pi.dim = k;
    pi.grid = grid;
    pi.values.assign(grid.size(), 0.0);

    // The Gaussian factorises over the two axes, so each pair costs two
    // B-length exp sweeps plus one outer product.
    const std::size_t B = grid.bins;
    const double inv = 1.0 / (2.0 * params.sigma * params.sigma);
    std::vector<double> gx(B), gy(B);
    for (const Pair& p : pd[k]) {
        if (p.essential()) continue;
        const double w = pair_weight(p.birth, p.death, params);
        if (w == 0.0) continue;
        for (std::size_t i = 0; i < B; ++i) {
            const double dx = grid.x_center(i) - p.birth;
            gx[i] = std::exp(-dx * dx * inv);
        }
        for (std::size_t j = 0; j < B; ++j) {
            const double dy = grid.y_center(j) - p.death;
            gy[j] = w * std::exp(-dy * dy * inv);
        }
        for (std::size_t j = 0; j < B; ++j) {
            if (gy[j] == 0.0) continue;
            double* row = pi.values.data() + j * B;
            for (std::size_t i = 0; i < B; ++i) row[i] += gy[j] * gx[i];
        }
    }
    return pi;
}

void normalize_unit_mass(PersistenceImage& pi) {
    const double mass = std::accumulate(pi.values.begin(), pi.values.end(), 0.0);
    if (mass <= 0.0) return;
    for (double& v : pi.values) v /= mass;
}

ConcatVector concatenate(const PersistenceImage& pi0, const PersistenceImage& pi1, const PersistenceImage& pi2) {
    if (pi0.sample_id != pi1.sample_id || pi0.sample_id != pi2.sample_id)
        throw ConsistencyError("cannot concatenate images of different samples");
    if (pi0.dim != 0 || pi1.dim != 1 || pi2.dim != 2)
        throw ConsistencyError("images must be given in dimension order 0, 1, 2");
    ConcatVector cv;
    cv.sample_id = pi0.sample_id;
    cv.offsets = {0, pi0.values.size(), pi0.values.size() + pi1.values.size(),
                  pi0.values.size() + pi1.values.size() + pi2.values.size()};
    cv.values.reserve(cv.offsets[3]);
    for (const auto* pi : {&pi0, &pi1, &pi2}) cv.values.insert(cv.values.end(), pi->values.begin(), pi->values.end());
    return cv;
}

}  // namespace phnmf
