// Arrays cross the boundary as (z, y, x) C-order numpy arrays, which is the
// library's x-fastest layout without a copy of the index order.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <iostream>
#include <limits>
#include <span>

#include "phnmf/config.hpp"
#include "phnmf/cubical_persistence.hpp"
#include "phnmf/distance_transform.hpp"
#include "phnmf/error.hpp"
#include "phnmf/factorize.hpp"
#include "phnmf/inverse_analysis.hpp"
#include "phnmf/pipeline.hpp"
#include "phnmf/vectorize.hpp"

namespace py = pybind11;
using namespace phnmf;

namespace {

template <typename T>
using CArray = py::array_t<T, py::array::c_style | py::array::forcecast>;

Shape shape_of(const py::buffer_info& info) {
    if (info.ndim != 3) throw ParameterError("expected a 3-d array indexed (z, y, x)");
    return {static_cast<std::size_t>(info.shape[2]), static_cast<std::size_t>(info.shape[1]),
            static_cast<std::size_t>(info.shape[0])};
}

BinaryVolume to_volume(const CArray<std::uint8_t>& mask) {
    const auto info = mask.request();
    BinaryVolume v(shape_of(info));
    const auto* p = static_cast<const std::uint8_t*>(info.ptr);
    for (std::size_t i = 0; i < v.mask.size(); ++i) v.mask[i] = p[i] ? 1 : 0;
    return v;
}

ScalarVolume to_scalar(const CArray<std::int32_t>& values) {
    const auto info = values.request();
    ScalarVolume sv(shape_of(info));
    const auto* p = static_cast<const std::int32_t*>(info.ptr);
    std::copy(p, p + sv.values.size(), sv.values.begin());
    return sv;
}

py::array_t<std::int32_t> from_scalar(const ScalarVolume& sv) {
    py::array_t<std::int32_t> out({sv.shape.nz, sv.shape.ny, sv.shape.nx});
    std::copy(sv.values.begin(), sv.values.end(), out.mutable_data());
    return out;
}

// (n, 2) birth/death table; essential classes have death = inf.
py::array_t<double> pair_table(const std::vector<Pair>& pairs) {
    py::array_t<double> out({pairs.size(), std::size_t{2}});
    auto r = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        r(i, 0) = pairs[i].birth;
        r(i, 1) = pairs[i].death;
    }
    return out;
}

std::vector<Pair> pairs_from_table(const CArray<double>& table, int k) {
    const auto info = table.request();
    if (info.size == 0) return {};
    if (info.ndim != 2 || info.shape[1] != 2) throw ParameterError("pair table must have shape (n, 2)");
    auto r = table.unchecked<2>();
    std::vector<Pair> out;
    for (py::ssize_t i = 0; i < r.shape(0); ++i) {
        Pair p;
        p.dim = k;
        p.birth = r(i, 0);
        p.death = r(i, 1);
        if (std::isfinite(p.death)) p.death_cell = Cell{};
        out.push_back(p);
    }
    return out;
}

PersistenceDiagram diagram_from_tables(const std::vector<CArray<double>>& tables) {
    if (tables.size() != 3) throw ParameterError("a diagram is three pair tables, one per dimension");
    PersistenceDiagram pd;
    for (int k = 0; k < 3; ++k) pd[k] = pairs_from_table(tables[static_cast<std::size_t>(k)], k);
    return pd;
}

Stage stage_from_string(const std::string& s) {
    for (Stage st : {Stage::Sdt, Stage::Pd, Stage::Pi, Stage::Nmf, Stage::Invert, Stage::Plot})
        if (s == to_string(st)) return st;
    throw ParameterError("unknown stage '" + s + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Persistent homology of voxel volumes, persistence images and NMF";
    m.attr("__version__") = PHNMF_VERSION;

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<ConsistencyError>(m, "ConsistencyError", base.ptr());
    py::register_exception<UnsupportedPairError>(m, "UnsupportedPairError", base.ptr());
    py::register_exception<EmptyFeatureError>(m, "EmptyFeatureError", base.ptr());
    py::register_exception<LookupError>(m, "LookupError", base.ptr());
    py::register_exception<StageError>(m, "StageError", base.ptr());

    m.def(
        "signed_distance",
        [](const CArray<std::uint8_t>& mask, bool foreground_negative) {
            const BinaryVolume v = to_volume(mask);
            ScalarVolume sv;
            {
                py::gil_scoped_release release;
                sv = signed_manhattan_sdt(
                    v, foreground_negative ? Polarity::ForegroundNegative : Polarity::BackgroundNegative);
            }
            return from_scalar(sv);
        },
        py::arg("mask"), py::arg("foreground_negative") = true,
        "Signed Manhattan distance of a (z, y, x) mask; nonzero entries are foreground.");

    m.def(
        "persistence",
        [](const CArray<std::int32_t>& values) {
            ScalarVolume sv = to_scalar(values);
            PersistenceDiagram pd;
            {
                py::gil_scoped_release release;
                pd = compute_persistence(FilteredComplex(std::move(sv)));
            }
            py::list out;
            for (int k = 0; k < 3; ++k) out.append(pair_table(pd[k]));
            return out;
        },
        py::arg("values"),
        "Sublevel persistence of a (z, y, x) int32 volume: three (n, 2) birth/death arrays for dims 0, 1, 2.");

    py::class_<PIParams>(m, "PIParams")
        .def(py::init([](double sigma, double C, double p, std::size_t bins) {
                 PIParams params{sigma, C, p, bins};
                 params.validate();
                 return params;
             }),
             py::arg("sigma") = 2.0, py::arg("C") = 1.0, py::arg("p") = 1.0, py::arg("bins") = 64)
        .def_readwrite("sigma", &PIParams::sigma)
        .def_readwrite("C", &PIParams::C)
        .def_readwrite("p", &PIParams::p)
        .def_readwrite("bins", &PIParams::bins_per_axis);

    py::class_<Grid>(m, "Grid")
        .def(py::init([](double x_min, double x_max, double y_min, double y_max, std::size_t bins) {
                 return Grid{x_min, x_max, y_min, y_max, bins};
             }),
             py::arg("x_min"), py::arg("x_max"), py::arg("y_min"), py::arg("y_max"), py::arg("bins"))
        .def_readonly("x_min", &Grid::x_min)
        .def_readonly("x_max", &Grid::x_max)
        .def_readonly("y_min", &Grid::y_min)
        .def_readonly("y_max", &Grid::y_max)
        .def_readonly("bins", &Grid::bins)
        .def("bin_of", &Grid::bin_of, py::arg("birth"), py::arg("death"))
        .def("__eq__", [](const Grid& a, const Grid& b) { return a == b; })
        .def("__repr__", [](const Grid& g) {
            return "Grid(" + std::to_string(g.x_min) + ", " + std::to_string(g.x_max) + ", " +
                   std::to_string(g.y_min) + ", " + std::to_string(g.y_max) + ", " + std::to_string(g.bins) + ")";
        });

    m.def(
        "fit_grid",
        [](const std::vector<std::vector<CArray<double>>>& diagrams, int k, const PIParams& params) {
            std::vector<PersistenceDiagram> pds;
            for (const auto& d : diagrams) pds.push_back(diagram_from_tables(d));
            return fit_grid(pds, k, params);
        },
        py::arg("diagrams"), py::arg("k"), py::arg("params"),
        "Shared grid over the finite dimension-k pairs of several diagrams.");

    m.def(
        "persistence_image",
        [](const CArray<double>& pairs, const Grid& grid, const PIParams& params) {
            PersistenceDiagram pd;
            pd[0] = pairs_from_table(pairs, 0);
            const auto pi = persistence_image(pd, 0, grid, params);
            py::array_t<double> out({grid.bins, grid.bins});  // [death bin, birth bin]
            std::copy(pi.values.begin(), pi.values.end(), out.mutable_data());
            return out;
        },
        py::arg("pairs"), py::arg("grid"), py::arg("params"),
        "Persistence image of one (n, 2) pair table as a (bins, bins) array indexed [death, birth].");

    m.def(
        "nmf",
        [](const Eigen::MatrixXd& V, std::size_t M, std::uint64_t seed, int max_iter, double rel_tol,
           const std::string& solver, int inner_updates) {
            DataMatrix data;
            data.values = V;
            for (Eigen::Index i = 0; i < V.rows(); ++i) data.sample_ids.push_back(static_cast<std::size_t>(i));
            NmfOptions opts{seed, max_iter, rel_tol, nmf_solver_from_string(solver), inner_updates};
            FactorModel model;
            {
                py::gil_scoped_release release;
                model = nmf(data, M, opts);
            }
            py::dict out;
            out["coefficients"] = model.coefficients;
            out["basis"] = model.basis;
            out["error"] = model.error;
            out["iterations"] = model.iterations;
            out["objective_trace"] = model.objective_trace;
            return out;
        },
        py::arg("V"), py::arg("M"), py::arg("seed") = 0, py::arg("max_iter") = 500, py::arg("rel_tol") = 1e-6,
        py::arg("solver") = "hals", py::arg("inner_updates") = 5,
        "Nonnegative factorization V ~ coefficients @ basis. Returns a dict.");

    m.def(
        "feature_region",
        [](const CArray<double>& block, const Grid& grid, double q) {
            const auto info = block.request();
            std::span<const double> values(static_cast<const double*>(info.ptr), static_cast<std::size_t>(info.size));
            const FeatureRegion r = feature_region(values, 0, grid, q);
            return py::make_tuple(r.bins, r.captured);
        },
        py::arg("block"), py::arg("grid"), py::arg("q"),
        "Smallest set of bins holding at least fraction q of the block mass: (flat bin indices, captured fraction).");

    py::class_<RunConfig>(m, "RunConfig")
        .def_property(
            "output_dir", [](const RunConfig& c) { return c.output_dir; },
            [](RunConfig& c, const std::filesystem::path& p) { c.output_dir = p; })
        .def_property(
            "seed", [](const RunConfig& c) { return c.nmf.seed; }, [](RunConfig& c, std::uint64_t s) { c.nmf.seed = s; })
        .def_readwrite("components", &RunConfig::components)
        .def_readwrite("cube_edge", &RunConfig::cube_edge)
        .def_readwrite("threads", &RunConfig::threads)
        .def("to_json", [](const RunConfig& c) { return config_json(c); });

    m.def(
        "load_config",
        [](const std::filesystem::path& path) {
            RunConfig cfg = load_config(path);
            cfg.validate();
            return cfg;
        },
        py::arg("path"), "Reads and validates a JSON run configuration.");

    m.def(
        "run_stage",
        [](const RunConfig& cfg, const std::string& stage, bool verbose) {
            py::gil_scoped_release release;
            run_stage(cfg, stage_from_string(stage), verbose ? &std::cerr : nullptr);
        },
        py::arg("config"), py::arg("stage"), py::arg("verbose") = false,
        "Runs one of sdt, pd, pi, nmf, invert, plot.");

    m.def(
        "run_pipeline",
        [](const RunConfig& cfg, bool verbose) {
            py::gil_scoped_release release;
            run_pipeline(cfg, verbose ? &std::cerr : nullptr);
        },
        py::arg("config"), py::arg("verbose") = false, "Runs every stage in order.");
}
