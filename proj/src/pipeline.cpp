#include "phnmf/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <thread>

#include <json.hpp>

#include "phnmf/cubical_persistence.hpp"
#include "phnmf/error.hpp"
#include "phnmf/figures.hpp"
#include "phnmf/inverse_analysis.hpp"
#include "phnmf/stage_io.hpp"

#ifndef PHNMF_VERSION
#define PHNMF_VERSION "unknown"
#endif

namespace phnmf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void note(std::ostream* log, Stage s, const std::string& msg) {
    if (log) *log << "[" << to_string(s) << "] " << msg << '\n';
}

// Fresh directory for a stage's per-sample files; stale files from an
// earlier run with another sample set would otherwise linger.
void reset_dir(const fs::path& dir) {
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::create_directories(dir);
}

std::vector<SampleRecord> kept_samples(const RunLayout& layout) {
    std::vector<SampleRecord> out;
    for (auto& s : read_samples_csv(layout.samples()))
        if (s.kept) out.push_back(std::move(s));
    return out;
}

// Runs fn(i) in parallel and tags a failure with the sample id.
void for_each_sample(const std::vector<SampleRecord>& samples, unsigned threads,
                     const std::function<void(std::size_t)>& fn) {
    parallel_for(samples.size(), threads, [&](std::size_t i) {
        try {
            fn(i);
        } catch (const std::exception& e) {
            throw Error("sample " + std::to_string(samples[i].id) + ": " + e.what());
        }
    });
}

std::string polarity_name(Polarity p) {
    return p == Polarity::ForegroundNegative ? "foreground_negative" : "background_negative";
}

void write_sdt_sidecar(const fs::path& path, const Shape& shape, Polarity polarity) {
    const json j = {{"shape", {shape.nx, shape.ny, shape.nz}}, {"dtype", "int32le"}, {"polarity", polarity_name(polarity)}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

Shape read_sdt_sidecar(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        const json j = json::parse(in);
        const auto dims = j.at("shape").get<std::vector<std::size_t>>();
        if (dims.size() != 3 || j.at("dtype").get<std::string>() != "int32le")
            throw FormatError(path.string() + ": expected a three-entry shape and dtype int32le");
        return {dims[0], dims[1], dims[2]};
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

ScalarVolume load_sdt(const RunLayout& layout, const SampleRecord& s) {
    const Shape shape = read_sdt_sidecar(layout.sdt_sidecar(s.id));
    if (!(shape == Shape{s.edge, s.edge, s.edge}))
        throw ConsistencyError("distance transform shape does not match the cube edge in the samples file");
    return load_scalar_volume(layout.sdt_file(s.id), shape);
}

void stage_sdt(const RunConfig& cfg, const RunLayout& layout, std::ostream* log) {
    std::vector<SampleRecord> records;
    reset_dir(layout.sdt_dir());
    for (std::size_t v = 0; v < cfg.volumes.size(); ++v) {
        const VolumeEntry& entry = cfg.volumes[v];
        BinaryVolume vol;
        try {
            vol = load_volume(entry.path, entry.meta);
        } catch (const std::exception& e) {
            throw Error("volume " + std::to_string(v) + " (" + entry.path.string() + "): " + e.what());
        }
        auto cubes = partition_cubes(vol, cfg.cube_edge, entry.specimen_label, records.size());
        vol = BinaryVolume();
        std::vector<SampleRecord> kept;
        std::vector<CubeSample*> kept_cubes;
        for (auto& c : cubes) {
            SampleRecord r{c.id, entry.specimen_label, entry.stage_label, v, c.origin, cfg.cube_edge,
                           c.pore_fraction, c.pore_fraction <= cfg.pore_threshold};
            if (r.kept) {
                kept.push_back(r);
                kept_cubes.push_back(&c);
            }
            records.push_back(std::move(r));
        }
        for_each_sample(kept, cfg.threads, [&](std::size_t i) {
            const ScalarVolume sv = signed_manhattan_sdt(kept_cubes[i]->volume, cfg.polarity);
            save_scalar_volume(layout.sdt_file(kept[i].id), sv);
            write_sdt_sidecar(layout.sdt_sidecar(kept[i].id), sv.shape, cfg.polarity);
        });
        note(log, Stage::Sdt,
             "volume " + std::to_string(v) + ": " + std::to_string(cubes.size()) + " cubes, " +
                 std::to_string(kept.size()) + " kept");
    }
    write_samples_csv(layout.samples(), records);
}

void stage_pd(const RunConfig& cfg, const RunLayout& layout, std::ostream* log) {
    const auto samples = kept_samples(layout);
    reset_dir(layout.diagram_dir());
    for_each_sample(samples, cfg.threads, [&](std::size_t i) {
        const FilteredComplex fc(load_sdt(layout, samples[i]));
        CubicalPersistence cp(fc);
        PersistenceDiagram pd = cp.diagram();
        pd.sample_id = samples[i].id;
        write_diagram_csv(layout.diagram(samples[i].id), pd);
    });
    note(log, Stage::Pd, std::to_string(samples.size()) + " diagrams");
}

void stage_pi(const RunConfig& cfg, const RunLayout& layout, std::ostream* log) {
    const auto samples = kept_samples(layout);
    if (samples.empty()) throw Error("no cubes left after pore filtering");
    std::vector<PersistenceDiagram> diagrams(samples.size());
    for_each_sample(samples, cfg.threads,
                    [&](std::size_t i) { diagrams[i] = read_diagram_csv(layout.diagram(samples[i].id), samples[i].id); });

    GridSet gs;
    for (int k = 0; k < 3; ++k) {
        try {
            gs.grids[k] = fit_grid(diagrams, k, cfg.pi[k]);
        } catch (const EmptyFeatureError&) {
            gs.grids[k] = Grid{0.0, 1.0, 0.0, 1.0, cfg.pi[k].bins_per_axis};
            gs.empty[k] = true;
            note(log, Stage::Pi, "dimension " + std::to_string(k) + " has no finite pairs; its block is zero");
        }
        gs.offsets[k + 1] = gs.offsets[k] + gs.grids[k].size();
    }

    std::array<FeatureTable, 3> images;
    FeatureTable concat;
    for (auto& t : images) {
        t.rows.resize(samples.size());
        for (const auto& s : samples) t.sample_ids.push_back(s.id);
    }
    concat.sample_ids = images[0].sample_ids;
    concat.rows.resize(samples.size());
    for_each_sample(samples, cfg.threads, [&](std::size_t i) {
        std::array<PersistenceImage, 3> pis;
        for (int k = 0; k < 3; ++k) {
            pis[k] = persistence_image(diagrams[i], k, gs.grids[k], cfg.pi[k]);
            if (cfg.normalize_blocks) normalize_unit_mass(pis[k]);
            images[k].rows[i] = pis[k].values;
        }
        concat.rows[i] = concatenate(pis[0], pis[1], pis[2]).values;
    });
    for (int k = 0; k < 3; ++k) write_feature_csv(layout.pi(k), images[k]);
    write_feature_csv(layout.concat(), concat);
    write_grids_json(layout.grids(), gs);
    note(log, Stage::Pi, std::to_string(samples.size()) + " concatenated vectors of length " + std::to_string(gs.offsets[3]));
}

void stage_nmf(const RunConfig& cfg, const RunLayout& layout, std::ostream* log) {
    const auto samples = kept_samples(layout);
    const FeatureTable table = read_feature_csv(layout.concat());
    std::vector<std::size_t> expected;
    for (const auto& s : samples) expected.push_back(s.id);
    if (table.sample_ids != expected) throw ConsistencyError("concat.csv rows do not match the kept samples");
    const GridSet gs = read_grids_json(layout.grids());

    DataMatrix V;
    V.sample_ids = table.sample_ids;
    const auto F = static_cast<Eigen::Index>(table.rows.empty() ? 0 : table.rows.front().size());
    if (static_cast<std::size_t>(F) != gs.offsets[3]) throw ConsistencyError("concat.csv width does not match grids.json");
    V.values.resize(static_cast<Eigen::Index>(table.rows.size()), F);
    for (std::size_t n = 0; n < table.rows.size(); ++n)
        for (Eigen::Index f = 0; f < F; ++f) V.values(static_cast<Eigen::Index>(n), f) = table.rows[n][static_cast<std::size_t>(f)];

    const FactorModel model = nmf(V, cfg.components, cfg.nmf);
    split_components(model, gs.offsets);  // layout check

    CoefficientTable coef;
    coef.sample_ids = table.sample_ids;
    for (const auto& s : samples) coef.specimen_labels.push_back(s.specimen_label);
    coef.lambda = model.coefficients;
    write_coefficients_csv(layout.coefficients(), coef);
    write_basis_csv(layout.basis(), model.basis);

    const json summary = {{"components", model.components},
                          {"seed", model.seed},
                          {"solver", to_string(cfg.nmf.solver)},
                          {"iterations", model.iterations},
                          {"relative_error", model.error},
                          {"objective_trace", model.objective_trace}};
    std::ofstream out(layout.nmf_summary(), std::ios::binary);
    if (!out) throw IoError("cannot write " + layout.nmf_summary().string());
    out << summary.dump(2) << '\n';
    note(log, Stage::Nmf,
         "M = " + std::to_string(model.components) + ", " + std::to_string(model.iterations) +
             " iterations, relative error " + std::to_string(model.error));
}

void stage_invert(const RunConfig& cfg, const RunLayout& layout, std::ostream* log) {
    const auto samples = kept_samples(layout);
    const GridSet gs = read_grids_json(layout.grids());
    const CoefficientTable coef = read_coefficients_csv(layout.coefficients());
    FactorModel model;
    model.basis = read_basis_csv(layout.basis());
    model.coefficients = coef.lambda;
    if (model.basis.rows() != coef.lambda.cols()) throw ConsistencyError("basis.csv and coefficients.csv disagree on M");
    const auto cfds = split_components(model, gs.offsets);
    std::map<std::size_t, std::size_t> index_of;  // sample id -> position in samples
    for (std::size_t i = 0; i < samples.size(); ++i) index_of[samples[i].id] = i;

    // Regions per component and dimension; nullopt when the block is empty.
    std::vector<std::array<std::optional<FeatureRegion>, 3>> regions(cfds.size());
    for (std::size_t m = 0; m < cfds.size(); ++m)
        for (int k = 0; k < 3; ++k) {
            if (gs.empty[k]) continue;
            try {
                regions[m][k] = feature_region(cfds[m].blocks[k], k, gs.grids[k], cfg.inverse.q);
            } catch (const EmptyFeatureError&) {
            }
        }

    // Highest-coefficient samples per component (ties: lower id first).
    std::vector<std::vector<std::size_t>> chosen(cfds.size());
    std::set<std::size_t> needed;
    for (std::size_t m = 0; m < cfds.size(); ++m) {
        std::vector<std::size_t> rows(coef.sample_ids.size());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        const auto col = static_cast<Eigen::Index>(m);
        std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
            return coef.lambda(static_cast<Eigen::Index>(a), col) > coef.lambda(static_cast<Eigen::Index>(b), col);
        });
        rows.resize(std::min(rows.size(), cfg.inverse.samples_per_component));
        for (std::size_t r : rows) {
            const auto it = index_of.find(coef.sample_ids[r]);
            if (it == index_of.end()) throw LookupError("sample " + std::to_string(coef.sample_ids[r]) + " is not a kept sample");
            chosen[m].push_back(it->second);
            needed.insert(it->second);
        }
    }

    const std::vector<std::size_t> work(needed.begin(), needed.end());
    std::vector<SampleRecord> work_samples;
    for (std::size_t i : work) work_samples.push_back(samples[i]);
    // reports[w][m] holds the reports of sample work[w] for component m.
    std::vector<std::vector<std::vector<OriginReport>>> reports(work.size());
    for_each_sample(work_samples, cfg.threads, [&](std::size_t w) {
        const SampleRecord& rec = work_samples[w];
        const FilteredComplex fc(load_sdt(layout, rec));
        const CubicalPersistence cp(fc);
        CubeSample cube;
        cube.id = rec.id;
        cube.origin = rec.origin;
        cube.specimen_label = rec.specimen_label;
        cube.stage_label = rec.stage_label;
        cube.pore_fraction = rec.pore_fraction;
        cube.volume.shape = fc.shape();
        reports[w].resize(cfds.size());
        for (std::size_t m = 0; m < cfds.size(); ++m) {
            if (std::find(chosen[m].begin(), chosen[m].end(), work[w]) == chosen[m].end()) continue;
            for (int k = 0; k < 3; ++k) {
                if (!regions[m][k]) continue;
                auto pairs = select_pairs(cp.diagram(), *regions[m][k]);
                if (pairs.size() > cfg.inverse.pairs_per_sample) pairs.resize(cfg.inverse.pairs_per_sample);
                for (const Pair& p : pairs) reports[w][m].push_back(locate_origin(cube, cp, p, m));
            }
        }
    });

    std::vector<OriginReport> ordered;
    for (std::size_t m = 0; m < cfds.size(); ++m)
        for (std::size_t i : chosen[m]) {
            const auto w = static_cast<std::size_t>(std::lower_bound(work.begin(), work.end(), i) - work.begin());
            for (auto& r : reports[w][m]) ordered.push_back(std::move(r));
        }
    write_origin_csv(layout.origins(), layout.origin_cycles(), ordered);
    note(log, Stage::Invert, std::to_string(ordered.size()) + " origin reports");
}

void stage_plot(const RunConfig&, const RunLayout& layout, std::ostream* log) {
    reset_dir(layout.plot_dir());
    const CoefficientTable coef = read_coefficients_csv(layout.coefficients());
    const auto M = static_cast<std::size_t>(coef.lambda.cols());
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = i + 1; j < M; ++j)
            emit_scatter(layout.coefficients(), layout.samples(), i, j,
                         layout.plot_dir() / ("scatter_" + std::to_string(i) + "_" + std::to_string(j) + ".svg"));
    const GridSet gs = read_grids_json(layout.grids());
    const Eigen::MatrixXd basis = read_basis_csv(layout.basis());
    if (static_cast<std::size_t>(basis.cols()) != gs.offsets[3]) throw ConsistencyError("basis.csv width does not match grids.json");
    for (Eigen::Index m = 0; m < basis.rows(); ++m) {
        const Eigen::VectorXd row = basis.row(m).transpose();
        for (int k = 0; k < 3; ++k) {
            const std::span<const double> block(row.data() + gs.offsets[k], gs.offsets[k + 1] - gs.offsets[k]);
            emit_feature_heatmap(block, gs.grids[k],
                                 layout.plot_dir() / ("cfd_" + std::to_string(m) + "_dim" + std::to_string(k) + ".pgm"));
        }
    }
    note(log, Stage::Plot, std::to_string(M * (M - 1) / 2) + " scatters, " + std::to_string(3 * basis.rows()) + " heatmaps");
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace

const char* to_string(Stage s) noexcept {
    switch (s) {
        case Stage::Sdt: return "sdt";
        case Stage::Pd: return "pd";
        case Stage::Pi: return "pi";
        case Stage::Nmf: return "nmf";
        case Stage::Invert: return "invert";
        case Stage::Plot: return "plot";
    }
    return "?";
}

fs::path RunLayout::sdt_file(std::size_t id) const { return sdt_dir() / (sample_stem(id) + ".i32"); }
fs::path RunLayout::sdt_sidecar(std::size_t id) const { return sdt_dir() / (sample_stem(id) + ".json"); }
fs::path RunLayout::diagram(std::size_t id) const { return diagram_dir() / (sample_stem(id) + ".csv"); }

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
    const std::size_t workers = std::min<std::size_t>(threads, n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto body = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        body();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

void run_stage(const RunConfig& cfg, Stage stage, std::ostream* log) {
    const RunLayout layout{cfg.output_dir};
    try {
        if (stage == Stage::Sdt) cfg.validate();
        fs::create_directories(layout.root);
        switch (stage) {
            case Stage::Sdt: stage_sdt(cfg, layout, log); break;
            case Stage::Pd: stage_pd(cfg, layout, log); break;
            case Stage::Pi: stage_pi(cfg, layout, log); break;
            case Stage::Nmf: stage_nmf(cfg, layout, log); break;
            case Stage::Invert: stage_invert(cfg, layout, log); break;
            case Stage::Plot: stage_plot(cfg, layout, log); break;
        }
        write_manifest(cfg);
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(to_string(stage), e.what());
    }
}

void run_pipeline(const RunConfig& cfg, std::ostream* log) {
    for (Stage s : {Stage::Sdt, Stage::Pd, Stage::Pi, Stage::Nmf, Stage::Invert, Stage::Plot}) run_stage(cfg, s, log);
}

void write_manifest(const RunConfig& cfg) {
    const RunLayout layout{cfg.output_dir};
    json m;
    m["tool"] = "phnmf";
    m["version"] = PHNMF_VERSION;
    m["config"] = json::parse(config_json(cfg));
    m["seed"] = cfg.nmf.seed;

    json outputs = json::object();
    auto list = [&](const char* stage, const std::vector<fs::path>& files) {
        json present = json::array();
        for (const auto& f : files)
            if (fs::exists(f)) present.push_back(fs::relative(f, layout.root).generic_string());
        if (!present.empty()) outputs[stage] = present;
    };
    auto dir_files = [](const fs::path& dir) {
        std::vector<fs::path> files;
        if (fs::is_directory(dir))
            for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        return files;
    };

    if (fs::exists(layout.samples())) {
        json samples = json::array();
        for (const auto& s : read_samples_csv(layout.samples()))
            samples.push_back({{"id", s.id},
                               {"specimen_label", s.specimen_label},
                               {"stage_label", s.stage_label},
                               {"volume", s.volume},
                               {"origin", s.origin},
                               {"edge", s.edge},
                               {"pore_fraction", s.pore_fraction},
                               {"kept", s.kept}});
        m["samples"] = samples;
        auto files = dir_files(layout.sdt_dir());
        files.insert(files.begin(), layout.samples());
        list("sdt", files);
    }
    list("pd", dir_files(layout.diagram_dir()));
    if (fs::exists(layout.grids())) m["grids"] = read_json_file(layout.grids());
    list("pi", {layout.grids(), layout.pi(0), layout.pi(1), layout.pi(2), layout.concat()});
    if (fs::exists(layout.nmf_summary())) {
        json s = read_json_file(layout.nmf_summary());
        s["objective_trace_length"] = s["objective_trace"].size();
        s.erase("objective_trace");
        m["nmf"] = s;
    }
    list("nmf", {layout.coefficients(), layout.basis(), layout.nmf_summary()});
    list("invert", {layout.origins(), layout.origin_cycles()});
    list("plot", dir_files(layout.plot_dir()));
    m["outputs"] = outputs;

    std::ofstream out(layout.manifest(), std::ios::binary);
    if (!out) throw IoError("cannot write " + layout.manifest().string());
    out << m.dump(2) << '\n';
}

}  // namespace phnmf
