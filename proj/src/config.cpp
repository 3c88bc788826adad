#include "phnmf/config.hpp"

#include <fstream>
#include <iterator>

#include <json.hpp>

#include "phnmf/error.hpp"

namespace phnmf {

namespace {

using nlohmann::json;

// Rejects keys outside the allowed set; where names the enclosing object.
void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw FormatError(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) throw FormatError(where + ": unknown key '" + key + "'");
    }
}

template <class T>
void read_if(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(where + "." + key + ": " + e.what());
    }
}

void check_label(const std::string& label, const std::string& where) {
    if (label.find_first_of(",\"\n\r") != std::string::npos)
        throw ParameterError(where + ": labels must not contain commas, quotes or line breaks");
}

PIParams parse_pi(const json& obj, const std::string& where) {
    check_keys(obj, {"sigma", "C", "p", "bins"}, where);
    PIParams p;
    read_if(obj, "sigma", p.sigma, where);
    read_if(obj, "C", p.C, where);
    read_if(obj, "p", p.p, where);
    read_if(obj, "bins", p.bins_per_axis, where);
    return p;
}

json pi_json(const PIParams& p) { return {{"sigma", p.sigma}, {"C", p.C}, {"p", p.p}, {"bins", p.bins_per_axis}}; }

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path.lexically_normal() : (base / path).lexically_normal();
}

}  // namespace

void RunConfig::validate() const {
    if (volumes.empty()) throw ParameterError("config lists no volumes");
    for (const auto& v : volumes) {
        v.meta.validate();
        if (!std::filesystem::is_regular_file(v.path)) throw IoError("volume file not found: " + v.path.string());
        check_label(v.specimen_label, "specimen_label");
        check_label(v.stage_label, "stage_label");
    }
    if (cube_edge == 0) throw ParameterError("cube_edge must be positive");
    if (!(pore_threshold >= 0.0 && pore_threshold <= 1.0)) throw ParameterError("pore_threshold must lie in [0,1]");
    for (const auto& p : pi) p.validate();
    if (components == 0) throw ParameterError("components must be positive");
    if (nmf.max_iter < 0) throw ParameterError("nmf.max_iter must be nonnegative");
    if (!(nmf.rel_tol >= 0.0)) throw ParameterError("nmf.rel_tol must be nonnegative");
    if (nmf.inner_updates < 1) throw ParameterError("nmf.inner_updates must be at least 1");
    if (!(inverse.q > 0.0 && inverse.q <= 1.0)) throw ParameterError("inverse.q must lie in (0,1]");
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    check_keys(root,
               {"volumes", "cube_edge", "pore_threshold", "polarity", "pi", "normalize_blocks", "components", "nmf",
                "inverse", "threads", "output_dir"},
               "config");

    RunConfig cfg;
    if (!root.contains("volumes") || !root["volumes"].is_array()) throw FormatError("config: 'volumes' must be a list");
    std::size_t index = 0;
    for (const json& v : root["volumes"]) {
        const std::string where = "volumes[" + std::to_string(index++) + "]";
        check_keys(v, {"path", "meta", "specimen_label", "stage_label"}, where);
        if (!v.contains("path") || !v.contains("meta")) throw FormatError(where + ": 'path' and 'meta' are required");
        VolumeEntry e;
        std::string path;
        read_if(v, "path", path, where);
        e.path = resolve(base_dir, path);
        const json& meta = v["meta"];
        if (meta.is_string())
            e.meta = read_sidecar(resolve(base_dir, meta.get<std::string>()));
        else
            e.meta = parse_sidecar(meta.dump(), where + ".meta");
        e.specimen_label = e.meta.specimen_label;
        read_if(v, "specimen_label", e.specimen_label, where);
        read_if(v, "stage_label", e.stage_label, where);
        cfg.volumes.push_back(std::move(e));
    }

    read_if(root, "cube_edge", cfg.cube_edge, "config");
    read_if(root, "pore_threshold", cfg.pore_threshold, "config");
    if (root.contains("polarity")) {
        std::string p;
        read_if(root, "polarity", p, "config");
        if (p == "foreground_negative")
            cfg.polarity = Polarity::ForegroundNegative;
        else if (p == "background_negative")
            cfg.polarity = Polarity::BackgroundNegative;
        else
            throw FormatError("config.polarity: expected foreground_negative or background_negative");
    }
    if (root.contains("pi")) {
        const json& pi = root["pi"];
        if (pi.is_array()) {
            if (pi.size() != 3) throw FormatError("config.pi: a list must hold one entry per dimension 0, 1, 2");
            for (int k = 0; k < 3; ++k) cfg.pi[k] = parse_pi(pi[k], "pi[" + std::to_string(k) + "]");
        } else {
            cfg.pi.fill(parse_pi(pi, "pi"));
        }
    }
    read_if(root, "normalize_blocks", cfg.normalize_blocks, "config");
    read_if(root, "components", cfg.components, "config");
    if (root.contains("nmf")) {
        const json& n = root["nmf"];
        check_keys(n, {"seed", "max_iter", "rel_tol", "solver", "inner_updates"}, "nmf");
        read_if(n, "seed", cfg.nmf.seed, "nmf");
        read_if(n, "max_iter", cfg.nmf.max_iter, "nmf");
        read_if(n, "rel_tol", cfg.nmf.rel_tol, "nmf");
        read_if(n, "inner_updates", cfg.nmf.inner_updates, "nmf");
        if (n.contains("solver")) {
            std::string s;
            read_if(n, "solver", s, "nmf");
            cfg.nmf.solver = nmf_solver_from_string(s);
        }
    }
    if (root.contains("inverse")) {
        const json& inv = root["inverse"];
        check_keys(inv, {"q", "samples_per_component", "pairs_per_sample"}, "inverse");
        read_if(inv, "q", cfg.inverse.q, "inverse");
        read_if(inv, "samples_per_component", cfg.inverse.samples_per_component, "inverse");
        read_if(inv, "pairs_per_sample", cfg.inverse.pairs_per_sample, "inverse");
    }
    read_if(root, "threads", cfg.threads, "config");
    if (root.contains("output_dir")) {
        std::string out;
        read_if(root, "output_dir", out, "config");
        cfg.output_dir = resolve(base_dir, out);
    } else {
        cfg.output_dir = resolve(base_dir, cfg.output_dir.string());
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text, std::filesystem::absolute(path).parent_path());
}

std::string config_json(const RunConfig& cfg) {
    json vols = json::array();
    for (const auto& v : cfg.volumes) {
        json meta = {{"shape", {v.meta.shape.nx, v.meta.shape.ny, v.meta.shape.nz}},
                     {"value_kind", to_string(v.meta.value_kind)}};
        if (v.meta.threshold) meta["threshold"] = *v.meta.threshold;
        vols.push_back({{"path", v.path.string()},
                        {"meta", meta},
                        {"specimen_label", v.specimen_label},
                        {"stage_label", v.stage_label}});
    }
    json pi = json::array();
    for (const auto& p : cfg.pi) pi.push_back(pi_json(p));
    json root = {
        {"volumes", vols},
        {"cube_edge", cfg.cube_edge},
        {"pore_threshold", cfg.pore_threshold},
        {"polarity", cfg.polarity == Polarity::ForegroundNegative ? "foreground_negative" : "background_negative"},
        {"pi", pi},
        {"normalize_blocks", cfg.normalize_blocks},
        {"components", cfg.components},
        {"nmf",
         {{"seed", cfg.nmf.seed},
          {"max_iter", cfg.nmf.max_iter},
          {"rel_tol", cfg.nmf.rel_tol},
          {"solver", to_string(cfg.nmf.solver)},
          {"inner_updates", cfg.nmf.inner_updates}}},
        {"inverse",
         {{"q", cfg.inverse.q},
          {"samples_per_component", cfg.inverse.samples_per_component},
          {"pairs_per_sample", cfg.inverse.pairs_per_sample}}},
    };
    return root.dump(2);
}

}  // namespace phnmf
