#include "phnmf/voxel_io.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "phnmf/error.hpp"

namespace phnmf {

std::string to_string(ValueKind kind) {
    return kind == ValueKind::UInt8 ? "uint8" : "bool";
}

ValueKind value_kind_from_string(const std::string& text) {
    if (text == "uint8") return ValueKind::UInt8;
    if (text == "bool") return ValueKind::Boolean;
    throw FormatError("unknown value_kind '" + text + "' (expected uint8 or bool)");
}

void VolumeMeta::validate() const {
    if (shape.nx == 0 || shape.ny == 0 || shape.nz == 0)
        throw ParameterError("volume shape must be positive along every axis");
    if (value_kind == ValueKind::UInt8) {
        if (!threshold)
            throw ParameterError("uint8 volumes need a binarization threshold");
        if (*threshold < 0 || *threshold > 255)
            throw ParameterError("threshold must lie in [0,255], got " + std::to_string(*threshold));
    } else if (threshold) {
        throw ParameterError("boolean volumes must not carry a threshold");
    }
}

std::size_t BinaryVolume::foreground_count() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

BinaryVolume load_volume(const std::filesystem::path& path, const VolumeMeta& meta) {
    meta.validate();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open volume file " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("error while reading " + path.string());

    const std::size_t expected = meta.shape.voxels();
    if (bytes.size() != expected) {
        throw FormatError("volume " + path.string() + " has " + std::to_string(bytes.size()) +
                          " bytes, expected " + std::to_string(expected));
    }

    BinaryVolume vol(meta.shape);
    if (meta.value_kind == ValueKind::UInt8) {
        const int threshold = *meta.threshold;
        for (std::size_t i = 0; i < expected; ++i)
            vol.mask[i] = static_cast<unsigned char>(bytes[i]) >= threshold ? 1 : 0;
    } else {
        for (std::size_t i = 0; i < expected; ++i) vol.mask[i] = bytes[i] != 0 ? 1 : 0;
    }
    return vol;
}

void save_volume(const std::filesystem::path& path, const BinaryVolume& vol) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write volume file " + path.string());
    std::vector<char> bytes(vol.mask.size());
    std::transform(vol.mask.begin(), vol.mask.end(), bytes.begin(),
                   [](std::uint8_t m) { return static_cast<char>(m ? 0xFF : 0x00); });
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("error while writing " + path.string());
}

VolumeMeta parse_sidecar(const std::string& text, const std::string& origin) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("sidecar " + origin + ": " + e.what());
    }
    if (!j.is_object()) throw FormatError("sidecar " + origin + ": expected a JSON object");

    VolumeMeta meta;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "shape") {
                auto dims = value.get<std::vector<std::size_t>>();
                if (dims.size() != 3) throw FormatError("sidecar " + origin + ": shape must have three entries");
                meta.shape = {dims[0], dims[1], dims[2]};
            } else if (key == "value_kind") {
                meta.value_kind = value_kind_from_string(value.get<std::string>());
            } else if (key == "threshold") {
                meta.threshold = value.is_null() ? std::nullopt : std::optional<int>(value.get<int>());
            } else if (key == "specimen_label") {
                meta.specimen_label = value.get<std::string>();
            } else {
                throw FormatError("sidecar " + origin + ": unknown key '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("sidecar " + origin + ": " + e.what());
    }
    if (meta.value_kind == ValueKind::Boolean && !j.contains("threshold")) meta.threshold.reset();
    meta.validate();
    return meta;
}

VolumeMeta read_sidecar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open sidecar " + path.string());
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_sidecar(text, path.string());
}

void write_sidecar(const std::filesystem::path& path, const VolumeMeta& meta) {
    nlohmann::json j;
    j["shape"] = {meta.shape.nx, meta.shape.ny, meta.shape.nz};
    j["value_kind"] = to_string(meta.value_kind);
    if (meta.threshold) j["threshold"] = *meta.threshold;
    j["specimen_label"] = meta.specimen_label;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write sidecar " + path.string());
    out << j.dump(2) << '\n';
}

std::vector<CubeSample> partition_cubes(const BinaryVolume& vol, std::size_t edge,
                                        const std::string& specimen_label, std::size_t first_id) {
    if (edge == 0) throw ParameterError("cube edge must be positive");
    const Shape& s = vol.shape;
    const std::size_t cx = s.nx / edge, cy = s.ny / edge, cz = s.nz / edge;
    const Shape cube_shape{edge, edge, edge};
    const double cells = static_cast<double>(cube_shape.voxels());

    std::vector<CubeSample> cubes;
    cubes.reserve(cx * cy * cz);
    for (std::size_t kz = 0; kz < cz; ++kz)
        for (std::size_t ky = 0; ky < cy; ++ky)
            for (std::size_t kx = 0; kx < cx; ++kx) {
                CubeSample c;
                c.id = first_id + cubes.size();
                c.origin = {kx * edge, ky * edge, kz * edge};
                c.specimen_label = specimen_label;
                c.volume = BinaryVolume(cube_shape);
                for (std::size_t z = 0; z < edge; ++z)
                    for (std::size_t y = 0; y < edge; ++y) {
                        const auto* src = &vol.mask[s.index(c.origin[0], c.origin[1] + y, c.origin[2] + z)];
                        std::copy(src, src + edge, &c.volume.mask[cube_shape.index(0, y, z)]);
                    }
                const double background = cells - static_cast<double>(c.volume.foreground_count());
                c.pore_fraction = background / cells;
                cubes.push_back(std::move(c));
            }
    return cubes;
}

std::vector<CubeSample> filter_cubes(std::vector<CubeSample> cubes, double pore_threshold) {
    if (!(pore_threshold >= 0.0 && pore_threshold <= 1.0))
        throw ParameterError("pore threshold must lie in [0,1]");
    std::erase_if(cubes, [&](const CubeSample& c) { return c.pore_fraction > pore_threshold; });
    return cubes;
}

}  // namespace phnmf
