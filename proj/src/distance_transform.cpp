#include "phnmf/distance_transform.hpp"

#include <bit>
#include <fstream>
#include <limits>

#include "phnmf/error.hpp"

namespace phnmf {

namespace {

constexpr std::int32_t kUnset = std::numeric_limits<std::int32_t>::max();

// Multi-source BFS over 6-neighbours: hop count equals Manhattan distance
// because every voxel of the box is traversable.
void propagate(const Shape& s, std::vector<std::int32_t>& dist, std::vector<std::size_t>& frontier) {
    std::vector<std::size_t> next;
    const std::size_t sx = 1, sy = s.nx, sz = s.nx * s.ny;
    std::int32_t level = 0;
    while (!frontier.empty()) {
        ++level;
        next.clear();
        for (std::size_t i : frontier) {
            const std::size_t x = i % s.nx;
            const std::size_t y = (i / s.nx) % s.ny;
            const std::size_t z = i / sz;
            auto visit = [&](std::size_t j) {
                if (dist[j] == kUnset) {
                    dist[j] = level;
                    next.push_back(j);
                }
            };
            if (x > 0) visit(i - sx);
            if (x + 1 < s.nx) visit(i + sx);
            if (y > 0) visit(i - sy);
            if (y + 1 < s.ny) visit(i + sy);
            if (z > 0) visit(i - sz);
            if (z + 1 < s.nz) visit(i + sz);
        }
        frontier.swap(next);
    }
}

}  // namespace

ScalarVolume signed_manhattan_sdt(const BinaryVolume& vol, Polarity polarity) {
    const Shape& s = vol.shape;
    if (s.voxels() == 0) throw ParameterError("distance transform of an empty volume");

    const std::uint8_t negative_phase = polarity == Polarity::ForegroundNegative ? 1 : 0;
    const std::size_t fg = vol.foreground_count();
    ScalarVolume out(s);

    if (fg == 0 || fg == s.voxels()) {
        const auto cap = static_cast<std::int32_t>(s.nx + s.ny + s.nz);
        const bool all_negative = (fg != 0) == (negative_phase == 1);
        std::fill(out.values.begin(), out.values.end(), all_negative ? -cap : cap);
        return out;
    }

    // One BFS per phase, seeded with every voxel of the opposite phase.
    for (std::uint8_t phase : {std::uint8_t{0}, std::uint8_t{1}}) {
        std::vector<std::int32_t> dist(s.voxels(), kUnset);
        std::vector<std::size_t> frontier;
        for (std::size_t i = 0; i < s.voxels(); ++i) {
            if (vol.mask[i] != phase) {
                dist[i] = 0;
                frontier.push_back(i);
            }
        }
        propagate(s, dist, frontier);
        const std::int32_t sign = phase == negative_phase ? -1 : 1;
        for (std::size_t i = 0; i < s.voxels(); ++i)
            if (vol.mask[i] == phase) out.values[i] = sign * dist[i];
    }
    return out;
}

void save_scalar_volume(const std::filesystem::path& path, const ScalarVolume& sv) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (std::int32_t v : sv.values) {
        auto u = static_cast<std::uint32_t>(v);
        if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
        out.write(reinterpret_cast<const char*>(&u), sizeof u);
    }
    if (!out) throw IoError("error while writing " + path.string());
}

ScalarVolume load_scalar_volume(const std::filesystem::path& path, const Shape& shape) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open " + path.string());
    const auto size = static_cast<std::size_t>(in.tellg());
    if (size != shape.voxels() * 4)
        throw FormatError("scalar volume " + path.string() + " has " + std::to_string(size) +
                          " bytes, expected " + std::to_string(shape.voxels() * 4));
    in.seekg(0);
    ScalarVolume sv(shape);
    for (auto& v : sv.values) {
        std::uint32_t u = 0;
        in.read(reinterpret_cast<char*>(&u), sizeof u);
        if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
        v = static_cast<std::int32_t>(u);
    }
    if (!in) throw IoError("error while reading " + path.string());
    return sv;
}

}  // namespace phnmf
