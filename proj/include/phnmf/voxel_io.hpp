#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace phnmf {

/// Voxel counts along x, y, z. Linear voxel index is x-fastest.
struct Shape {
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::size_t nz = 0;

    std::size_t voxels() const noexcept { return nx * ny * nz; }
    std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
        return x + nx * (y + ny * z);
    }
    bool operator==(const Shape&) const = default;
};

enum class ValueKind { UInt8, Boolean };

std::string to_string(ValueKind kind);
ValueKind value_kind_from_string(const std::string& text);

/// Sidecar metadata accompanying a raw volume file.
struct VolumeMeta {
    Shape shape;
    ValueKind value_kind = ValueKind::UInt8;
    std::optional<int> threshold = 128;  // present iff value_kind == UInt8
    std::string specimen_label;

    /// Throws ParameterError when the invariants do not hold.
    void validate() const;
};

/// Boolean voxel mask; true (1) marks the foreground phase.
struct BinaryVolume {
    Shape shape;
    std::vector<std::uint8_t> mask;

    BinaryVolume() = default;
    explicit BinaryVolume(Shape s, bool fill = false)
        : shape(s), mask(s.voxels(), fill ? 1 : 0) {}

    bool at(std::size_t x, std::size_t y, std::size_t z) const {
        return mask[shape.index(x, y, z)] != 0;
    }
    void set(std::size_t x, std::size_t y, std::size_t z, bool v) {
        mask[shape.index(x, y, z)] = v ? 1 : 0;
    }
    std::size_t foreground_count() const;

    bool operator==(const BinaryVolume&) const = default;
};

/// One cubic tile cut from a parent volume.
struct CubeSample {
    std::size_t id = 0;
    std::array<std::size_t, 3> origin{};
    BinaryVolume volume;
    std::string specimen_label;
    std::string stage_label;
    double pore_fraction = 0.0;  // background voxels / edge^3
};

/// Reads a headerless one-byte-per-voxel file and binarizes it.
/// Throws FormatError on a size mismatch and IoError when unreadable.
BinaryVolume load_volume(const std::filesystem::path& path, const VolumeMeta& meta);

/// Writes the mask as raw bytes (0 / 255). Reload with threshold <= 255 or
/// boolean kind to get the same mask back.
void save_volume(const std::filesystem::path& path, const BinaryVolume& vol);

/// JSON object with keys shape, value_kind, threshold, specimen_label.
/// Unknown keys are a FormatError; origin names the source in messages.
VolumeMeta parse_sidecar(const std::string& text, const std::string& origin);
VolumeMeta read_sidecar(const std::filesystem::path& path);
void write_sidecar(const std::filesystem::path& path, const VolumeMeta& meta);

/// Tiles the volume from the origin into edge^3 cubes, dropping partial slabs.
/// Ids are assigned consecutively starting at first_id in z, y, x slab order
/// (x-fastest, matching voxel order).
std::vector<CubeSample> partition_cubes(const BinaryVolume& vol, std::size_t edge,
                                        const std::string& specimen_label = {},
                                        std::size_t first_id = 0);

/// Keeps cubes with pore_fraction <= pore_threshold, preserving order.
std::vector<CubeSample> filter_cubes(std::vector<CubeSample> cubes, double pore_threshold);

}  // namespace phnmf
