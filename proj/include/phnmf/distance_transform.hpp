#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "phnmf/voxel_io.hpp"

namespace phnmf {

/// Integer-valued voxel grid, x-fastest. Used as the filtration function.
struct ScalarVolume {
    Shape shape;
    std::vector<std::int32_t> values;

    ScalarVolume() = default;
    explicit ScalarVolume(Shape s, std::int32_t fill = 0) : shape(s), values(s.voxels(), fill) {}

    std::int32_t at(std::size_t x, std::size_t y, std::size_t z) const {
        return values[shape.index(x, y, z)];
    }
    bool operator==(const ScalarVolume&) const = default;
};

/// Which phase receives negative distances.
enum class Polarity { ForegroundNegative, BackgroundNegative };

/// Signed Manhattan distance transform.
///
/// With the default polarity, background voxels get +d where d is the
/// Manhattan distance to the nearest foreground voxel, and foreground voxels
/// get -d with d measured to the nearest background voxel. Distances are
/// computed inside the volume only; a volume holding a single phase is filled
/// with +/-(nx+ny+nz).
ScalarVolume signed_manhattan_sdt(const BinaryVolume& vol,
                                  Polarity polarity = Polarity::ForegroundNegative);

/// Raw little-endian int32 dump, x-fastest.
void save_scalar_volume(const std::filesystem::path& path, const ScalarVolume& sv);
ScalarVolume load_scalar_volume(const std::filesystem::path& path, const Shape& shape);

}  // namespace phnmf
