#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "phnmf/distance_transform.hpp"

namespace phnmf {

/// Index of a cell in the doubled grid: coordinate c = 2*anchor + extent per
/// axis, linearised x-major, (cx * Ny + cy) * Nz + cz with N = 2n - 1.
using CellId = std::uint32_t;

/// Position in the filtration's total order. Comparing keys compares
/// (value, dim, doubled-grid position) lexicographically.
using OrderKey = std::uint64_t;

inline constexpr CellId kNoCell = std::numeric_limits<CellId>::max();

/// Elementary cube: anchor vertex plus the set of axes it spans.
struct Cell {
    std::array<std::uint32_t, 3> anchor{};
    std::uint8_t extent = 0;  // bit 0 = x, bit 1 = y, bit 2 = z

    int dim() const noexcept { return __builtin_popcount(extent); }
    bool spans(int axis) const noexcept { return (extent >> axis) & 1U; }

    auto operator<=>(const Cell&) const = default;
};

/// Sublevel filtration of the vertex construction: voxels are vertices and
/// every higher cell takes the maximum of its vertex values.
class FilteredComplex {
public:
    static constexpr std::int32_t kMaxAbsValue = (1 << 29) - 1;

    explicit FilteredComplex(ScalarVolume sv);

    const Shape& shape() const noexcept { return sv_.shape; }
    const ScalarVolume& vertex_values() const noexcept { return sv_; }

    /// Product over axes of (2n - 1).
    std::size_t cell_count() const noexcept { return size_; }
    std::size_t cell_count(int dim) const noexcept { return per_dim_[dim]; }

    bool contains(const Cell& c) const noexcept;
    CellId id(const Cell& c) const noexcept;
    Cell cell(CellId id) const noexcept;
    int dim(CellId id) const noexcept;
    std::int32_t value(CellId id) const noexcept;

    OrderKey key(CellId id) const noexcept;
    static CellId id_of(OrderKey key) noexcept { return static_cast<CellId>(key & 0xFFFFFFFFULL); }
    static std::int32_t value_of(OrderKey key) noexcept {
        return static_cast<std::int32_t>(key >> 34) - (1 << 29);
    }
    bool precedes(CellId a, CellId b) const noexcept { return key(a) < key(b); }

    /// Codimension-one faces; returns how many were written.
    int boundary(CellId id, std::array<CellId, 6>& out) const noexcept;
    /// Codimension-one cofaces inside the grid; returns how many were written.
    int coboundary(CellId id, std::array<CellId, 6>& out) const noexcept;

    /// Order keys of every cell of one dimension, unsorted.
    std::vector<OrderKey> keys_of_dim(int dim) const;

private:
    ScalarVolume sv_;
    std::array<std::uint32_t, 3> doubled_{};  // 2n - 1 per axis
    std::size_t size_ = 0;
    std::array<std::size_t, 4> per_dim_{};
};

inline FilteredComplex build_filtration(ScalarVolume sv) { return FilteredComplex(std::move(sv)); }

/// Birth-death pair of one homology dimension.
struct Pair {
    int dim = 0;
    double birth = 0.0;
    double death = std::numeric_limits<double>::infinity();
    Cell birth_cell;
    std::optional<Cell> death_cell;

    bool essential() const noexcept { return !death_cell.has_value(); }
    double persistence() const noexcept { return death - birth; }
    bool operator==(const Pair&) const = default;
};

/// Pairs of one sample split by dimension 0, 1, 2.
struct PersistenceDiagram {
    std::size_t sample_id = 0;
    std::array<std::vector<Pair>, 3> pairs;

    const std::vector<Pair>& operator[](int k) const { return pairs.at(static_cast<std::size_t>(k)); }
    std::vector<Pair>& operator[](int k) { return pairs.at(static_cast<std::size_t>(k)); }
    std::size_t finite_count(int k) const;
};

/// One entry of the complete cell pairing, zero-persistence pairs included.
struct CellPairing {
    int dim;          // dimension of the creator
    CellId creator;
    CellId destroyer;  // kNoCell for essential classes
};

struct PersistenceOptions {
    /// Retain the complete creator/destroyer pairing (all dimensions,
    /// zero-length pairs included). Costs memory proportional to the cell count.
    bool keep_full_pairing = false;
};

/// Persistence of a FilteredComplex over GF(2).
///
/// Dimension 0 is computed by union-find over edges in filtration order and
/// dimension 2 by union-find over the dual graph of 3-cubes (with the
/// exterior as one extra node) in reverse order; both are exact substitutes
/// for reducing the corresponding boundary columns. Dimension 1 reduces the
/// square columns that remain after clearing, restricted to rows of edges
/// that do not merge components. The complex must outlive this object.
class CubicalPersistence {
public:
    explicit CubicalPersistence(const FilteredComplex& fc, PersistenceOptions opts = {});

    const FilteredComplex& complex() const noexcept { return fc_; }
    const PersistenceDiagram& diagram() const noexcept { return diagram_; }
    const std::vector<CellPairing>& full_pairing() const noexcept { return full_; }

    /// Cells of a cycle representing the class that dies at pair.death_cell,
    /// sorted in filtration order. For dim 0 this is the pair of component
    /// roots joined by the death edge. Throws UnsupportedPairError for
    /// essential pairs and LookupError for pairs of another complex.
    std::vector<Cell> representative_cycle(const Pair& pair) const;

    /// True if the pair (same cells and values) belongs to this diagram.
    bool contains(const Pair& pair) const;

private:
    void compute_dim0();
    void compute_dim2();
    void compute_dim1();
    Pair make_pair(int dim, CellId creator, CellId destroyer) const;
    void record(int dim, CellId creator, CellId destroyer);

    std::vector<std::uint32_t> replay_additions(std::uint32_t column) const;
    std::vector<CellId> dim1_cycle(CellId birth_edge, CellId death_square) const;
    std::vector<CellId> dim2_cycle(CellId birth_square, CellId death_cube) const;

    const FilteredComplex& fc_;
    PersistenceOptions opts_;
    PersistenceDiagram diagram_;
    std::vector<CellPairing> full_;

    // Per-cell role flags (bit 0: edge kills a component, bit 1: square
    // creates a 2-cycle).
    std::vector<std::uint8_t> role_;
    std::vector<OrderKey> squares_;  // sorted ascending

    std::unordered_map<CellId, CellId> elder_root_;  // death edge -> surviving root
    std::vector<std::uint32_t> pivot_column_;        // edge id -> column index
    std::vector<CellId> column_square_;
    std::vector<std::uint64_t> column_offsets_{0};
    std::vector<OrderKey> column_entries_;
};

/// Convenience wrapper returning only the diagram.
PersistenceDiagram compute_persistence(const FilteredComplex& fc);

/// Convenience wrapper; recomputes persistence. Prefer
/// CubicalPersistence::representative_cycle for repeated queries.
std::vector<Cell> representative_cycle(const FilteredComplex& fc, const Pair& pair);

/// Number of dimension-k pairs alive at t (birth <= t < death).
std::size_t betti_curve(const PersistenceDiagram& pd, int k, double t);

/// Mod-2 boundary of a chain of k-cells (k >= 1), sorted by cell id.
std::vector<Cell> chain_boundary(const FilteredComplex& fc, const std::vector<Cell>& chain);

/// True when the chain is a mod-2 cycle. A 0-chain counts as a cycle when it
/// has an even number of vertices (reduced homology).
bool is_cycle(const FilteredComplex& fc, const std::vector<Cell>& chain);

/// Six CSV fields per cell: anchor x, y, z then extent flags x, y, z.
void append_cell(std::vector<std::string>& row, const Cell& c);
Cell parse_cell(const std::vector<std::string>& row, std::size_t first);

void write_diagram_csv(const std::filesystem::path& path, const PersistenceDiagram& pd);
PersistenceDiagram read_diagram_csv(const std::filesystem::path& path, std::size_t sample_id = 0);

}  // namespace phnmf
