#include "phnmf/cubical_persistence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "phnmf/csv.hpp"
#include "phnmf/error.hpp"

namespace phnmf {

// ---------------------------------------------------------------------------
// FilteredComplex

FilteredComplex::FilteredComplex(ScalarVolume sv) : sv_(std::move(sv)) {
    const Shape& s = sv_.shape;
    if (s.voxels() == 0) throw ParameterError("filtration of an empty volume");
    if (sv_.values.size() != s.voxels()) throw ConsistencyError("scalar volume size does not match shape");
    for (std::int32_t v : sv_.values)
        if (v > kMaxAbsValue || v < -kMaxAbsValue)
            throw ParameterError("filtration value " + std::to_string(v) + " out of supported range");

    const std::array<std::size_t, 3> n{s.nx, s.ny, s.nz};
    std::size_t total = 1;
    for (int a = 0; a < 3; ++a) {
        doubled_[a] = static_cast<std::uint32_t>(2 * n[a] - 1);
        total *= doubled_[a];
    }
    if (total >= kNoCell) throw ParameterError("volume too large for 32-bit cell ids");
    size_ = total;

    // Cells of dimension d: sum over extent masks with d bits of the product
    // of (n - 1) along spanned axes and n along the others.
    per_dim_ = {};
    for (unsigned mask = 0; mask < 8; ++mask) {
        std::size_t c = 1;
        for (int a = 0; a < 3; ++a) c *= ((mask >> a) & 1U) ? n[a] - 1 : n[a];
        per_dim_[__builtin_popcount(mask)] += c;
    }
}

bool FilteredComplex::contains(const Cell& c) const noexcept {
    for (int a = 0; a < 3; ++a)
        if (2 * c.anchor[a] + (c.spans(a) ? 1U : 0U) >= doubled_[a]) return false;
    return c.extent < 8;
}

CellId FilteredComplex::id(const Cell& c) const noexcept {
    std::array<std::uint32_t, 3> d{};
    for (int a = 0; a < 3; ++a) d[a] = 2 * c.anchor[a] + (c.spans(a) ? 1U : 0U);
    return (d[0] * doubled_[1] + d[1]) * doubled_[2] + d[2];
}

Cell FilteredComplex::cell(CellId id) const noexcept {
    const std::uint32_t cz = id % doubled_[2];
    const std::uint32_t rest = id / doubled_[2];
    const std::uint32_t cy = rest % doubled_[1];
    const std::uint32_t cx = rest / doubled_[1];
    Cell c;
    c.anchor = {cx >> 1, cy >> 1, cz >> 1};
    c.extent = static_cast<std::uint8_t>((cx & 1U) | ((cy & 1U) << 1) | ((cz & 1U) << 2));
    return c;
}

int FilteredComplex::dim(CellId id) const noexcept { return cell(id).dim(); }

std::int32_t FilteredComplex::value(CellId id) const noexcept {
    const Cell c = cell(id);
    const Shape& s = sv_.shape;
    std::int32_t best = std::numeric_limits<std::int32_t>::min();
    const std::uint32_t x1 = c.anchor[0] + (c.extent & 1U);
    const std::uint32_t y1 = c.anchor[1] + ((c.extent >> 1) & 1U);
    const std::uint32_t z1 = c.anchor[2] + ((c.extent >> 2) & 1U);
    for (std::uint32_t z = c.anchor[2]; z <= z1; ++z)
        for (std::uint32_t y = c.anchor[1]; y <= y1; ++y)
            for (std::uint32_t x = c.anchor[0]; x <= x1; ++x)
                best = std::max(best, sv_.values[s.index(x, y, z)]);
    return best;
}

OrderKey FilteredComplex::key(CellId id) const noexcept {
    const auto v = static_cast<std::uint64_t>(value(id) + (1 << 29));
    return (v << 34) | (static_cast<std::uint64_t>(dim(id)) << 32) | id;
}

int FilteredComplex::boundary(CellId id, std::array<CellId, 6>& out) const noexcept {
    const std::array<std::uint32_t, 3> stride{doubled_[1] * doubled_[2], doubled_[2], 1};
    const Cell c = cell(id);
    int count = 0;
    for (int a = 0; a < 3; ++a) {
        if (!c.spans(a)) continue;
        out[count++] = id - stride[a];
        out[count++] = id + stride[a];
    }
    return count;
}

int FilteredComplex::coboundary(CellId id, std::array<CellId, 6>& out) const noexcept {
    const std::array<std::uint32_t, 3> stride{doubled_[1] * doubled_[2], doubled_[2], 1};
    const Cell c = cell(id);
    int count = 0;
    for (int a = 0; a < 3; ++a) {
        if (c.spans(a)) continue;
        const std::uint32_t coord = 2 * c.anchor[a];
        if (coord > 0) out[count++] = id - stride[a];
        if (coord + 1 < doubled_[a]) out[count++] = id + stride[a];
    }
    return count;
}

std::vector<OrderKey> FilteredComplex::keys_of_dim(int d) const {
    std::vector<OrderKey> keys;
    keys.reserve(per_dim_[d]);
    const std::uint64_t dim_bits = static_cast<std::uint64_t>(d) << 32;
    for (std::uint32_t cx = 0; cx < doubled_[0]; ++cx) {
        const int px = static_cast<int>(cx & 1U);
        for (std::uint32_t cy = 0; cy < doubled_[1]; ++cy) {
            const int py = static_cast<int>(cy & 1U);
            if (px + py > d) continue;
            const int need_z = d - px - py;
            if (need_z > 1) continue;
            const std::uint32_t base = (cx * doubled_[1] + cy) * doubled_[2];
            for (std::uint32_t cz = static_cast<std::uint32_t>(need_z); cz < doubled_[2]; cz += 2) {
                const CellId id = base + cz;
                const auto v = static_cast<std::uint64_t>(value(id) + (1 << 29));
                keys.push_back((v << 34) | dim_bits | id);
            }
        }
    }
    return keys;
}

// ---------------------------------------------------------------------------
// Diagram helpers

std::size_t PersistenceDiagram::finite_count(int k) const {
    const auto& p = (*this)[k];
    return static_cast<std::size_t>(std::count_if(p.begin(), p.end(), [](const Pair& q) { return !q.essential(); }));
}

std::size_t betti_curve(const PersistenceDiagram& pd, int k, double t) {
    if (k < 0 || k > 2) throw ParameterError("betti_curve dimension must be 0, 1 or 2");
    const auto& p = pd[k];
    return static_cast<std::size_t>(
        std::count_if(p.begin(), p.end(), [t](const Pair& q) { return q.birth <= t && t < q.death; }));
}

// ---------------------------------------------------------------------------
// CubicalPersistence

namespace {

constexpr std::uint8_t kKillsComponent = 1;
constexpr std::uint8_t kCreatesVoid = 2;
constexpr std::uint32_t kNoColumn = std::numeric_limits<std::uint32_t>::max();

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0U); }

    std::uint32_t find(std::uint32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void attach(std::uint32_t child_root, std::uint32_t parent_root) { parent_[child_root] = parent_root; }

private:
    std::vector<std::uint32_t> parent_;
};

// dst ^= src for key-sorted columns.
void add_column(std::vector<OrderKey>& dst, const OrderKey* src_begin, const OrderKey* src_end,
                std::vector<OrderKey>& scratch) {
    scratch.clear();
    std::set_symmetric_difference(dst.begin(), dst.end(), src_begin, src_end, std::back_inserter(scratch));
    dst.swap(scratch);
}

}  // namespace

CubicalPersistence::CubicalPersistence(const FilteredComplex& fc, PersistenceOptions opts)
    : fc_(fc), opts_(opts), role_(fc.cell_count(), 0) {
    if (opts_.keep_full_pairing) full_.reserve(fc.cell_count() / 2 + 1);
    compute_dim0();
    compute_dim2();
    compute_dim1();

    for (auto& pairs : diagram_.pairs) {
        std::sort(pairs.begin(), pairs.end(), [this](const Pair& a, const Pair& b) {
            if (a.birth != b.birth) return a.birth < b.birth;
            if (a.death != b.death) return a.death < b.death;
            return fc_.id(a.birth_cell) < fc_.id(b.birth_cell);
        });
    }
}

Pair CubicalPersistence::make_pair(int dim, CellId creator, CellId destroyer) const {
    Pair p;
    p.dim = dim;
    p.birth = fc_.value(creator);
    p.birth_cell = fc_.cell(creator);
    if (destroyer != kNoCell) {
        p.death = fc_.value(destroyer);
        p.death_cell = fc_.cell(destroyer);
    }
    return p;
}

void CubicalPersistence::record(int dim, CellId creator, CellId destroyer) {
    if (opts_.keep_full_pairing) full_.push_back({dim, creator, destroyer});
    if (dim > 2) return;
    if (destroyer == kNoCell || fc_.value(creator) < fc_.value(destroyer))
        diagram_[dim].push_back(make_pair(dim, creator, destroyer));
}

void CubicalPersistence::compute_dim0() {
    const Shape& s = fc_.shape();
    auto vertex_cell = [&](std::uint32_t voxel) {
        Cell c;
        c.anchor = {static_cast<std::uint32_t>(voxel % s.nx), static_cast<std::uint32_t>((voxel / s.nx) % s.ny),
                    static_cast<std::uint32_t>(voxel / (s.nx * s.ny))};
        return fc_.id(c);
    };
    auto voxel_of = [&](CellId id) {
        const Cell c = fc_.cell(id);
        return static_cast<std::uint32_t>(s.index(c.anchor[0], c.anchor[1], c.anchor[2]));
    };

    UnionFind uf(s.voxels());
    std::vector<OrderKey> edges = fc_.keys_of_dim(1);
    std::sort(edges.begin(), edges.end());

    std::array<CellId, 6> faces{};
    for (OrderKey k : edges) {
        const CellId e = FilteredComplex::id_of(k);
        fc_.boundary(e, faces);
        std::uint32_t ru = uf.find(voxel_of(faces[0]));
        std::uint32_t rv = uf.find(voxel_of(faces[1]));
        if (ru == rv) continue;
        // Roots are always the oldest vertex of their component.
        const CellId cu = vertex_cell(ru), cv = vertex_cell(rv);
        const bool u_elder = fc_.key(cu) < fc_.key(cv);
        const CellId young = u_elder ? cv : cu;
        const CellId elder = u_elder ? cu : cv;
        uf.attach(u_elder ? rv : ru, u_elder ? ru : rv);
        role_[e] |= kKillsComponent;
        if (fc_.value(young) < fc_.value(e)) elder_root_.emplace(e, elder);
        record(0, young, e);
    }

    // The surviving component is born at the globally oldest vertex.
    CellId oldest = vertex_cell(0);
    for (std::uint32_t v = 1; v < s.voxels(); ++v) {
        const CellId c = vertex_cell(v);
        if (fc_.key(c) < fc_.key(oldest)) oldest = c;
    }
    record(0, oldest, kNoCell);
}

void CubicalPersistence::compute_dim2() {
    const Shape& s = fc_.shape();
    const std::size_t cx = s.nx - 1, cy = s.ny - 1, cz = s.nz - 1;
    const std::size_t cubes = cx * cy * cz;
    const auto exterior = static_cast<std::uint32_t>(cubes);

    // Each dual component is born (in reverse order) at its largest cube.
    UnionFind uf(cubes + 1);
    std::vector<OrderKey> birth(cubes + 1, std::numeric_limits<OrderKey>::max());
    auto cube_index = [&](CellId id) {
        const Cell c = fc_.cell(id);
        return static_cast<std::uint32_t>(c.anchor[0] + cx * (c.anchor[1] + cy * c.anchor[2]));
    };
    if (cubes > 0) {
        for (OrderKey k : fc_.keys_of_dim(3)) birth[cube_index(FilteredComplex::id_of(k))] = k;
    }

    squares_ = fc_.keys_of_dim(2);
    std::sort(squares_.begin(), squares_.end());

    std::array<CellId, 6> cof{};
    for (auto it = squares_.rbegin(); it != squares_.rend(); ++it) {
        const CellId sq = FilteredComplex::id_of(*it);
        const int n = fc_.coboundary(sq, cof);
        const std::uint32_t a = n > 0 ? cube_index(cof[0]) : exterior;
        const std::uint32_t b = n > 1 ? cube_index(cof[1]) : exterior;
        const std::uint32_t ra = uf.find(a), rb = uf.find(b);
        if (ra == rb) continue;
        const bool a_elder = birth[ra] > birth[rb];
        const std::uint32_t young = a_elder ? rb : ra;
        uf.attach(young, a_elder ? ra : rb);
        role_[sq] |= kCreatesVoid;
        record(2, sq, FilteredComplex::id_of(birth[young]));
    }
}

void CubicalPersistence::compute_dim1() {
    pivot_column_.assign(fc_.cell_count(), kNoColumn);
    std::vector<OrderKey> col, scratch;
    std::array<CellId, 6> faces{};

    for (OrderKey k : squares_) {
        const CellId sq = FilteredComplex::id_of(k);
        if (role_[sq] & kCreatesVoid) continue;  // cleared: reduces to zero

        col.clear();
        const int n = fc_.boundary(sq, faces);
        for (int i = 0; i < n; ++i)
            if (!(role_[faces[i]] & kKillsComponent)) col.push_back(fc_.key(faces[i]));
        std::sort(col.begin(), col.end());

        while (!col.empty()) {
            const std::uint32_t other = pivot_column_[FilteredComplex::id_of(col.back())];
            if (other == kNoColumn) break;
            add_column(col, column_entries_.data() + column_offsets_[other],
                       column_entries_.data() + column_offsets_[other + 1], scratch);
        }
        if (col.empty()) throw std::logic_error("square column reduced to zero after clearing");

        const CellId pivot = FilteredComplex::id_of(col.back());
        pivot_column_[pivot] = static_cast<std::uint32_t>(column_square_.size());
        column_square_.push_back(sq);
        column_entries_.insert(column_entries_.end(), col.begin(), col.end());
        column_offsets_.push_back(column_entries_.size());
        record(1, pivot, sq);
    }

    // Essential 1-classes: edges that neither kill a component nor get paired.
    const std::size_t edges = fc_.cell_count(1);
    const std::size_t vertices = fc_.cell_count(0);
    if (edges - (vertices - 1) != column_square_.size()) {
        for (OrderKey k : fc_.keys_of_dim(1)) {
            const CellId e = FilteredComplex::id_of(k);
            if (!(role_[e] & kKillsComponent) && pivot_column_[e] == kNoColumn) record(1, e, kNoCell);
        }
    }
    squares_.clear();
    squares_.shrink_to_fit();
}

bool CubicalPersistence::contains(const Pair& pair) const {
    if (pair.dim < 0 || pair.dim > 2) return false;
    const auto& p = diagram_[pair.dim];
    return std::find(p.begin(), p.end(), pair) != p.end();
}

std::vector<std::uint32_t> CubicalPersistence::replay_additions(std::uint32_t column) const {
    std::vector<OrderKey> col, scratch;
    std::vector<std::uint32_t> added;
    std::array<CellId, 6> faces{};
    const int n = fc_.boundary(column_square_[column], faces);
    for (int i = 0; i < n; ++i)
        if (!(role_[faces[i]] & kKillsComponent)) col.push_back(fc_.key(faces[i]));
    std::sort(col.begin(), col.end());
    while (!col.empty()) {
        const std::uint32_t other = pivot_column_[FilteredComplex::id_of(col.back())];
        if (other == column) break;
        added.push_back(other);
        add_column(col, column_entries_.data() + column_offsets_[other],
                   column_entries_.data() + column_offsets_[other + 1], scratch);
    }
    return added;
}

std::vector<CellId> CubicalPersistence::dim1_cycle(CellId birth_edge, CellId death_square) const {
    const std::uint32_t target = pivot_column_[birth_edge];
    if (target == kNoColumn || column_square_[target] != death_square)
        throw LookupError("no reduced column pairs this edge with this square");

    // Stored columns only keep rows of edges that do not merge components.
    // The full reduced column is rebuilt by replaying the same additions on
    // unprojected boundaries: R_t = boundary(t) + sum of R_o over added o.
    std::unordered_map<std::uint32_t, std::vector<OrderKey>> full;
    std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> deps;
    std::vector<std::uint32_t> stack{target};
    std::vector<OrderKey> scratch;
    std::array<CellId, 6> faces{};
    while (!stack.empty()) {
        const std::uint32_t t = stack.back();
        if (full.count(t)) {
            stack.pop_back();
            continue;
        }
        auto it = deps.find(t);
        if (it == deps.end()) it = deps.emplace(t, replay_additions(t)).first;
        bool ready = true;
        for (std::uint32_t d : it->second) {
            if (!full.count(d)) {
                stack.push_back(d);
                ready = false;
            }
        }
        if (!ready) continue;

        std::vector<OrderKey> col;
        const int n = fc_.boundary(column_square_[t], faces);
        for (int i = 0; i < n; ++i) col.push_back(fc_.key(faces[i]));
        std::sort(col.begin(), col.end());
        for (std::uint32_t d : it->second) {
            const auto& r = full.at(d);
            add_column(col, r.data(), r.data() + r.size(), scratch);
        }
        full.emplace(t, std::move(col));
        stack.pop_back();
    }

    std::vector<CellId> out;
    for (OrderKey k : full.at(target)) out.push_back(FilteredComplex::id_of(k));
    return out;
}

std::vector<CellId> CubicalPersistence::dim2_cycle(CellId birth_square, CellId death_cube) const {
    // The dual component of death_cube just before birth_square enters the
    // reverse filtration; its boundary is a 2-cycle whose youngest cell is
    // birth_square.
    const OrderKey cut = fc_.key(birth_square);
    std::vector<std::uint8_t> in_region(fc_.cell_count(), 0);
    std::vector<CellId> stack{death_cube}, region;
    in_region[death_cube] = 1;
    std::array<CellId, 6> faces{}, cof{};
    while (!stack.empty()) {
        const CellId cube = stack.back();
        stack.pop_back();
        region.push_back(cube);
        const int nf = fc_.boundary(cube, faces);
        for (int i = 0; i < nf; ++i) {
            if (fc_.key(faces[i]) <= cut) continue;
            const int nc = fc_.coboundary(faces[i], cof);
            if (nc < 2) throw std::logic_error("void component reached the exterior");
            const CellId other = cof[0] == cube ? cof[1] : cof[0];
            if (!in_region[other]) {
                in_region[other] = 1;
                stack.push_back(other);
            }
        }
    }
    std::vector<CellId> out;
    for (CellId cube : region) {
        const int nf = fc_.boundary(cube, faces);
        for (int i = 0; i < nf; ++i) {
            const int nc = fc_.coboundary(faces[i], cof);
            bool shared = false;
            for (int j = 0; j < nc; ++j)
                if (cof[j] != cube && in_region[cof[j]]) shared = true;
            if (!shared) out.push_back(faces[i]);
        }
    }
    return out;
}

std::vector<Cell> CubicalPersistence::representative_cycle(const Pair& pair) const {
    if (pair.essential()) throw UnsupportedPairError("essential pairs have no dying cycle");
    if (!contains(pair)) throw LookupError("pair is not part of this diagram");
    const CellId birth = fc_.id(pair.birth_cell);
    const CellId death = fc_.id(*pair.death_cell);

    std::vector<CellId> ids;
    switch (pair.dim) {
    case 0:
        ids = {elder_root_.at(death), birth};
        break;
    case 1:
        ids = dim1_cycle(birth, death);
        break;
    default:
        ids = dim2_cycle(birth, death);
        break;
    }
    std::sort(ids.begin(), ids.end(), [this](CellId a, CellId b) { return fc_.key(a) < fc_.key(b); });
    std::vector<Cell> cells;
    cells.reserve(ids.size());
    for (CellId id : ids) cells.push_back(fc_.cell(id));
    return cells;
}

PersistenceDiagram compute_persistence(const FilteredComplex& fc) {
    return CubicalPersistence(fc).diagram();
}

std::vector<Cell> representative_cycle(const FilteredComplex& fc, const Pair& pair) {
    if (pair.essential()) throw UnsupportedPairError("essential pairs have no dying cycle");
    return CubicalPersistence(fc).representative_cycle(pair);
}

std::vector<Cell> chain_boundary(const FilteredComplex& fc, const std::vector<Cell>& chain) {
    std::vector<CellId> faces_all;
    std::array<CellId, 6> faces{};
    for (const Cell& c : chain) {
        if (!fc.contains(c)) throw ParameterError("chain cell outside the complex");
        const int n = fc.boundary(fc.id(c), faces);
        faces_all.insert(faces_all.end(), faces.begin(), faces.begin() + n);
    }
    std::sort(faces_all.begin(), faces_all.end());
    std::vector<Cell> out;
    for (std::size_t i = 0; i < faces_all.size();) {
        std::size_t j = i;
        while (j < faces_all.size() && faces_all[j] == faces_all[i]) ++j;
        if ((j - i) % 2 == 1) out.push_back(fc.cell(faces_all[i]));
        i = j;
    }
    return out;
}

bool is_cycle(const FilteredComplex& fc, const std::vector<Cell>& chain) {
    if (chain.empty()) return true;
    if (chain.front().dim() == 0) return chain.size() % 2 == 0;
    return chain_boundary(fc, chain).empty();
}

// ---------------------------------------------------------------------------
// Diagram CSV

namespace {

const std::vector<std::string> kDiagramHeader{"dim", "birth", "death", "bx", "by", "bz", "bex", "bey",
                                              "bez", "dx", "dy", "dz", "dex", "dey", "dez"};

}  // namespace

void append_cell(std::vector<std::string>& row, const Cell& c) {
    for (int a = 0; a < 3; ++a) row.push_back(std::to_string(c.anchor[a]));
    for (int a = 0; a < 3; ++a) row.push_back(c.spans(a) ? "1" : "0");
}

Cell parse_cell(const std::vector<std::string>& row, std::size_t first) {
    Cell c;
    for (int a = 0; a < 3; ++a) {
        const long long v = csv::parse_integer(row.at(first + a));
        if (v < 0) throw FormatError("negative cell coordinate");
        c.anchor[a] = static_cast<std::uint32_t>(v);
        const long long e = csv::parse_integer(row.at(first + 3 + a));
        if (e != 0 && e != 1) throw FormatError("cell extent flags must be 0 or 1");
        if (e == 1) c.extent |= static_cast<std::uint8_t>(1U << a);
    }
    return c;
}

void write_diagram_csv(const std::filesystem::path& path, const PersistenceDiagram& pd) {
    std::vector<std::vector<std::string>> rows;
    for (int k = 0; k < 3; ++k) {
        for (const Pair& p : pd[k]) {
            std::vector<std::string> row{std::to_string(k), csv::format_number(p.birth), csv::format_number(p.death)};
            append_cell(row, p.birth_cell);
            if (p.death_cell) {
                append_cell(row, *p.death_cell);
            } else {
                row.insert(row.end(), 6, "");
            }
            rows.push_back(std::move(row));
        }
    }
    csv::write(path, kDiagramHeader, rows);
}

PersistenceDiagram read_diagram_csv(const std::filesystem::path& path, std::size_t sample_id) {
    const csv::Table t = csv::read(path, kDiagramHeader);
    PersistenceDiagram pd;
    pd.sample_id = sample_id;
    for (const auto& row : t.rows) {
        Pair p;
        p.dim = static_cast<int>(csv::parse_integer(row[0]));
        if (p.dim < 0 || p.dim > 2) throw FormatError(path.string() + ": dimension out of range");
        p.birth = csv::parse_number(row[1]);
        p.death = csv::parse_number(row[2]);
        p.birth_cell = parse_cell(row, 3);
        if (!std::isinf(p.death)) p.death_cell = parse_cell(row, 9);
        pd[p.dim].push_back(p);
    }
    return pd;
}

}  // namespace phnmf
