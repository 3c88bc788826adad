#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "oracles/oracles.hpp"
#include "phnmf/cubical_persistence.hpp"
#include "phnmf/error.hpp"
#include "unit/temp_dir.hpp"

using namespace phnmf;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ScalarVolume row(std::vector<std::int32_t> v) {
    ScalarVolume sv({v.size(), 1, 1});
    sv.values = std::move(v);
    return sv;
}

// Foreground ring around a background centre, 3x3x1.
ScalarVolume ring_sdt() {
    BinaryVolume ring({3, 3, 1}, true);
    ring.set(1, 1, 0, false);
    return signed_manhattan_sdt(ring);
}

std::vector<oracle::Triple> triples(const PersistenceDiagram& pd) {
    std::vector<oracle::Triple> out;
    for (int k = 0; k < 3; ++k)
        for (const Pair& p : pd[k]) out.emplace_back(k, p.birth, p.death);
    std::sort(out.begin(), out.end());
    return out;
}

ScalarVolume random_sdt(Shape s, std::uint64_t seed, double p = 0.5) {
    return signed_manhattan_sdt(oracle::random_volume(s, seed, p));
}

}  // namespace

TEST_CASE("build_filtration cell values and counts") {
    FilteredComplex fc(row({0, 1, 0}));
    CHECK(fc.cell_count() == 5);
    CHECK(fc.cell_count(0) == 3);
    CHECK(fc.cell_count(1) == 2);
    std::vector<std::int32_t> vertex_values, edge_values;
    for (CellId id = 0; id < fc.cell_count(); ++id)
        (fc.dim(id) == 0 ? vertex_values : edge_values).push_back(fc.value(id));
    CHECK(vertex_values == std::vector<std::int32_t>{0, 1, 0});
    CHECK(edge_values == std::vector<std::int32_t>{1, 1});

    ScalarVolume sq({2, 2, 1});
    sq.values = {0, 0, 0, 1};
    FilteredComplex fsq(sq);
    Cell square;
    square.extent = 0b011;
    CHECK(fsq.value(fsq.id(square)) == 1);

    for (std::size_t n = 1; n <= 6; ++n) CHECK(FilteredComplex(ScalarVolume({n, 1, 1})).cell_count() == 2 * n - 1);
    CHECK(FilteredComplex(ScalarVolume({3, 4, 5})).cell_count() == 5 * 7 * 9);
}

TEST_CASE("filtration order is a valid total order") {
    const auto sv = random_sdt({4, 3, 3}, 5);
    FilteredComplex fc(sv);
    std::array<CellId, 6> faces{};
    for (CellId id = 0; id < fc.cell_count(); ++id) {
        CHECK(fc.id(fc.cell(id)) == id);
        const int n = fc.boundary(id, faces);
        CHECK(n == 2 * fc.dim(id));
        for (int i = 0; i < n; ++i) {
            CHECK(fc.value(faces[i]) <= fc.value(id));
            CHECK(fc.precedes(faces[i], id));
        }
    }
}

TEST_CASE("persistence fixed examples") {
    SUBCASE("two minima") {
        FilteredComplex fc(row({0, 1, 0}));
        const auto pd = compute_persistence(fc);
        CHECK(triples(pd) == std::vector<oracle::Triple>{{0, 0, 1}, {0, 0, kInf}});
        CHECK(pd[1].empty());
    }
    SUBCASE("single voxel") {
        ScalarVolume sv({1, 1, 1}, 7);
        const auto pd = compute_persistence(FilteredComplex(sv));
        CHECK(triples(pd) == std::vector<oracle::Triple>{{0, 7, kInf}});
    }
    SUBCASE("ring") {
        const auto sv = ring_sdt();
        const auto pd = compute_persistence(FilteredComplex(sv));
        REQUIRE(pd[1].size() == 1);
        CHECK(pd[1][0].birth == -1);
        CHECK(pd[1][0].death == 1);
        CHECK(triples(pd) == oracle::naive_diagram(sv));
    }
}

TEST_CASE("betti_curve") {
    PersistenceDiagram pd;
    Pair a;
    a.birth = 0;
    a.death = 1;
    a.death_cell = Cell{};
    Pair b;
    b.birth = 0;
    pd[0] = {a, b};
    CHECK(betti_curve(pd, 0, 0.5) == 2);
    CHECK(betti_curve(pd, 0, 1) == 1);
    CHECK(betti_curve(pd, 0, -1) == 0);
    CHECK_THROWS_AS(betti_curve(pd, 3, 0), ParameterError);

    const auto sv = random_sdt({6, 6, 6}, 3);
    const auto diag = compute_persistence(FilteredComplex(sv));
    for (int t = -4; t <= 4; ++t) {
        const auto betti = oracle::sublevel_betti(sv, t);
        for (int k = 0; k < 3; ++k) CHECK(int(betti_curve(diag, k, t)) == betti[k]);
        CHECK(betti[3] == 0);
    }
}

TEST_CASE("persistence matches naive reduction on random volumes") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const Shape s{2 + seed % 5, 2 + (seed / 2) % 5, 1 + seed % 5};
        const auto sv = random_sdt(s, seed, 0.35 + 0.02 * double(seed % 10));
        const auto pd = compute_persistence(FilteredComplex(sv));
        CHECK_MESSAGE(triples(pd) == oracle::naive_diagram(sv), "seed ", seed);
        CHECK(triples(pd) == oracle::naive_diagram(sv, true));
    }
    // Non-SDT values with many ties, including degenerate slabs.
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        std::mt19937 rng{static_cast<unsigned>(seed)};
        const Shape s{1 + seed % 4, 3, 2 + seed % 3};
        ScalarVolume sv(s);
        for (auto& v : sv.values) v = int(rng() % 4) - 2;
        CHECK(triples(compute_persistence(FilteredComplex(sv))) == oracle::naive_diagram(sv));
    }
}

TEST_CASE("structural invariants") {
    for (std::uint64_t seed = 40; seed < 50; ++seed) {
        const auto sv = random_sdt({5, 4, 5}, seed);
        FilteredComplex fc(sv);
        CubicalPersistence ph(fc, {.keep_full_pairing = true});
        const auto& pd = ph.diagram();

        CHECK(std::count_if(pd[0].begin(), pd[0].end(), [](const Pair& p) { return p.essential(); }) == 1);
        CHECK(pd.finite_count(1) == pd[1].size());
        CHECK(pd.finite_count(2) == pd[2].size());

        // Every cell is creator or destroyer exactly once.
        std::vector<int> seen(fc.cell_count(), 0);
        for (const auto& cp : ph.full_pairing()) {
            ++seen[cp.creator];
            if (cp.destroyer != kNoCell) ++seen[cp.destroyer];
            CHECK(fc.dim(cp.creator) == cp.dim);
            if (cp.destroyer != kNoCell) CHECK(fc.dim(cp.destroyer) == cp.dim + 1);
        }
        CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));

        for (int t = -5; t <= 5; ++t) {
            long chi = 0;
            for (int k = 0; k < 3; ++k) chi += (k % 2 ? -1L : 1L) * long(betti_curve(pd, k, t));
            CHECK(chi == oracle::sublevel_euler(sv, t));
        }

        for (int k = 0; k < 3; ++k)
            for (const Pair& p : pd[k]) {
                CHECK(p.birth_cell.dim() == k);
                if (p.essential()) continue;
                CHECK(p.death > p.birth);
                CHECK(p.death_cell->dim() == k + 1);
                CHECK(fc.value(fc.id(p.birth_cell)) == p.birth);
                CHECK(fc.value(fc.id(*p.death_cell)) == p.death);
            }
    }
}

TEST_CASE("diagram invariant under mirroring") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto sv = random_sdt({6, 5, 4}, seed + 300);
        ScalarVolume mirrored(sv.shape);
        for (std::size_t z = 0; z < 4; ++z)
            for (std::size_t y = 0; y < 5; ++y)
                for (std::size_t x = 0; x < 6; ++x) mirrored.values[sv.shape.index(5 - x, y, z)] = sv.at(x, y, z);
        CHECK(triples(compute_persistence(FilteredComplex(sv))) ==
              triples(compute_persistence(FilteredComplex(mirrored))));
    }
}

TEST_CASE("representative cycles") {
    SUBCASE("dim 0 two minima") {
        FilteredComplex fc(row({0, 1, 0}));
        CubicalPersistence ph(fc);
        const Pair p = ph.diagram()[0][0];
        REQUIRE(!p.essential());
        CHECK(p.birth_cell.anchor == std::array<std::uint32_t, 3>{2, 0, 0});
        CHECK(p.death_cell->anchor == std::array<std::uint32_t, 3>{1, 0, 0});
        CHECK(p.death_cell->extent == 1);
        const auto cyc = ph.representative_cycle(p);
        CHECK(std::find(cyc.begin(), cyc.end(), p.birth_cell) != cyc.end());
        CHECK(is_cycle(fc, cyc));
        CHECK_THROWS_AS(ph.representative_cycle(ph.diagram()[0][1]), UnsupportedPairError);
        CHECK_THROWS_AS(representative_cycle(fc, ph.diagram()[0][1]), UnsupportedPairError);
    }
    SUBCASE("ring loop") {
        const auto sv = ring_sdt();
        FilteredComplex fc(sv);
        CubicalPersistence ph(fc);
        const Pair p = ph.diagram()[1].at(0);
        const auto cyc = ph.representative_cycle(p);
        CHECK(cyc.size() == 8);
        CHECK(chain_boundary(fc, cyc).empty());
        for (const Cell& c : cyc) {
            CHECK(c.dim() == 1);
            // No edge touches the centre vertex (1,1).
            const bool touches = (c.anchor[0] == 1 && c.anchor[1] == 1) ||
                                 (c.spans(0) && c.anchor[0] == 0 && c.anchor[1] == 1) ||
                                 (c.spans(1) && c.anchor[0] == 1 && c.anchor[1] == 0);
            CHECK_FALSE(touches);
        }
        Pair foreign = p;
        foreign.birth += 1;
        CHECK_THROWS_AS(ph.representative_cycle(foreign), LookupError);
    }
    SUBCASE("random volumes, all dimensions") {
        for (std::uint64_t seed = 0; seed < 12; ++seed) {
            const auto sv = random_sdt({6, 6, 6}, seed + 500, 0.55);
            FilteredComplex fc(sv);
            CubicalPersistence ph(fc);
            for (int k = 0; k < 3; ++k)
                for (const Pair& p : ph.diagram()[k]) {
                    if (p.essential()) continue;
                    const auto cyc = ph.representative_cycle(p);
                    REQUIRE(!cyc.empty());
                    CHECK(is_cycle(fc, cyc));
                    double top = -kInf;
                    for (const Cell& c : cyc) {
                        CHECK(c.dim() == k);
                        CHECK(fc.contains(c));
                        top = std::max(top, double(fc.value(fc.id(c))));
                    }
                    CHECK(top == p.birth);
                    CHECK(cyc.back() == p.birth_cell);
                }
        }
    }
}

TEST_CASE("diagram csv round trip") {
    TempDir dir;
    const auto sv = random_sdt({5, 5, 5}, 9);
    const auto pd = compute_persistence(FilteredComplex(sv));
    write_diagram_csv(dir / "d.csv", pd);
    const auto back = read_diagram_csv(dir / "d.csv", pd.sample_id);
    for (int k = 0; k < 3; ++k) CHECK(back[k] == pd[k]);
    std::ifstream in(dir / "d.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "dim,birth,death,bx,by,bz,bex,bey,bez,dx,dy,dz,dex,dey,dez");
    std::string line;
    int essential_rows = 0;
    while (std::getline(in, line))
        if (line.find(",inf,") != std::string::npos) {
            ++essential_rows;
            CHECK(line.substr(line.size() - 6) == ",,,,,,");
        }
    CHECK(essential_rows == 1);
}
