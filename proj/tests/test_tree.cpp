#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "htree/error.hpp"
#include "htree/tree.hpp"

using namespace htree;

namespace {

// Independent brute force: every interior height in a box, validity checked by hand.
std::uint64_t box_count_hom(const TreeRegion& r) {
  const auto& inner = r.interior_vertices();
  Height lo = 0, hi = 0;
  for (Vertex b : r.boundary_vertices()) {
    lo = std::min(lo, r.boundary_height(b));
    hi = std::max(hi, r.boundary_height(b));
  }
  const auto n = static_cast<Height>(r.size());
  lo -= n;
  hi += n;
  HeightAssignment h = r.heights();
  std::uint64_t count = 0;
  const auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == inner.size()) {
      for (std::size_t v = 0; v < r.size(); ++v) {
        for (Vertex w : r.neighbors(static_cast<Vertex>(v))) {
          if (std::abs(h[v] - h[static_cast<std::size_t>(w)]) != 1) return;
        }
      }
      ++count;
      return;
    }
    for (Height x = lo; x <= hi; ++x) {
      h[static_cast<std::size_t>(inner[i])] = x;
      self(self, i + 1);
    }
  };
  rec(rec, 0);
  return count;
}

TreeRegion path_region(std::vector<Height> ends, int interior) {
  // boundary - interior... - boundary
  const int n = interior + 2;
  std::vector<std::vector<Vertex>> adj(static_cast<std::size_t>(n));
  for (int v = 0; v + 1 < n; ++v) {
    adj[static_cast<std::size_t>(v)].push_back(v + 1);
    adj[static_cast<std::size_t>(v + 1)].push_back(v);
  }
  std::vector<bool> inner(static_cast<std::size_t>(n), true);
  inner.front() = inner.back() = false;
  std::vector<Height> h(static_cast<std::size_t>(n), 0);
  h.front() = ends[0];
  h.back() = ends[1];
  return TreeRegion(adj, inner, h);
}

}  // namespace

TEST_CASE("regular builders") {
  const TreeRegion star = build_regular_region(3, 1);
  CHECK(star.size() == 4);
  CHECK(star.interior_vertices() == std::vector<Vertex>{0});
  CHECK(star.boundary_vertices().size() == 3);

  const DirectedTreeRegion d = build_regular_directed_region(2, 2);
  CHECK(d.size() == 7);
  CHECK(d.children(0).size() == 2);
  CHECK(d.interior_vertices() == std::vector<Vertex>{1, 2});
  CHECK(d.descendants_at(0, 2).size() == 4);
  CHECK(build_regular_directed_region(2, 10).size() == 2047);
  CHECK(d.ancestors(5) == std::vector<Vertex>{2, 0});

  try {
    build_regular_region(5, 12, 1000);
    FAIL("expected size cap");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::size_cap_exceeded);
  }
}

TEST_CASE("homomorphism boundary feasibility") {
  CHECK(validate_hom_boundary(build_regular_region(3, 1)).feasible);
  const auto parity = validate_hom_boundary(path_region({0, 1}, 1));
  CHECK_FALSE(parity.feasible);
  CHECK(parity.reason == "parity");
  const auto lip = validate_hom_boundary(path_region({0, 4}, 1));
  CHECK_FALSE(lip.feasible);
  CHECK(lip.reason == "lipschitz");
  CHECK(enumerate_homomorphisms(path_region({0, 4}, 1), [](const HeightAssignment&) {}) == 0);
}

TEST_CASE("monotone boundary feasibility") {
  const auto base = build_regular_directed_region(2, 3);
  std::vector<Height> h(base.size(), 0);
  for (Vertex v : base.descendants_at(0, 3)) h[static_cast<std::size_t>(v)] = -2;
  CHECK(validate_mon_boundary(base.with_heights(h)).feasible);
  h[static_cast<std::size_t>(base.descendants_at(0, 3).front())] = 1;
  const auto bad = validate_mon_boundary(base.with_heights(h));
  CHECK_FALSE(bad.feasible);
  CHECK(bad.reason == "order");

  std::uint64_t seen = 0;
  const auto flat = build_regular_directed_region(2, 3);
  CHECK(enumerate_monotone(flat, [&](const HeightAssignment& a) {
          ++seen;
          CHECK(std::all_of(a.begin(), a.end(), [](Height x) { return x == 0; }));
        }) == 1);
  CHECK(seen == 1);
}

TEST_CASE("enumeration examples") {
  std::set<HeightAssignment> seen;
  CHECK(enumerate_homomorphisms(build_regular_region(3, 1), [&](const HeightAssignment& a) { seen.insert(a); }) == 2);
  CHECK(seen.size() == 2);

  // directed path: top boundary 0, two interior vertices, bottom boundary -2
  const DirectedTreeRegion chain({kNoVertex, 0, 1, 2}, {false, true, true, false}, {0, 0, 0, -2});
  CHECK(enumerate_monotone(chain, [](const HeightAssignment&) {}) == 6);

  const TreeRegion ball = build_regular_region(3, 3);
  CHECK_THROWS_AS(enumerate_homomorphisms(ball, [](const HeightAssignment&) {}, 100), Error);
}

TEST_CASE("enumeration agrees with an independent counter") {
  Rng rng(99);
  RandomRegionOptions opts;
  opts.max_vertices = 12;
  opts.min_height = -2;
  opts.max_height = 2;
  int tested = 0;
  while (tested < 60) {
    const TreeRegion r = random_hom_region(rng, opts);
    if (r.interior_vertices().size() > 4) continue;
    ++tested;
    std::set<HeightAssignment> seen;
    const auto n = enumerate_homomorphisms(r, [&](const HeightAssignment& a) {
      CHECK(is_valid_hom(r, a));
      seen.insert(a);
    });
    CHECK(seen.size() == n);
    CHECK(n == box_count_hom(r));
  }
}

TEST_CASE("lipschitz bounds match enumerated extremes") {
  Rng rng(5);
  RandomRegionOptions opts;
  for (int t = 0; t < 40; ++t) {
    const TreeRegion r = random_hom_region(rng, opts);
    const auto b = lipschitz_bounds(r);
    std::vector<Height> lo(r.size(), std::numeric_limits<Height>::max());
    std::vector<Height> hi(r.size(), std::numeric_limits<Height>::min());
    enumerate_homomorphisms(r, [&](const HeightAssignment& a) {
      for (std::size_t v = 0; v < r.size(); ++v) {
        lo[v] = std::min(lo[v], a[v]);
        hi[v] = std::max(hi[v], a[v]);
      }
    });
    // Pairwise constraints are sufficient on trees, so the bounds are attained.
    for (std::size_t v = 0; v < r.size(); ++v) {
      CHECK(b.lo[v] == lo[v]);
      CHECK(b.hi[v] == hi[v]);
    }
  }
}

TEST_CASE("region files round-trip") {
  RegionSpec a;
  a.kind = RegionKind::undirected;
  a.degree = 4;
  a.depth = 2;
  a.boundary.kind = BoundaryRule::Kind::ramp;
  a.boundary.start = -3;
  a.boundary.increment = 2;
  RegionSpec b;
  b.kind = RegionKind::directed;
  b.degree = 2;
  b.depth = 3;
  b.root_height = 0;
  b.boundary.kind = BoundaryRule::Kind::list;
  b.boundary.values = {-3, -3, -2, -3, -1, -3, -3, 0};
  for (const RegionSpec& spec : {a, b}) {
    const std::string text = save_region_spec(spec);
    CHECK(load_region_spec(text) == spec);
    CHECK(save_region_spec(load_region_spec(text)) == text);
    const auto path = std::filesystem::temp_directory_path() / "htree_region_roundtrip.json";
    write_region_file(path.string(), spec);
    CHECK(read_region_file(path.string()) == spec);
    std::filesystem::remove(path);
  }
  const TreeRegion ramp = build_undirected(a);
  CHECK(ramp.boundary_height(ramp.boundary_vertices()[1]) == -1);
  CHECK_THROWS_AS(load_region_spec("{\"kind\": \"undirected\", \"degree\": "), Error);
}

TEST_CASE("ball subregions") {
  const TreeRegion big = build_regular_region(3, 4);
  HeightAssignment h(big.size(), 0);
  const auto dist = big.distances_from(0);
  for (std::size_t v = 0; v < big.size(); ++v) h[v] = dist[v] % 2;
  std::vector<Vertex> old;
  const TreeRegion ball = ball_subregion(big, 0, 2, h, &old);
  CHECK(ball.size() == 10);
  CHECK(ball.interior_vertices().size() == 4);
  CHECK(old[0] == 0);
  for (Vertex v : ball.boundary_vertices()) CHECK(ball.boundary_height(v) == 0);
}
