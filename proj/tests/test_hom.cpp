#include <map>
#include <set>

#include "doctest.h"
#include "htree/error.hpp"
#include "htree/hom.hpp"
#include "htree/stats.hpp"

using namespace htree;

namespace {

IntPMF brute_marginal(const TreeRegion& r, Vertex x) {
  std::map<Height, std::uint64_t> counts;
  enumerate_homomorphisms(r, [&](const HeightAssignment& h) { ++counts[h[static_cast<std::size_t>(x)]]; });
  std::vector<std::pair<Height, Rational>> points;
  for (auto [k, c] : counts) points.emplace_back(k, Rational(BigInt(c)));
  return IntPMF::from_points(points);
}

TreeRegion star(std::vector<Height> b) {
  const TreeRegion s = build_regular_region(static_cast<int>(b.size()), 1);
  b.insert(b.begin(), 0);
  return s.with_heights(b);
}

}  // namespace

TEST_CASE("marginal examples") {
  const auto r = exact_marginal(star({0, 0, 0}), 0);
  CHECK(r.marginal.to_string() == "{-1:1/2, 1:1/2}");
  CHECK(r.table.at(1) == IntPMF::dirac(0));
  CHECK_FALSE(r.table.messages[0].has_value());

  const TreeRegion ball = build_regular_region(3, 2);
  CHECK(exact_marginal(ball, 0).marginal == brute_marginal(ball, 0));

  // boundary 0 and 3 at distance 3 force the path between them
  const std::vector<std::vector<Vertex>> adj{{1}, {0, 2, 4}, {1, 3, 5}, {2}, {1}, {2}};
  const TreeRegion forced(adj, {false, true, true, false, false, false}, {0, 0, 0, 3, 0, 3});
  CHECK(exact_marginal(forced, 1).marginal == IntPMF::dirac(1));
  CHECK(exact_marginal(forced, 2).marginal == IntPMF::dirac(2));

  CHECK(exact_marginal(star({2, 2, 2}), 3).marginal == IntPMF::dirac(2));

  try {
    exact_marginal(star({0, 2, 4}), 0);
    FAIL("expected InfeasibleBoundary");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::infeasible_boundary);
  }
}

TEST_CASE("oracle equivalence on random regions") {
  Rng rng(42);
  RandomRegionOptions opts;
  for (int t = 0; t < 150; ++t) {
    const TreeRegion r = random_hom_region(rng, opts);
    for (Vertex x : r.interior_vertices()) {
      const IntPMF want = brute_marginal(r, x);
      CHECK(exact_marginal(r, x).marginal == want);
      CHECK(total_variation(exact_marginal(r, x, PmfMode::logfloat).marginal, want) < 1e-9);
    }
  }
}

TEST_CASE("certification") {
  const auto r = exact_marginal(build_regular_region(3, 3), 0);
  const auto report = certify_messages(r.table, &r.marginal);
  CHECK(report.pass);
  CHECK(report.failing.empty());
  CHECK(report.checked == r.table.messages.size());

  // negative control: a message with coefficient exactly 1
  MessageTable bad = r.table;
  bad.messages[1] = IntPMF::from_exact(-2, 2, {Rational(1), Rational(1), Rational(1)});
  const auto fail = certify_messages(bad);
  CHECK_FALSE(fail.pass);
  CHECK(fail.failing == std::vector<Vertex>{1});
  CHECK(fail.min_coefficient.value == 1);

  MessageTable diracs;
  diracs.target = 0;
  diracs.messages = {std::nullopt, IntPMF::dirac(4)};
  CHECK(certify_messages(diracs).pass);
  CHECK(certify_messages(diracs).min_coefficient.infinite);

  Rng rng(8);
  RandomRegionOptions opts;
  opts.max_depth = 5;
  opts.max_vertices = 40;
  for (int t = 0; t < 200; ++t) {
    const TreeRegion region = random_hom_region(rng, opts);
    const auto m = exact_marginal(region, 0);
    CHECK(certify_messages(m.table, &m.marginal).pass);
    CHECK(marginal_variance_check(region, 0).pass);
  }
}

TEST_CASE("variance checks") {
  const auto v = marginal_variance_check(star({0, 0, 0}), 0);
  CHECK(v.variance == 1);
  CHECK(v.pass);
  CHECK(marginal_variance_check(star({0, 0, 0}), 1).variance == 0);
  CHECK(reference_variance_bound() == doctest::Approx(10.844186725017996).epsilon(1e-12));
}

TEST_CASE("initial configuration and heat-bath kernel") {
  Rng rng(4);
  RandomRegionOptions opts;
  opts.max_vertices = 30;
  opts.max_depth = 4;
  for (int t = 0; t < 100; ++t) {
    const TreeRegion r = random_hom_region(rng, opts);
    CHECK(is_valid_hom(r, initial_hom_configuration(r)));
  }
  const TreeRegion s = star({0, 0, 2});
  HeightAssignment h = initial_hom_configuration(s);
  CHECK(h[0] == 1);
  CHECK(heat_bath_conditional(s, h, 0) == IntPMF::dirac(1));
  const TreeRegion flat = star({3, 3, 3});
  CHECK(heat_bath_conditional(flat, initial_hom_configuration(flat), 0).to_string() == "{2:1/2, 4:1/2}");
}

TEST_CASE("heat-bath update preserves the uniform measure exactly") {
  Rng rng(12);
  RandomRegionOptions opts;
  opts.max_vertices = 8;
  for (int t = 0; t < 40; ++t) {
    const TreeRegion r = random_hom_region(rng, opts);
    std::vector<HeightAssignment> all;
    enumerate_homomorphisms(r, [&](const HeightAssignment& h) { all.push_back(h); });
    const Rational mass(1, static_cast<long>(all.size()));
    for (Vertex v : r.interior_vertices()) {
      std::map<HeightAssignment, Rational> after;
      for (const auto& h : all) {
        const IntPMF cond = heat_bath_conditional(r, h, v);
        for (std::size_t i = 0; i < cond.size(); ++i) {
          HeightAssignment g = h;
          g[static_cast<std::size_t>(v)] = cond.at_index(i);
          after[g] += mass * cond.exact(cond.at_index(i));
        }
      }
      CHECK(after.size() == all.size());
      for (const auto& [g, p] : after) CHECK(p == mass);
    }
  }
}

TEST_CASE("Glauber sampler") {
  const TreeRegion s = star({0, 0, 0});
  std::map<Height, std::uint64_t> counts;
  glauber_sampler(s, 100000, 10, 1, [&](const HeightAssignment& h) { ++counts[h[0]]; });
  CHECK(empirical_tv(counts, exact_marginal(s, 0).marginal) <= 0.02);

  // frozen: every interior vertex is squeezed
  const std::vector<std::vector<Vertex>> adj{{1}, {0, 2, 4}, {1, 3, 5}, {2}, {1}, {2}};
  const TreeRegion forced(adj, {false, true, true, false, false, false}, {0, 0, 0, 3, 0, 3});
  std::set<HeightAssignment> seen;
  glauber_sampler(forced, 1000, 0, 9, [&](const HeightAssignment& h) { seen.insert(h); });
  CHECK(seen.size() == 1);

  const TreeRegion ball = build_regular_region(3, 3);
  std::map<Height, std::uint64_t> c2;
  glauber_sampler(ball, 200000, 100, 5, [&](const HeightAssignment& h) { ++c2[h[0]]; });
  CHECK(empirical_tv(c2, exact_marginal(ball, 0).marginal) <= 0.02);

  // determinism
  std::vector<Height> a, b;
  glauber_sampler(ball, 50, 3, 77, [&](const HeightAssignment& h) { a.insert(a.end(), h.begin(), h.end()); });
  glauber_sampler(ball, 50, 3, 77, [&](const HeightAssignment& h) { b.insert(b.end(), h.begin(), h.end()); });
  CHECK(a == b);
}

TEST_CASE("variance profile") {
  const TreeRegion outer = build_regular_region(3, 5);
  const std::vector<int> radii{0, 1, 2, 3};
  const auto prof = variance_profile(outer, 0, radii, 60, 20, 3);
  REQUIRE(prof.size() == 4);
  CHECK(prof[0].mean == 0.0);
  for (std::size_t i = 0; i < prof.size(); ++i) {
    CHECK(prof[i].mean <= reference_variance_bound() + prof[i].half_width);
    if (i > 0) CHECK(prof[i].mean + prof[i].half_width >= prof[i - 1].mean - prof[i - 1].half_width);
  }
  const std::vector<int> one{2};
  CHECK(variance_profile(outer, 0, one, 5, 5, 3).size() == 1);
  const std::vector<int> too_far{5};
  CHECK_THROWS_AS(variance_profile(outer, 0, too_far, 5, 5, 3), Error);
}

TEST_CASE("height offset demo") {
  const auto demo = height_offset_demo(3, 8, 4000, 11);
  CHECK(demo.level_sizes == std::vector<std::uint64_t>{1, 3, 6, 12, 24, 48, 96, 192, 384});
  for (const auto& a : demo.averages) CHECK(a[0] == 0.0);
  for (int k = 0; k < 8; ++k) {
    std::vector<double> inc;
    for (const auto& a : demo.averages) inc.push_back(a[static_cast<std::size_t>(k + 1)] - a[static_cast<std::size_t>(k)]);
    const auto s = summarize(inc);
    const double want = 1.0 / static_cast<double>(demo.level_sizes[static_cast<std::size_t>(k + 1)]);
    CHECK(std::abs(s.variance - want) <= 3 * s.variance_se);
  }
  double total = 0;
  for (double m : demo.histogram) total += m;
  CHECK(total == doctest::Approx(1.0));

  // level averages of an explicit assignment agree with the coin-sum shortcut
  const TreeRegion ball = build_regular_region(3, 2);
  HeightAssignment h(ball.size(), 0);
  h[1] = 1; h[2] = -1; h[3] = 1;
  const auto dist = ball.distances_from(0);
  for (std::size_t v = 4; v < ball.size(); ++v) {
    for (Vertex w : ball.neighbors(static_cast<Vertex>(v))) {
      if (dist[static_cast<std::size_t>(w)] == 1) h[v] = h[static_cast<std::size_t>(w)] + (v % 2 ? 1 : -1);
    }
  }
  const auto avg = level_averages(ball, h);
  CHECK(avg[0] == 0.0);
  CHECK(avg[1] == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(height_offset_demo(2, 4, 10, 1), Error);
}
