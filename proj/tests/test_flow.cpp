#include <cmath>
#include <map>

#include "doctest.h"
#include "htree/error.hpp"
#include "htree/flow.hpp"
#include "htree/stats.hpp"

using namespace htree;

namespace {

FlowWeight w(long p, long q = 1) { return FlowWeight(Rational(p, q)); }

DirectedTreeRegion chain(int edges) { return build_regular_directed_region(1, edges); }

}  // namespace

TEST_CASE("flow weights") {
  CHECK(FlowWeight::parse("3/4") == w(3, 4));
  CHECK(FlowWeight::parse("0.25") == w(1, 4));
  CHECK(FlowWeight::parse("inf").is_infinite());
  CHECK((w(1) + FlowWeight::infinity()).is_infinite());
  CHECK(FlowWeight::from_double(0.5) == w(1, 2));
  CHECK_THROWS_AS(FlowWeight(Rational(0)), Error);
  CHECK_THROWS_AS(FlowWeight::parse("1.x"), Error);
}

TEST_CASE("flow validation") {
  const auto region = build_regular_directed_region(3, 3);
  const Flow flow = level_constant_flow(region, w(2, 7));
  const auto rep = validate_flow(region, flow);
  CHECK(rep.valid);
  CHECK(flow.at(1) == w(18, 7));  // c_g * d per level upward
  CHECK(flow.at(region.children(1)[0]) == w(6, 7));

  Flow bumped = flow;
  const Vertex mid = region.children(2)[0];
  const Vertex child = region.children(mid)[1];
  bumped.edge[static_cast<std::size_t>(child)] = FlowWeight(flow.at(child).value() + 1);
  const auto bad = validate_flow(region, bumped);
  CHECK_FALSE(bad.valid);
  REQUIRE(bad.violations.size() == 1);
  CHECK(bad.violations[0].vertex == mid);
  CHECK(*bad.violations[0].residual == -1);

  // infinite weights
  Flow inf = flow;
  const Vertex inner = region.children(1)[0];
  inf.edge[static_cast<std::size_t>(region.children(inner)[0])] = FlowWeight::infinity();
  CHECK_FALSE(validate_flow(region, inf).valid);
  inf.edge[static_cast<std::size_t>(inner)] = FlowWeight::infinity();
  CHECK_FALSE(validate_flow(region, inf).valid);
  inf.edge[1] = FlowWeight::infinity();
  CHECK(validate_flow(region, inf).valid);

  Flow missing = flow;
  missing.edge[5].reset();
  try {
    validate_flow(region, missing);
    FAIL("expected MissingEdgeWeight");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_edge_weight);
  }

  const Flow ray = near_ray_flow(region, Rational(1, 2), Rational(1, 100));
  CHECK(validate_flow(region, ray).valid);
  const auto path = leftmost_ray(region);
  CHECK(ray.at(path.back()) == w(1, 2));
  // R_1 = p + eps (d-1) (d^-2 + d^-3)
  CHECK(ray.at(path.front()).value() == Rational(1, 2) + Rational(1, 100) * 2 * (Rational(1, 9) + Rational(1, 27)));
}

TEST_CASE("flow measure sampling") {
  const auto region = build_regular_directed_region(2, 3);
  const Flow frozen = level_constant_flow(region, FlowWeight::infinity());
  sample_flow_measure(region, frozen, 1e-12, 1, 0, 100, [](const HeightAssignment& h) {
    for (Height x : h) CHECK(x == 0);
  });

  // single edge, phi = log 2
  const auto edge = chain(1);
  Flow f;
  f.edge = {std::nullopt, FlowWeight::from_double(std::log(2.0))};
  std::map<Height, std::uint64_t> counts;
  sample_flow_measure(edge, f, 1e-12, 3, 0, 200000, [&](const HeightAssignment& h) { ++counts[h[0] - h[1]]; });
  CHECK(empirical_tv(counts, geometric_pmf(std::log(2.0))) <= 0.01);

  // the anchor only shifts heights
  const Flow lc = level_constant_flow(region, w(1));
  std::vector<HeightAssignment> a, b;
  sample_flow_measure(region, lc, 1e-12, 9, 0, 200, [&](const HeightAssignment& h) { a.push_back(h); });
  sample_flow_measure(region, lc, 1e-12, 9, 5, 200, [&](const HeightAssignment& h) { b.push_back(h); });
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b[i][5] == 0);
    for (std::size_t v = 1; v < region.size(); ++v) {
      const auto p = static_cast<std::size_t>(region.parent(static_cast<Vertex>(v)));
      CHECK(a[i][p] - a[i][v] == b[i][p] - b[i][v]);
    }
  }

  Flow broken = lc;
  broken.edge[3] = w(5);
  CHECK_THROWS_AS(sample_flow_measure(region, broken, 1e-12, 1, 0, 1, [](const HeightAssignment&) {}), Error);
}

TEST_CASE("minimum of geometric gradients") {
  const std::vector<FlowWeight> one{FlowWeight::from_double(0.7)};
  CHECK(total_variation(min_gradient_law(one), geometric_pmf(0.7)) < 1e-15);
  const std::vector<FlowWeight> empty;
  CHECK_THROWS_AS(min_gradient_law(empty), Error);

  // ratios 1/2, 1/2: P(min >= k) = 4^-k before truncation
  const std::vector<Rational> ratios{Rational(1, 2), Rational(1, 2)};
  const Rational eps(1, 1 << 20);
  const IntPMF law = min_gradient_law_exact(ratios, eps);
  const Rational q_tail = pow(Rational(1, 4), static_cast<std::uint64_t>(law.last() + 1));
  for (Height k = 0; k <= law.last(); ++k) {
    Rational tail = 0;
    for (Height j = k; j <= law.last(); ++j) tail += law.exact(j);
    CHECK(tail * (1 - q_tail) + q_tail == pow(Rational(1, 4), static_cast<std::uint64_t>(k)));
  }

  // empirical minimum over sampled gradients
  const auto star = build_regular_directed_region(3, 1);
  Flow f;
  f.edge = {std::nullopt, w(1, 2), w(1, 2), w(1, 2)};
  std::map<Height, std::uint64_t> counts;
  sample_flow_measure(star, f, 1e-12, 4, 0, 200000, [&](const HeightAssignment& h) {
    ++counts[std::min({h[0] - h[1], h[0] - h[2], h[0] - h[3]})];
  });
  const std::vector<FlowWeight> alphas{w(1, 2), w(1, 2), w(1, 2)};
  CHECK(empirical_tv(counts, min_gradient_law(alphas)) <= 0.01);
}

TEST_CASE("localisation criterion") {
  RaySpec constant;
  constant.kind = RaySpec::Kind::constant;
  constant.p = Rational(1, 2);
  CHECK(localisation_test(constant, 100).verdict == Localisation::delocalised);

  RaySpec growth;
  growth.kind = RaySpec::Kind::geometric;
  growth.p = 1;
  growth.r = 2;
  CHECK(localisation_test(growth, 100).verdict == Localisation::localised);

  RaySpec table;
  table.kind = RaySpec::Kind::table;
  for (int g = 1; g <= 2000; ++g) table.table.push_back(2 * std::log(static_cast<double>(g)) + 1e-9);
  const auto p_series = localisation_test(table, 2000);
  CHECK(p_series.verdict == Localisation::localised);
  CHECK(p_series.partial_sum < M_PI * M_PI / 6 + 1e-6);

  RaySpec slow;
  slow.kind = RaySpec::Kind::table;
  for (int g = 1; g <= 2000; ++g) {
    const double lg = std::log(static_cast<double>(g + 2));
    slow.table.push_back(lg + std::log(lg));
  }
  CHECK(localisation_test(slow, 2000).verdict == Localisation::undecided);

  RaySpec flat;
  flat.kind = RaySpec::Kind::table;
  flat.table.assign(50, 0.5);
  CHECK(localisation_test(flat, 50).verdict == Localisation::delocalised);

  RaySpec fast;
  fast.kind = RaySpec::Kind::table;
  for (int g = 1; g <= 50; ++g) fast.table.push_back(0.5 * g);
  CHECK(localisation_test(fast, 50).verdict == Localisation::localised);

  // the near-ray flow's ray weights stay near p: delocalised
  const auto region = build_regular_directed_region(2, 12);
  const Flow ray = near_ray_flow(region, Rational(1, 2), Rational(1, 100));
  RaySpec near;
  near.kind = RaySpec::Kind::table;
  const auto path = leftmost_ray(region);
  for (auto it = path.rbegin(); it != path.rend(); ++it) near.table.push_back(ray.at(*it).to_double());
  CHECK(localisation_test(near, 12).verdict == Localisation::delocalised);
}

TEST_CASE("ray variance") {
  const std::vector<FlowWeight> single{FlowWeight::from_double(std::log(2.0))};
  CHECK(ray_variance(single) == doctest::Approx(2.0).epsilon(1e-12));
  const std::vector<FlowWeight> frozen(4, FlowWeight::infinity());
  CHECK(ray_variance(frozen) == 0.0);
  const std::vector<FlowWeight> stiff(3, w(200));
  CHECK(ray_variance(stiff) < 1e-80);

  const auto path = chain(5);
  const Flow ones = level_constant_flow(path, w(1));
  std::vector<double> diffs;
  sample_flow_measure(path, ones, 1e-12, 21, 0, 100000,
                      [&](const HeightAssignment& h) { diffs.push_back(static_cast<double>(h[0] - h[5])); });
  const auto s = summarize(diffs);
  const std::vector<FlowWeight> five(5, w(1));
  const double want = 5 * std::exp(-1.0) / std::pow(1 - std::exp(-1.0), 2);
  CHECK(ray_variance(five) == doctest::Approx(want).epsilon(1e-12));
  CHECK(std::abs(s.variance - want) <= 3 * s.variance_se);
}

TEST_CASE("single-site DLR") {
  const std::vector<FlowWeight> kids{w(1, 3), w(2, 3)};
  const std::vector<Height> ch{2, 3};
  const auto rep = dlr_single_site_check(w(1), kids, 5, ch);
  CHECK(rep.pass);
  CHECK(rep.conditional.to_string() == "{3:1/3, 4:1/3, 5:1/3}");

  const std::vector<Height> top{5, 5};
  CHECK(dlr_single_site_check(w(1), kids, 5, top).conditional == IntPMF::dirac(5));

  const auto skew = dlr_single_site_check(w(2), kids, 5, ch);
  CHECK_FALSE(skew.pass);
  CHECK(skew.conditional.prob(5) > skew.conditional.prob(3));

  const std::vector<Height> above{6, 2};
  CHECK_THROWS_AS(dlr_single_site_check(w(1), kids, 5, above), Error);

  const std::vector<FlowWeight> inf_kids{FlowWeight::infinity(), w(1)};
  const std::vector<Height> pinned{5, 1};
  CHECK(dlr_single_site_check(FlowWeight::infinity(), inf_kids, 5, pinned).pass);
  const std::vector<Height> unpinned{4, 1};
  CHECK_THROWS_AS(dlr_single_site_check(FlowWeight::infinity(), inf_kids, 5, unpinned), Error);

  Rng rng(31);
  for (int t = 0; t < 2000; ++t) {
    const auto m = 1 + rng.below(5);
    std::vector<FlowWeight> cw;
    std::vector<Height> chh;
    Rational sum = 0;
    for (std::uint64_t i = 0; i < m; ++i) {
      const Rational r(static_cast<long>(1 + rng.below(50)), static_cast<long>(1 + rng.below(50)));
      cw.emplace_back(r);
      sum += r;
      chh.push_back(static_cast<Height>(rng.below(10)) - 5);
    }
    const Height p = *std::max_element(chh.begin(), chh.end()) + static_cast<Height>(rng.below(6));
    CHECK(dlr_single_site_check(FlowWeight(sum), cw, p, chh).pass);
  }
}

TEST_CASE("exchangeability of level minima") {
  const auto ex = exchangeability_exact(2, 2, 2);
  CHECK(ex.pass);
  CHECK(ex.max_deviation == 0);
  CHECK(exchangeability_exact(2, 3, 2).pass);
  CHECK(exchangeability_exact(3, 2, 3).pass);
  CHECK(exchangeability_exact(2, 1, 3).pass);

  const auto region = build_regular_directed_region(2, 4);
  const Flow f = level_constant_flow(region, w(1, 2));
  const auto st = exchangeability_flow(region, f, 1, 4, 50000, 1e-12, 8);
  CHECK(st.pass);
  CHECK(st.min_p_value > 0.01 / 6);

  // non-flow weights break exchangeability: double the deepest edges only
  Flow skew = f;
  for (Vertex v : region.descendants_at(0, 4)) skew.edge[static_cast<std::size_t>(v)] = w(3);
  std::vector<std::vector<Height>> seqs;
  Rng rng(2);
  std::vector<GeometricSampler> samplers;
  for (std::size_t v = 0; v < region.size(); ++v) samplers.emplace_back(v == 0 ? w(1) : skew.at(static_cast<Vertex>(v)), 1e-12);
  for (int s = 0; s < 20000; ++s) {
    HeightAssignment h(region.size(), 0);
    for (std::size_t v = 1; v < region.size(); ++v) {
      h[v] = h[static_cast<std::size_t>(region.parent(static_cast<Vertex>(v)))] - samplers[v](rng);
    }
    seqs.push_back(level_minima(region, h, 1, 4));
  }
  CHECK_FALSE(exchangeability_statistical(seqs).pass);
}

TEST_CASE("flow files round-trip") {
  FlowSpec a;
  a.region.kind = RegionKind::directed;
  a.region.degree = 2;
  a.region.depth = 3;
  a.family = FlowSpec::Family::near_ray;
  a.p = Rational(1, 2);
  a.eps = Rational(1, 1000);
  FlowSpec b;
  b.region = a.region;
  b.family = FlowSpec::Family::explicit_edges;
  b.edges = {{1, w(2)}, {2, FlowWeight::infinity()}};
  FlowSpec c;
  c.region = a.region;
  c.family = FlowSpec::Family::level_constant;
  c.leaf_weight = w(3, 7);
  for (const FlowSpec& s : {a, b, c}) {
    const std::string text = save_flow_spec(s);
    CHECK(load_flow_spec(text) == s);
    CHECK(save_flow_spec(load_flow_spec(text)) == text);
  }
  const auto region = build_directed(c.region);
  CHECK(validate_flow(region, build_flow(c, region)).valid);
  CHECK_THROWS_AS(validate_flow(region, build_flow(b, region)), Error);
}
