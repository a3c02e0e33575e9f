#include <cmath>
#include <map>

#include "doctest.h"
#include "htree/error.hpp"
#include "htree/flow.hpp"
#include "htree/monotone.hpp"
#include "htree/stats.hpp"

using namespace htree;

TEST_CASE("counting table examples") {
  const auto flat = build_counting_table(3, 5, 0);
  for (int j = 1; j <= 4; ++j) CHECK(flat.z(j, 0) == 1);
  CHECK(flat.total() == 1);

  CHECK(build_counting_table(1, 2, 2).total() == 3);
  std::uint64_t brute = enumerate_monotone(monotone_region(2, 3, 2), [](const HeightAssignment&) {});
  CHECK(build_counting_table(2, 3, 2).total() == BigInt(brute));

  CHECK_THROWS_AS(build_counting_table(3, 40, 40), Error);
  try {
    build_counting_table(3, 40, 40);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::size_cap_exceeded);
  }
  CHECK_NOTHROW(build_counting_table(3, 40, 40, CountMode::logfloat));
}

TEST_CASE("counting table agrees with enumeration") {
  int compared = 0;
  for (int d = 1; d <= 3; ++d) {
    for (int n = 2; n <= 4; ++n) {
      for (Height k = 0; k <= 4; ++k) {
        const auto table = build_counting_table(d, n, k);
        if (table.total() > 200000) continue;
        const auto region = monotone_region(d, n, k);
        std::map<Height, std::uint64_t> child;
        const auto count = enumerate_monotone(region, [&](const HeightAssignment& h) { ++child[h[1]]; });
        CHECK(table.total() == BigInt(count));
        CHECK(child_zero_probability(table) == Rational(BigInt(child[0]), BigInt(count)));
        CHECK(std::abs(std::exp(table.log_total()) / static_cast<double>(count) - 1) < 1e-9);
        ++compared;
      }
    }
  }
  CHECK(compared > 20);
}

TEST_CASE("child zero probability and its lower bound") {
  CHECK(child_zero_probability(build_counting_table(2, 5, 0)) == 1);
  CHECK(child_zero_lower_bound(2, 4, 4) == Rational(369, 625));
  CHECK(child_zero_probability(build_counting_table(2, 4, 4)) >= Rational(369, 625));

  for (int d = 2; d <= 3; ++d) {
    for (int n = 2; n <= 10; ++n) {
      for (Height k = 0; k <= 10; ++k) {
        const auto table = build_counting_table(d, n, k);
        const Rational p = child_zero_probability(table);
        CHECK(p >= child_zero_lower_bound(d, n, k));
        CHECK(std::abs(child_zero_probability_log(table) - to_double(p)) <= 1e-9 * to_double(p));
      }
    }
  }

  // reported, not a theorem: nondecreasing in n at d = 2, k = 3
  Rational previous = 0;
  for (int n = 3; n <= 7; ++n) {
    const Rational p = child_zero_probability(build_counting_table(2, n, 3));
    CHECK(p >= previous);
    previous = p;
  }
}

TEST_CASE("depth marginals") {
  const auto table = build_counting_table(2, 4, 3);
  const auto region = monotone_region(2, 4, 3);
  std::map<Height, std::uint64_t> at_two;
  const auto count = enumerate_monotone(region, [&](const HeightAssignment& h) {
    ++at_two[h[static_cast<std::size_t>(region.descendants_at(0, 2)[0])]];
  });
  const IntPMF m = depth_marginal(table, 2);
  for (auto [v, c] : at_two) CHECK(m.exact(v) == Rational(BigInt(c), BigInt(count)));
  CHECK(depth_marginal(table, 1).exact(0) == child_zero_probability(table));
  CHECK(total_variation(depth_marginal_log(table, 3), depth_marginal(table, 3)) < 1e-12);

  // P(h(x) = 0) at depth 2 under k = n rises with n
  double previous = 0;
  for (int n : {4, 6, 8, 10}) {
    const double p = to_double(depth_marginal(build_counting_table(2, n, n), 2).exact(0));
    CHECK(p >= previous);
    previous = p;
  }
}

TEST_CASE("uniform big-integer draws") {
  Rng rng(1);
  const BigInt bound = BigInt(1) << 130;
  const BigInt odd = bound / 3 + 7;
  std::uint64_t high = 0;
  for (int i = 0; i < 2000; ++i) {
    const BigInt x = uniform_below(rng, odd);
    CHECK(x >= 0);
    CHECK(x < odd);
    if (x >= odd / 2) ++high;
  }
  CHECK(high > 900);
  CHECK(high < 1100);
}

TEST_CASE("ancestral sampler is exact") {
  const auto zero = build_counting_table(2, 4, 0);
  const auto zr = monotone_region(2, 4, 0);
  MonotoneSampler z(zero);
  Rng rng0(3);
  HeightAssignment h;
  for (int i = 0; i < 50; ++i) {
    z.sample(rng0, zr, h);
    for (Height x : h) CHECK(x == 0);
  }

  const auto table = build_counting_table(2, 3, 2);
  const auto region = monotone_region(2, 3, 2);
  std::map<HeightAssignment, std::size_t> index;
  enumerate_monotone(region, [&](const HeightAssignment& a) { index.emplace(a, index.size()); });
  std::vector<std::uint64_t> observed(index.size(), 0);
  MonotoneSampler sampler(table);
  Rng rng(17);
  std::uint64_t child_zero = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    sampler.sample(rng, region, h);
    CHECK(is_valid_monotone(region, h));
    ++observed[index.at(h)];
    if (h[1] == 0) ++child_zero;
  }
  const std::vector<double> expected(index.size(), 1.0 / static_cast<double>(index.size()));
  CHECK(chi_square_gof(observed, expected).p_value > 0.01);
  const double p = to_double(child_zero_probability(table));
  CHECK(std::abs(static_cast<double>(child_zero) / draws - p) <= 3 * std::sqrt(p * (1 - p) / draws));
}

TEST_CASE("monotone samples have exchangeable level minima") {
  const auto table = build_counting_table(2, 4, 3);
  const auto region = monotone_region(2, 4, 3);
  MonotoneSampler sampler(table);
  Rng rng(5);
  HeightAssignment h;
  std::vector<std::vector<Height>> seqs;
  for (int i = 0; i < 20000; ++i) {
    sampler.sample(rng, region, h);
    seqs.push_back(level_minima(region, h, 1, 4));
  }
  CHECK(exchangeability_statistical(seqs).pass);
}

TEST_CASE("frozen region") {
  const auto none = frozen_region_experiment(2, 3, 10.0, 10, 1);
  CHECK(none.m == 0);
  CHECK(none.estimate == 1.0);
  CHECK(none.exact == 1.0);

  const auto r = frozen_region_experiment(2, 12, 3.0, 1000, 2024);
  CHECK(r.m == 4);
  CHECK(r.k == 12);
  CHECK(r.union_bound <= r.exact);
  CHECK(r.estimate >= r.union_bound - 3 * r.standard_error);
  CHECK(std::abs(r.estimate - r.exact) <= 4 * std::sqrt(r.exact * (1 - r.exact) / 1000) + 1e-12);

  // the bound is the displayed sum
  double sum = 0;
  for (int j = 1; j <= 4; ++j) sum += std::pow(2.0, j) * std::pow(1 - 1.0 / 13, std::pow(2.0, 12 - j - 1));
  CHECK(r.union_bound == doctest::Approx(1 - sum).epsilon(1e-12));

  const auto again = frozen_region_experiment(2, 12, 3.0, 1000, 2024);
  CHECK(again.estimate == r.estimate);
}
