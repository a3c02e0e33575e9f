#include <cmath>
#include <vector>

#include "doctest.h"
#include "htree/error.hpp"
#include "htree/pmf.hpp"
#include "htree/rng.hpp"

using namespace htree;

namespace {

Rational half(1, 2);

IntPMF coin() { return IntPMF::from_exact(-1, 2, {half, half}); }

// Random PMF on a step-2 lattice whose consecutive-ratio sequence shrinks by at
// least alpha per step, so its SLC coefficient is at least alpha.
IntPMF random_slc(Rng& rng, const Rational& alpha, std::size_t max_size) {
  const std::size_t size = 1 + rng.below(max_size);
  Rational ratio(static_cast<long>(1 + rng.below(64)), static_cast<long>(1 + rng.below(64)));
  std::vector<Rational> w{Rational(1)};
  for (std::size_t i = 1; i < size; ++i) {
    w.push_back(w.back() * ratio);
    const Rational slack = rng.below(3) == 0 ? Rational(1) : Rational(static_cast<long>(8 + rng.below(8)), 8);
    ratio /= alpha * slack;
  }
  const Height base = -2 * static_cast<Height>(rng.below(20));
  return IntPMF::from_exact(base, 2, std::move(w));
}

Rational brute_coefficient(const IntPMF& p) {
  Rational best = -1;
  for (Height k = p.base() + p.step(); k < p.last(); k += p.step()) {
    const Rational r = p.exact(k) * p.exact(k) / (p.exact(k - p.step()) * p.exact(k + p.step()));
    if (best < 0 || r < best) best = r;
  }
  return best;
}

}  // namespace

TEST_CASE("convolution with the +-1 step") {
  CHECK(convolve_step(IntPMF::dirac(0)) == coin());
  CHECK(convolve_step(coin()) == IntPMF::from_exact(-2, 2, {Rational(1, 4), half, Rational(1, 4)}));
  const IntPMF g = IntPMF::from_exact(0, 1, {Rational(3, 4), Rational(1, 4)});
  const IntPMF expected = IntPMF::from_points({{-1, Rational(3, 8)}, {0, Rational(1, 8)}, {1, Rational(3, 8)}, {2, Rational(1, 8)}});
  CHECK(convolve_step(g) == expected);

  // brute-force summation q(k) = (p(k-1) + p(k+1)) / 2
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const IntPMF p = random_slc(rng, Rational(1), 12);
    const IntPMF q = convolve_step(p);
    Rational total = 0;
    for (Height k = p.base() - 1; k <= p.last() + 1; ++k) {
      const Rational want = (p.exact(k - 1) + p.exact(k + 1)) / 2;
      CHECK(q.exact(k) == want);
      total += q.exact(k);
    }
    CHECK(total == 1);
  }
}

TEST_CASE("product and renormalisation") {
  CHECK(product_normalize(std::vector<IntPMF>{coin(), coin()}) == coin());
  CHECK(product_normalize(std::vector<IntPMF>{IntPMF::dirac(0), IntPMF::from_exact(0, 2, {half, half})}) ==
        IntPMF::dirac(0));
  try {
    product_normalize(std::vector<IntPMF>{IntPMF::dirac(0), IntPMF::dirac(2)});
    FAIL("expected DisjointSupport");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::disjoint_support);
  }

  Rng rng(11);
  for (int t = 0; t < 300; ++t) {
    const Rational a(static_cast<long>(1 + rng.below(5)));
    const Rational b(static_cast<long>(1 + rng.below(5)));
    const IntPMF p = random_slc(rng, a, 15);
    const IntPMF q = random_slc(rng, b, 15);
    if (std::max(p.base(), q.base()) > std::min(p.last(), q.last())) continue;
    const IntPMF r = product_normalize(std::vector<IntPMF>{p, q});
    Rational total = 0;
    for (Rational w : r.exact_weights()) total += w;
    CHECK(total == 1);
    CHECK(log_concavity_coefficient(r).at_least(a * b));
  }
}

TEST_CASE("strong log-concavity coefficient") {
  CHECK(log_concavity_coefficient(IntPMF::dirac(5)).infinite);
  const auto u = log_concavity_coefficient(IntPMF::from_exact(-2, 2, {Rational(1), Rational(1), Rational(1)}));
  CHECK_FALSE(u.infinite);
  CHECK(u.value == 1);
  std::vector<Rational> g;
  for (int k = 0; k <= 10; ++k) g.push_back(pow(half, static_cast<std::uint64_t>(k)));
  CHECK(log_concavity_coefficient(IntPMF::from_exact(0, 1, g)).value == 1);

  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const IntPMF p = random_slc(rng, Rational(static_cast<long>(1 + rng.below(4))), 10);
    const auto c = log_concavity_coefficient(p);
    if (p.size() <= 2) {
      CHECK(c.infinite);
    } else {
      CHECK(c.value == brute_coefficient(p));
    }
  }
}

TEST_CASE("convolution maps lambda^2-SLC to lambda-SLC") {
  const LambdaConstant lam = lambda_root(1e-12);
  const Rational input = lam.upper_squared();
  Rng rng(2024);
  int counterexamples = 0;
  for (int t = 0; t < 300; ++t) {
    const IntPMF p = random_slc(rng, input, 41);
    if (!log_concavity_coefficient(convolve_step(p)).at_least(lam.lower)) ++counterexamples;
  }
  CHECK(counterexamples == 0);
}

TEST_CASE("geometric laws") {
  CHECK(geometric_pmf(std::numeric_limits<double>::infinity()) == IntPMF::dirac(0));
  const IntPMF g = geometric_pmf(std::log(2.0), std::ldexp(1.0, -20));
  CHECK(g.base() == 0);
  CHECK(g.last() == 19);
  for (Height k = 0; k <= 19; ++k) CHECK(g.prob(k) == doctest::Approx(std::ldexp(1.0, -static_cast<int>(k) - 1)).epsilon(1e-5));

  for (double alpha : {0.3, 1.0, std::log(2.0), 2.5}) {
    const IntPMF p = geometric_pmf(alpha);
    const double q = std::exp(-alpha);
    const double eps = 1e-12;
    CHECK(std::abs(moments(p).mean - q / (1 - q)) <= eps * static_cast<double>(p.last()));
    CHECK(geometric_truncation_point(alpha, eps) == p.last());
  }
  CHECK(moments(geometric_pmf(std::log(2.0), std::ldexp(1.0, -30))).mean == doctest::Approx(1.0).epsilon(1e-7));
  CHECK_THROWS_AS(geometric_pmf(0.0), Error);
  CHECK_THROWS_AS(geometric_pmf(-1.0), Error);

  const IntPMF e = geometric_pmf_exact(half, Rational(1, 1 << 20));
  CHECK(e.last() == 19);
  CHECK(total_variation(e, g) < 1e-12);
}

TEST_CASE("moments and total variation") {
  CHECK(exact_moments(IntPMF::dirac(3)).mean == 3);
  CHECK(exact_moments(IntPMF::dirac(3)).variance == 0);
  CHECK(exact_moments(coin()).mean == 0);
  CHECK(exact_moments(coin()).variance == 1);
  CHECK(total_variation(coin(), coin()) == 0.0);
  CHECK(total_variation(IntPMF::dirac(0), IntPMF::dirac(1)) == 1.0);
  const IntPMF skew = IntPMF::from_exact(-1, 2, {Rational(1, 4), Rational(3, 4)});
  CHECK(total_variation_exact(coin(), skew) == Rational(1, 4));
}

TEST_CASE("log-float mode agrees with exact mode") {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const IntPMF p = random_slc(rng, Rational(2), 12);
    const IntPMF q = random_slc(rng, Rational(3), 12);
    const IntPMF exact = convolve_step(p);
    const IntPMF approx = convolve_step(p.to_logfloat());
    CHECK(total_variation(exact, approx) < 1e-9);
    if (std::max(p.base(), q.base()) <= std::min(p.last(), q.last())) {
      const IntPMF a = product_normalize(std::vector<IntPMF>{p, q});
      const IntPMF b = product_normalize(std::vector<IntPMF>{p.to_logfloat(), q.to_logfloat()});
      CHECK(total_variation(a, b) < 1e-9);
      CHECK(moments(b).variance == doctest::Approx(to_double(exact_moments(a).variance)).epsilon(1e-9));
    }
  }
}

TEST_CASE("variance bound constant") {
  CHECK_THROWS_AS(variance_bound_constant(1.0), Error);
  CHECK(variance_bound_constant(4.0) >= variance_bound_constant(9.0));
  double previous = std::numeric_limits<double>::infinity();
  for (double a = 1.5; a < 1e6; a *= 1.7) {
    const double c = variance_bound_constant(a);
    CHECK(std::isfinite(c));
    CHECK(c <= previous);
    previous = c;
  }
  const double c_lambda = variance_bound_constant(to_double(lambda_root(1e-12).lower_squared()));
  CHECK(c_lambda == doctest::Approx(10.844186725017996).epsilon(1e-12));

  // Every alpha-SLC law obeys the bound, on either lattice step.
  Rng rng(17);
  for (int t = 0; t < 500; ++t) {
    const Rational alpha(static_cast<long>(9 + rng.below(120)), 8);
    const IntPMF p = random_slc(rng, alpha, 25);
    CHECK(to_double(exact_moments(p).variance) <= variance_bound_constant(to_double(alpha), 2));
    const IntPMF p1 = IntPMF::from_exact(0, 1, p.exact_weights());
    CHECK(to_double(exact_moments(p1).variance) <= variance_bound_constant(to_double(alpha), 1));
  }
}

TEST_CASE("lambda root") {
  CHECK(lambda_polynomial(Rational(3)) == -4);
  CHECK(lambda_polynomial(Rational(4)) == 11);
  const LambdaConstant lam = lambda_root(1e-9);
  CHECK(lam.value > 3.3829);
  CHECK(lam.value < 3.3831);
  CHECK(std::abs(lam.residual) <= 1e-9);
  CHECK(lam.residual <= lam.tolerance);
  CHECK(lam.lower < lam.upper);
  CHECK(lambda_polynomial(lam.lower) < 0);
  CHECK(lambda_polynomial(lam.upper) > 0);
  CHECK(lam.value * lam.value > 11.44);
  CHECK(lam.value * lam.value < 11.45);
}
