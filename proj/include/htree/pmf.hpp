#pragma once

// Finitely supported probability mass functions on an integer lattice
// {base + i*step}, with the strong log-concavity calculus used by the
// homomorphism engine.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "htree/rational.hpp"

namespace htree {

enum class PmfMode { exact, logfloat };

/// A PMF with contiguous, trimmed support on a lattice of step 1 or 2.
///
/// Exact mode stores rationals summing to exactly one. Log-float mode stores
/// natural-log weights normalised so that the exponentials sum to one. A
/// support of size one is compatible with either step.
class IntPMF {
 public:
  static IntPMF dirac(Height at);

  /// Trims zero weights at both ends and normalises. Throws on negative
  /// weights, interior zeros, an empty/zero vector or a step outside {1,2}.
  static IntPMF from_exact(Height base, int step, std::vector<Rational> weights);
  static IntPMF from_log(Height base, int step, std::vector<double> log_weights);
  /// Convenience for tests and fixtures: {point -> weight}, weights normalised.
  static IntPMF from_points(const std::vector<std::pair<Height, Rational>>& points);
  /// Nonnegative integer weights; the common denominator is their sum.
  static IntPMF from_integers(Height base, int step, std::vector<BigInt> weights);

  PmfMode mode() const noexcept { return mode_; }
  bool is_exact() const noexcept { return mode_ == PmfMode::exact; }
  Height base() const noexcept { return base_; }
  int step() const noexcept { return step_; }
  std::size_t size() const noexcept { return size_; }
  Height last() const noexcept { return base_ + step_ * static_cast<Height>(size_ - 1); }
  Height at_index(std::size_t i) const noexcept { return base_ + step_ * static_cast<Height>(i); }

  bool contains(Height k) const noexcept;

  /// Exact weight at k (zero off support). Exact mode only.
  Rational exact(Height k) const;
  double prob(Height k) const;
  double log_prob(Height k) const;

  const std::vector<Rational>& exact_weights() const;
  /// Exact mode: weight i is numerators()[i] / denominator(), not reduced.
  /// Arithmetic on this form avoids a gcd per entry.
  const std::vector<BigInt>& numerators() const;
  const BigInt& denominator() const;
  const std::vector<double>& log_weights() const;

  IntPMF to_logfloat() const;

  /// "{-1:1/2, 1:1/2}" in exact mode, 17 significant digits otherwise.
  std::string to_string() const;

  friend bool operator==(const IntPMF& a, const IntPMF& b);

 private:
  IntPMF() = default;

  PmfMode mode_ = PmfMode::exact;
  Height base_ = 0;
  int step_ = 1;
  std::size_t size_ = 0;
  std::vector<BigInt> num_;
  BigInt den_{1};
  // Reduced weights, built on first use; not safe to populate concurrently.
  mutable std::vector<Rational> exact_;
  std::vector<double> log_;
};

/// p * X where X puts mass 1/2 on each of -1 and +1.
IntPMF convolve_step(const IntPMF& p);

/// Pointwise product of PMFs on a shared lattice, renormalised.
/// Throws ErrorCode::disjoint_support when the supports do not meet.
IntPMF product_normalize(std::span<const IntPMF> ps);

/// Strong log-concavity coefficient: min over interior support points of
/// p(k)^2 / (p(k-s) p(k+s)); infinite for supports of size <= 2.
struct SlcCoefficient {
  bool infinite = true;
  bool exact = true;
  Rational value;       // meaningful when exact && !infinite
  double approx = std::numeric_limits<double>::infinity();

  bool at_least(const Rational& alpha) const;
  std::string to_string() const;
};

SlcCoefficient log_concavity_coefficient(const IntPMF& p);

/// Geom(alpha) truncated at the smallest K with tail mass e^{-(K+1)alpha} <= eps,
/// renormalised. alpha = +inf yields the Dirac mass at zero.
IntPMF geometric_pmf(double alpha, double eps = 1e-12);

/// Exact counterpart parameterised by the ratio q = e^{-alpha} in (0,1)
/// (q = 0 is the Dirac mass at zero).
IntPMF geometric_pmf_exact(const Rational& ratio, const Rational& eps);

/// Smallest K with ratio^{K+1} <= eps.
std::int64_t geometric_truncation_point(double alpha, double eps);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

struct ExactMoments {
  Rational mean;
  Rational variance;
};

Moments moments(const IntPMF& p);
ExactMoments exact_moments(const IntPMF& p);

/// Upper bound on the variance of any alpha-SLC PMF on a lattice of step s:
/// s^2 * sum_l l^2 exp(-beta |l| (|l| - 1)) with beta = log(alpha) / 2.
double variance_bound_constant(double alpha, int step = 2);

/// The real root of x^3 - 3x^2 - x - 1 in [3,4], bracketed by exact dyadic
/// rationals.
struct LambdaConstant {
  double value = 0.0;
  double residual = 0.0;
  double tolerance = 0.0;
  Rational lower;
  Rational upper;

  /// Certified rational lower bound for lambda^2.
  Rational lower_squared() const { return lower * lower; }
  Rational upper_squared() const { return upper * upper; }
};

/// Cubic whose root defines lambda, evaluated exactly.
Rational lambda_polynomial(const Rational& x);

LambdaConstant lambda_root(double tol = 1e-9);

double total_variation(const IntPMF& p, const IntPMF& q);
Rational total_variation_exact(const IntPMF& p, const IntPMF& q);

}  // namespace htree
