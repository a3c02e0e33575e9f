#pragma once

// Uniform monotone functions on the d-ary tree of depth n with h(root) = 0
// and h = -k on the deepest layer: exact counting by depth/value symmetry,
// exact ancestral sampling and the frozen-region experiment.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "htree/pmf.hpp"
#include "htree/rng.hpp"
#include "htree/tree.hpp"

namespace htree {

enum class CountMode { exact, logfloat };

/// Z_j(a): number of monotone fillings of the subtree below a depth-j vertex
/// carrying height a, for 1 <= j <= n-1 and -k <= a <= 0.
/// Z_{n-1}(a) = 1 and Z_j(a) = (sum_{-k <= b <= a} Z_{j+1}(b))^d.
class CountingTable {
 public:
  int d() const noexcept { return d_; }
  int n() const noexcept { return n_; }
  Height k() const noexcept { return k_; }
  CountMode mode() const noexcept { return mode_; }

  const BigInt& z(int j, Height a) const;
  /// sum_{-k <= b <= a} Z_j(b)
  const BigInt& prefix(int j, Height a) const;
  double log_z(int j, Height a) const;
  double log_prefix(int j, Height a) const;

  /// Number of monotone configurations on the whole region (exact mode).
  BigInt total() const;
  double log_total() const;

  friend CountingTable build_counting_table(int d, int n, Height k, CountMode mode, double digit_cap);

 private:
  std::size_t idx(int j, Height a) const;

  int d_ = 1;
  int n_ = 2;
  Height k_ = 0;
  CountMode mode_ = CountMode::exact;
  std::vector<BigInt> z_, prefix_;
  std::vector<double> log_z_, log_prefix_;
};

/// Throws SizeCapExceeded when exact counts would need more than `digit_cap`
/// decimal digits.
CountingTable build_counting_table(int d, int n, Height k, CountMode mode = CountMode::exact,
                                   double digit_cap = 2e5);

/// The region the table describes.
DirectedTreeRegion monotone_region(int d, int n, Height k, std::size_t vertex_cap = kDefaultVertexCap);

/// P(h(z) = 0) for a child z of the root (exact mode).
Rational child_zero_probability(const CountingTable& table);
double child_zero_probability_log(const CountingTable& table);

/// 1 - (1 - 1/(k+1))^{d^{n-2}}, the lower bound for child_zero_probability.
Rational child_zero_lower_bound(int d, int n, Height k);

/// Law of h at any vertex of the given depth (1 <= depth <= n-1), exact mode.
IntPMF depth_marginal(const CountingTable& table, int depth);
/// Same in log-float arithmetic; valid in either mode.
IntPMF depth_marginal_log(const CountingTable& table, int depth);

/// Exact ancestral sampler; draws use uniform big integers, so the samples
/// follow the uniform measure exactly.
class MonotoneSampler {
 public:
  explicit MonotoneSampler(const CountingTable& table);

  /// Full configuration on `region` (from monotone_region with the table's d, n, k).
  void sample(Rng& rng, const DirectedTreeRegion& region, HeightAssignment& out) const;
  /// Samples depths 1..m top-down, stopping at the first nonzero height;
  /// true iff every vertex within depth m is zero.
  bool frozen_to_depth(Rng& rng, int m) const;

 private:
  Height draw_child(Rng& rng, int depth, Height parent_value) const;

  const CountingTable* table_;
};

/// Uniform integer in [0, bound), bound > 0.
BigInt uniform_below(Rng& rng, const BigInt& bound);

struct FrozenRegionResult {
  int d = 2;
  int n = 2;
  Height k = 0;
  double c = 0.0;
  int m = 0;                  // floor(n - c log n), clamped at 0
  std::size_t replicas = 0;
  double estimate = 0.0;      // fraction of samples with h = 0 on depths <= m
  double standard_error = 0.0;
  double exact = 1.0;         // prod_j (Z_j(0)/prefix_j(0))^{d^j}
  double union_bound = 1.0;   // 1 - sum_{j<=m} d^j (1 - 1/(k+1))^{d^{n-j-1}}
};

/// Boundary drop k = floor(a n); a = 1 gives the measure with k = n.
FrozenRegionResult frozen_region_experiment(int d, int n, double c, std::size_t replicas, std::uint64_t seed,
                                            double a = 1.0);

/// Union bound alone, exactly.
Rational frozen_union_bound(int d, int n, Height k, int m);

}  // namespace htree
