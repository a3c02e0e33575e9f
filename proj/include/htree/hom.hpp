#pragma once

// Uniform graph homomorphisms on finite tree regions: exact marginals by
// leaf-to-target message passing, strong log-concavity certification of the
// messages, variance checks, heat-bath Glauber dynamics and the level-average
// martingale of i.i.d. +-1 gradients.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "htree/pmf.hpp"
#include "htree/rng.hpp"
#include "htree/tree.hpp"

namespace htree {

/// Messages toward a target vertex x. Entry y holds p_y, the law of h(y) once
/// the edge from y toward x is removed; boundary vertices hold Dirac masses.
/// The target's own entry is empty.
struct MessageTable {
  Vertex target = kNoVertex;
  std::vector<std::optional<IntPMF>> messages;

  const IntPMF& at(Vertex v) const;
};

struct MarginalResult {
  IntPMF marginal;
  MessageTable table;
};

/// Law of h(x) under the uniform measure on homomorphisms agreeing with the
/// boundary. Throws ErrorCode::infeasible_boundary for infeasible boundaries.
MarginalResult exact_marginal(const TreeRegion& region, Vertex x, PmfMode mode = PmfMode::exact);

struct CertificationReport {
  bool pass = true;
  SlcCoefficient min_coefficient;
  Vertex min_vertex = kNoVertex;
  Rational threshold;
  std::size_t checked = 0;
  std::vector<Vertex> failing;
};

/// Every stored message (and `marginal`, when given) must be
/// threshold-strongly log-concave.
CertificationReport certify_messages(const MessageTable& table, const Rational& threshold,
                                     const IntPMF* marginal = nullptr);
/// Threshold defaults to the certified rational lower bound of lambda^2.
CertificationReport certify_messages(const MessageTable& table, const IntPMF* marginal = nullptr);

/// Certified lower bound for lambda^2 (bisection at tolerance 1e-12).
const Rational& certified_lambda_squared_lower();

/// C(lambda^2) on the parity lattice, evaluated at the certified lower bound
/// of lambda^2 (the bound is nonincreasing in alpha).
double reference_variance_bound();

struct VarianceCheck {
  Rational variance;
  double bound = 0.0;
  bool pass = true;
};

VarianceCheck marginal_variance_check(const TreeRegion& region, Vertex x, double bound = reference_variance_bound());

/// Deterministic feasible starting point: vertices taken in BFS order from the
/// boundary, each set to the midpoint of its current feasible range (lower
/// value on ties).
HeightAssignment initial_hom_configuration(const TreeRegion& region);

/// Law of h(v) given all other heights: uniform on {m-1, m+1} when every
/// neighbour equals m, the forced midpoint when neighbours differ by two.
IntPMF heat_bath_conditional(const TreeRegion& region, const HeightAssignment& h, Vertex v);

/// Heat-bath dynamics; one sweep resamples every interior vertex in index order.
class GlauberChain {
 public:
  GlauberChain(const TreeRegion& region, std::uint64_t seed);

  void sweep();
  const HeightAssignment& state() const noexcept { return state_; }

 private:
  const TreeRegion* region_;
  Rng rng_;
  HeightAssignment state_;
};

/// Runs burn_in sweeps, then `sweeps` further sweeps, calling visit after each.
void glauber_sampler(const TreeRegion& region, std::uint64_t sweeps, std::uint64_t burn_in, std::uint64_t seed,
                     const std::function<void(const HeightAssignment&)>& visit);

struct VarianceProfilePoint {
  int radius = 0;
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 standard errors
  std::size_t replicas = 0;
};

/// Estimates, for each radius k, the average over boundary data b of
/// Var[h(x)] under the uniform measure on the ball of radius k around x with
/// boundary b on its sphere. Each replica draws b from an independent
/// Glauber chain on `outer` (burn_in sweeps, seed derived from `seed`).
std::vector<VarianceProfilePoint> variance_profile(const TreeRegion& outer, Vertex x, std::span<const int> radii,
                                                   std::size_t replicas, std::uint64_t burn_in, std::uint64_t seed);

struct OffsetDemoResult {
  int degree = 0;
  int depth = 0;
  std::vector<std::uint64_t> level_sizes;     // number of vertices (= entering edges) per level
  std::vector<std::vector<double>> averages;  // per replica: A_0 .. A_depth
  std::vector<double> histogram;              // mass of frac(A_depth) per bin
};

/// i.i.d. fair +-1 gradients on the ball of radius `depth` in the
/// degree-regular tree, h(root) = 0. Level averages are accumulated from the
/// coin sums of each level, which is exact because every vertex of a level
/// has the same number of children.
OffsetDemoResult height_offset_demo(int degree, int depth, std::size_t replicas, std::uint64_t seed, int bins = 10);

/// A_k for an explicit assignment on a regular ball centred at vertex 0.
std::vector<double> level_averages(const TreeRegion& region, const HeightAssignment& h);

}  // namespace htree
