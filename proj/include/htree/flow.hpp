#pragma once

// Flows on directed tree regions and the flow measures built from independent
// geometric gradients: flow validation, sampling, minimum-of-geometrics law,
// the ray localisation criterion and variance series, single-site DLR checks
// and the exchangeability of level minima.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "htree/pmf.hpp"
#include "htree/tree.hpp"

namespace htree {

/// Edge weight in (0, +inf].
class FlowWeight {
 public:
  FlowWeight() = default;
  explicit FlowWeight(Rational value);
  static FlowWeight infinity();
  /// Exact binary value of a double; +inf maps to infinity().
  static FlowWeight from_double(double x);
  /// "p/q", "p", a decimal literal such as "0.25", or "inf".
  static FlowWeight parse(std::string_view text);

  bool is_infinite() const noexcept { return infinite_; }
  const Rational& value() const;
  double to_double() const;
  std::string to_string() const;

  friend FlowWeight operator+(const FlowWeight& a, const FlowWeight& b);
  friend bool operator==(const FlowWeight& a, const FlowWeight& b);

 private:
  bool infinite_ = false;
  Rational value_{1};
};

/// Weights indexed by child vertex: entry v is phi on the edge v -> parent(v).
/// The root's entry is unused.
struct Flow {
  std::vector<std::optional<FlowWeight>> edge;

  const FlowWeight& at(Vertex child) const;
};

/// Weights on the deepest edges, propagated upward by summing over children.
/// `leaf_weight(v)` is called for every vertex without children.
Flow flow_from_leaf_weights(const DirectedTreeRegion& region, const std::function<FlowWeight(Vertex)>& leaf_weight);

/// Every deepest edge carries `leaf_weight`; on a d-ary region the weight
/// grows by a factor d per level towards the root.
Flow level_constant_flow(const DirectedTreeRegion& region, const FlowWeight& leaf_weight);

/// Illustrative near-ray flow on a d-ary region: off-ray edges entering depth g
/// carry eps * d^-g, and the ray through the first child at every level carries
/// p plus whatever the off-ray subtrees feed into it.
Flow near_ray_flow(const DirectedTreeRegion& region, const Rational& p, const Rational& eps);

/// The ray used by near_ray_flow: first child at each level, root excluded.
std::vector<Vertex> leftmost_ray(const DirectedTreeRegion& region);

struct FlowViolation {
  Vertex vertex = kNoVertex;
  FlowWeight parent_weight;
  FlowWeight children_sum;
  /// parent - children when both are finite.
  std::optional<Rational> residual;
};

struct FlowReport {
  bool valid = true;
  std::vector<FlowViolation> violations;
};

/// Checks phi(v -> p(v)) = sum of phi(c -> v) over children c at every vertex
/// with both a parent and children. Throws MissingEdgeWeight.
FlowReport validate_flow(const DirectedTreeRegion& region, const Flow& flow);

/// Draws `count` configurations of mu_phi: independent truncated Geom(phi)
/// gradients h(parent) - h(child), heights anchored at h(anchor) = 0.
/// Throws InvalidFlow when the flow condition fails.
void sample_flow_measure(const DirectedTreeRegion& region, const Flow& flow, double eps, std::uint64_t seed,
                         Vertex anchor, std::uint64_t count, const std::function<void(const HeightAssignment&)>& visit);

/// Inverse-transform sampler for truncated Geom(alpha).
class GeometricSampler {
 public:
  GeometricSampler(const FlowWeight& alpha, double eps);
  Height operator()(Rng& rng) const;
  const IntPMF& law() const noexcept { return law_; }

 private:
  IntPMF law_;
  std::vector<double> cdf_;
};

/// Law of the minimum of independent Geom(alpha_i): Geom(sum alpha_i).
/// Throws EmptyEdgeSet.
IntPMF min_gradient_law(std::span<const FlowWeight> alphas, double eps = 1e-12);
/// Exact counterpart in terms of the ratios q_i = e^{-alpha_i}.
IntPMF min_gradient_law_exact(std::span<const Rational> ratios, const Rational& eps);

struct RaySpec {
  enum class Kind { constant, geometric, table };
  Kind kind = Kind::constant;
  Rational p{1};          // constant value, or the first term of the geometric family
  Rational r{2};          // growth factor of the geometric family
  std::vector<double> table;  // phi_1, phi_2, ... for the table family

  /// phi_g for g >= 1.
  double term(std::size_t g) const;
};

enum class Localisation { localised, delocalised, undecided };
std::string to_string(Localisation v);

struct LocalisationReport {
  Localisation verdict = Localisation::undecided;
  double partial_sum = 0.0;  // sum of e^{-phi_g} over the examined prefix
  double last_term = 0.0;
  std::size_t terms = 0;
  std::string rule;          // which decision rule fired
};

/// Classifies a ray by whether sum_g e^{-phi_g} converges. The constant and
/// geometric families are decided in closed form; tables fall back to a ratio
/// test and then a logarithmic-growth test on the second half of the budgeted
/// prefix, returning undecided when neither is conclusive.
LocalisationReport localisation_test(const RaySpec& spec, std::size_t budget);

/// Variance of h(x_n) - h(x_0) along a ray: sum e^{-phi}/(1 - e^{-phi})^2.
double ray_variance(std::span<const FlowWeight> phis);

struct DlrReport {
  bool pass = false;
  Height lo = 0;
  Height hi = 0;
  IntPMF conditional = IntPMF::dirac(0);
};

/// Conditional law of h(x) under mu_phi given the parent height and the
/// children heights; pass iff it is exactly uniform on [max children, parent].
/// Throws EmptyInterval for inconsistent neighbour heights.
DlrReport dlr_single_site_check(const FlowWeight& parent_weight, std::span<const FlowWeight> child_weights,
                                Height parent_height, std::span<const Height> child_heights);

/// A flow-consistent neighbourhood of one vertex: 1-4 children with random
/// rational weights, the parent weight equal to their sum, and heights with
/// the parent at or above every child.
struct DlrCase {
  FlowWeight parent_weight;
  std::vector<FlowWeight> child_weights;
  Height parent_height = 0;
  std::vector<Height> child_heights;
};

DlrCase random_dlr_case(Rng& rng);

/// X_j = min over edges y -> p(y) with y in D_j(x) of h(p(y)) - h(y), j < n.
std::vector<Height> level_minima(const DirectedTreeRegion& region, const HeightAssignment& h, Vertex x, int n);

struct ExchangeabilityReport {
  bool pass = false;
  /// exact mode: max |P(composition | sum) - 1/#compositions|
  Rational max_deviation;
  std::uint64_t configurations = 0;
  /// statistical mode: smallest pairwise symmetry-test p-value and the
  /// Bonferroni-adjusted threshold it is compared against.
  double min_p_value = 1.0;
  double threshold = 0.0;
  std::size_t samples = 0;
};

/// Exact check on the d-ary monotone region of depth n with root 0 and
/// boundary -k at depth n: conditional on the sum, (X_0..X_{n-1}) below the
/// first child of the root is uniform over compositions.
ExchangeabilityReport exchangeability_exact(int d, int n, Height k, std::uint64_t cap = kDefaultEnumerationCap);

/// Pairwise Bowker symmetry tests on sampled sequences (family-wise level alpha).
ExchangeabilityReport exchangeability_statistical(const std::vector<std::vector<Height>>& sequences,
                                                  double alpha = 0.01);

/// Samples mu_phi and tests the level minima below x for exchangeability.
ExchangeabilityReport exchangeability_flow(const DirectedTreeRegion& region, const Flow& flow, Vertex x, int n,
                                           std::size_t samples, double eps, std::uint64_t seed, double alpha = 0.01);

struct FlowSpec {
  enum class Family { level_constant, near_ray, explicit_edges };
  RegionSpec region;
  Family family = Family::level_constant;
  FlowWeight leaf_weight;          // level_constant
  Rational p{1};                   // near_ray
  Rational eps{1, 100};            // near_ray
  std::vector<std::pair<Vertex, FlowWeight>> edges;  // explicit_edges, by child vertex

  friend bool operator==(const FlowSpec&, const FlowSpec&) = default;
};

std::string save_flow_spec(const FlowSpec& spec);
FlowSpec load_flow_spec(const std::string& text);
FlowSpec read_flow_file(const std::string& path);
Flow build_flow(const FlowSpec& spec, const DirectedTreeRegion& region);

}  // namespace htree
