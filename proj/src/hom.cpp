#include "htree/hom.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "htree/error.hpp"
#include "htree/stats.hpp"

namespace htree {

namespace {

std::size_t at(Vertex v) { return static_cast<std::size_t>(v); }

IntPMF in_mode(IntPMF p, PmfMode mode) { return mode == PmfMode::logfloat ? p.to_logfloat() : p; }

/// Restriction of p to [lo, hi], renormalised.
IntPMF clip(const IntPMF& p, Height lo, Height hi) {
  if (p.base() >= lo && p.last() <= hi) return p;
  std::size_t first = 0;
  while (first < p.size() && p.at_index(first) < lo) ++first;
  std::size_t end = p.size();
  while (end > first && p.at_index(end - 1) > hi) --end;
  if (first == end) throw Error(ErrorCode::infeasible_boundary, "message support misses the feasible range");
  if (p.is_exact()) {
    const auto& w = p.exact_weights();
    return IntPMF::from_exact(p.at_index(first), p.step(), std::vector<Rational>(w.begin() + first, w.begin() + end));
  }
  const auto& w = p.log_weights();
  return IntPMF::from_log(p.at_index(first), p.step(), std::vector<double>(w.begin() + first, w.begin() + end));
}

IntPMF combine(const std::vector<IntPMF>& factors) {
  try {
    return product_normalize(factors);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::disjoint_support) throw Error(ErrorCode::infeasible_boundary, e.what());
    throw;
  }
}

bool less_coefficient(const SlcCoefficient& a, const SlcCoefficient& b) {
  if (a.infinite) return false;
  if (b.infinite) return true;
  if (a.exact && b.exact) return a.value < b.value;
  return a.approx < b.approx;
}

}  // namespace

const IntPMF& MessageTable::at(Vertex v) const {
  const auto& m = messages.at(static_cast<std::size_t>(v));
  if (!m) throw Error(ErrorCode::invalid_argument, "no message stored for vertex " + std::to_string(v));
  return *m;
}

MarginalResult exact_marginal(const TreeRegion& region, Vertex x, PmfMode mode) {
  if (x < 0 || at(x) >= region.size()) throw Error(ErrorCode::invalid_argument, "target vertex out of range");
  const auto feasibility = validate_hom_boundary(region);
  if (!feasibility.feasible) {
    throw Error(ErrorCode::infeasible_boundary, "boundary violates the " + feasibility.reason + " condition between vertices " +
                                                    std::to_string(feasibility.witness_a) + " and " +
                                                    std::to_string(feasibility.witness_b));
  }
  MessageTable table;
  table.target = x;
  table.messages.resize(region.size());
  if (!region.is_interior(x)) return {in_mode(IntPMF::dirac(region.boundary_height(x)), mode), std::move(table)};

  const HeightBounds bounds = lipschitz_bounds(region);
  // BFS from the target; messages are produced in reverse BFS order.
  std::vector<Vertex> order{x};
  std::vector<Vertex> toward(region.size(), kNoVertex);
  std::vector<bool> seen(region.size(), false);
  seen[at(x)] = true;
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (Vertex w : region.neighbors(order[head])) {
      if (seen[at(w)]) continue;
      seen[at(w)] = true;
      toward[at(w)] = order[head];
      order.push_back(w);
    }
  }
  std::vector<IntPMF> factors;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Vertex y = *it;
    if (y == x) break;
    if (!region.is_interior(y)) {
      table.messages[at(y)] = in_mode(IntPMF::dirac(region.boundary_height(y)), mode);
      continue;
    }
    factors.clear();
    for (Vertex z : region.neighbors(y)) {
      if (z != toward[at(y)]) factors.push_back(convolve_step(*table.messages[at(z)]));
    }
    table.messages[at(y)] = clip(combine(factors), bounds.lo[at(y)], bounds.hi[at(y)]);
  }
  factors.clear();
  for (Vertex z : region.neighbors(x)) factors.push_back(convolve_step(*table.messages[at(z)]));
  IntPMF marginal = clip(combine(factors), bounds.lo[at(x)], bounds.hi[at(x)]);
  return {std::move(marginal), std::move(table)};
}

CertificationReport certify_messages(const MessageTable& table, const Rational& threshold, const IntPMF* marginal) {
  CertificationReport report;
  report.threshold = threshold;
  const auto check = [&](const IntPMF& p, Vertex v) {
    const SlcCoefficient c = log_concavity_coefficient(p);
    ++report.checked;
    if (report.min_vertex == kNoVertex || less_coefficient(c, report.min_coefficient)) {
      report.min_coefficient = c;
      report.min_vertex = v;
    }
    if (!c.at_least(threshold)) {
      report.pass = false;
      report.failing.push_back(v);
    }
  };
  for (std::size_t v = 0; v < table.messages.size(); ++v) {
    if (table.messages[v]) check(*table.messages[v], static_cast<Vertex>(v));
  }
  if (marginal) check(*marginal, table.target);
  return report;
}

const Rational& certified_lambda_squared_lower() {
  static const Rational value = lambda_root(1e-12).lower_squared();
  return value;
}

CertificationReport certify_messages(const MessageTable& table, const IntPMF* marginal) {
  return certify_messages(table, certified_lambda_squared_lower(), marginal);
}

double reference_variance_bound() {
  static const double value = variance_bound_constant(to_double(certified_lambda_squared_lower()), 2);
  return value;
}

VarianceCheck marginal_variance_check(const TreeRegion& region, Vertex x, double bound) {
  const MarginalResult r = exact_marginal(region, x, PmfMode::exact);
  VarianceCheck check;
  check.variance = exact_moments(r.marginal).variance;
  check.bound = bound;
  check.pass = check.variance <= rational_from_double(bound);
  return check;
}

HeightAssignment initial_hom_configuration(const TreeRegion& region) {
  const auto feasibility = validate_hom_boundary(region);
  if (!feasibility.feasible) throw Error(ErrorCode::infeasible_boundary, "boundary is infeasible (" + feasibility.reason + ")");
  const std::size_t n = region.size();
  std::vector<bool> fixed(n, false);
  HeightAssignment h = region.heights();
  std::deque<Vertex> queue;
  std::vector<bool> queued(n, false);
  for (Vertex v : region.boundary_vertices()) {
    fixed[at(v)] = true;
    queued[at(v)] = true;
    queue.push_back(v);
  }
  std::vector<Vertex> order;
  while (!queue.empty()) {
    const Vertex v = queue.front();
    queue.pop_front();
    if (region.is_interior(v)) order.push_back(v);
    for (Vertex w : region.neighbors(v)) {
      if (queued[at(w)]) continue;
      queued[at(w)] = true;
      queue.push_back(w);
    }
  }
  for (Vertex v : order) {
    const HeightBounds b = lipschitz_bounds(region, fixed, h);
    const Height lo = b.lo[at(v)];
    const Height hi = b.hi[at(v)];
    if (lo > hi) throw std::logic_error("greedy extension reached an empty range");
    const Height points = (hi - lo) / 2 + 1;
    h[at(v)] = lo + 2 * ((points - 1) / 2);
    fixed[at(v)] = true;
  }
  if (!is_valid_hom(region, h)) throw std::logic_error("greedy extension produced an invalid homomorphism");
  return h;
}

IntPMF heat_bath_conditional(const TreeRegion& region, const HeightAssignment& h, Vertex v) {
  if (!region.is_interior(v)) return IntPMF::dirac(region.boundary_height(v));
  Height lo = std::numeric_limits<Height>::max();
  Height hi = std::numeric_limits<Height>::min();
  for (Vertex w : region.neighbors(v)) {
    lo = std::min(lo, h[at(w)]);
    hi = std::max(hi, h[at(w)]);
  }
  if (lo == hi) return IntPMF::from_exact(lo - 1, 2, {Rational(1, 2), Rational(1, 2)});
  if (hi - lo == 2) return IntPMF::dirac(lo + 1);
  throw Error(ErrorCode::invalid_argument, "neighbours of vertex " + std::to_string(v) + " are inconsistent");
}

GlauberChain::GlauberChain(const TreeRegion& region, std::uint64_t seed)
    : region_(&region), rng_(seed), state_(initial_hom_configuration(region)) {}

void GlauberChain::sweep() {
  for (Vertex v : region_->interior_vertices()) {
    Height lo = std::numeric_limits<Height>::max();
    Height hi = std::numeric_limits<Height>::min();
    for (Vertex w : region_->neighbors(v)) {
      const Height hw = state_[at(w)];
      lo = std::min(lo, hw);
      hi = std::max(hi, hw);
    }
    if (lo == hi) {
      state_[at(v)] = rng_.coin() ? lo + 1 : lo - 1;
    } else if (hi - lo == 2) {
      state_[at(v)] = lo + 1;
    } else {
      throw std::logic_error("Glauber state left the homomorphism space");
    }
  }
}

void glauber_sampler(const TreeRegion& region, std::uint64_t sweeps, std::uint64_t burn_in, std::uint64_t seed,
                     const std::function<void(const HeightAssignment&)>& visit) {
  GlauberChain chain(region, seed);
  for (std::uint64_t s = 0; s < burn_in; ++s) chain.sweep();
  for (std::uint64_t s = 0; s < sweeps; ++s) {
    chain.sweep();
    visit(chain.state());
  }
}

std::vector<VarianceProfilePoint> variance_profile(const TreeRegion& outer, Vertex x, std::span<const int> radii,
                                                   std::size_t replicas, std::uint64_t burn_in, std::uint64_t seed) {
  const auto dist = outer.distances_from(x);
  const int reach = *std::max_element(dist.begin(), dist.end());
  for (int k : radii) {
    if (k < 0 || k >= reach) {
      throw Error(ErrorCode::invalid_argument, "radius " + std::to_string(k) + " is not strictly inside the outer region");
    }
  }
  std::vector<std::vector<double>> values(radii.size());
  for (std::size_t r = 0; r < replicas; ++r) {
    GlauberChain chain(outer, derive_seed(seed, "variance_profile", r));
    for (std::uint64_t s = 0; s < burn_in; ++s) chain.sweep();
    for (std::size_t i = 0; i < radii.size(); ++i) {
      if (radii[i] == 0) {
        values[i].push_back(0.0);
        continue;
      }
      const TreeRegion ball = ball_subregion(outer, x, radii[i], chain.state());
      values[i].push_back(to_double(exact_moments(exact_marginal(ball, 0).marginal).variance));
    }
  }
  std::vector<VarianceProfilePoint> out;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const SampleSummary s = summarize(values[i]);
    out.push_back({radii[i], s.mean, 1.96 * s.mean_se, s.count});
  }
  return out;
}

OffsetDemoResult height_offset_demo(int degree, int depth, std::size_t replicas, std::uint64_t seed, int bins) {
  if (degree < 3) throw Error(ErrorCode::invalid_argument, "offset demo needs degree >= 3");
  if (depth < 0) throw Error(ErrorCode::invalid_argument, "depth must be nonnegative");
  if (bins < 1) throw Error(ErrorCode::invalid_argument, "histogram needs at least one bin");
  OffsetDemoResult out;
  out.degree = degree;
  out.depth = depth;
  out.level_sizes.push_back(1);
  for (int k = 1; k <= depth; ++k) {
    const std::uint64_t prev = out.level_sizes.back();
    const std::uint64_t next = k == 1 ? static_cast<std::uint64_t>(degree) : prev * static_cast<std::uint64_t>(degree - 1);
    if (next > (std::uint64_t{1} << 40)) throw Error(ErrorCode::size_cap_exceeded, "level sizes exceed 2^40 vertices");
    out.level_sizes.push_back(next);
  }
  out.histogram.assign(static_cast<std::size_t>(bins), 0.0);
  out.averages.reserve(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    Rng rng(derive_seed(seed, "offset_demo", r));
    std::vector<double> a{0.0};
    for (int k = 1; k <= depth; ++k) {
      // Each level average moves by the mean of the fresh coins on the edges entering it.
      const std::uint64_t n = out.level_sizes[static_cast<std::size_t>(k)];
      std::uint64_t ones = 0;
      std::uint64_t remaining = n;
      while (remaining >= 64) {
        ones += static_cast<std::uint64_t>(std::popcount(rng.bits()));
        remaining -= 64;
      }
      if (remaining > 0) {
        ones += static_cast<std::uint64_t>(std::popcount(rng.bits() >> (64 - remaining)));
      }
      const double increment = (2.0 * static_cast<double>(ones) - static_cast<double>(n)) / static_cast<double>(n);
      a.push_back(a.back() + increment);
    }
    const double frac = a.back() - std::floor(a.back());
    const auto bin = std::min<std::size_t>(static_cast<std::size_t>(bins) - 1, static_cast<std::size_t>(frac * bins));
    out.histogram[bin] += 1.0;
    out.averages.push_back(std::move(a));
  }
  if (replicas > 0) {
    for (double& m : out.histogram) m /= static_cast<double>(replicas);
  }
  return out;
}

std::vector<double> level_averages(const TreeRegion& region, const HeightAssignment& h) {
  const auto dist = region.distances_from(0);
  const int reach = *std::max_element(dist.begin(), dist.end());
  std::vector<double> sums(static_cast<std::size_t>(reach) + 1, 0.0);
  std::vector<double> counts(sums.size(), 0.0);
  for (std::size_t v = 0; v < region.size(); ++v) {
    sums[static_cast<std::size_t>(dist[v])] += static_cast<double>(h[v]);
    counts[static_cast<std::size_t>(dist[v])] += 1.0;
  }
  for (std::size_t k = 0; k < sums.size(); ++k) sums[k] /= counts[k];
  return sums;
}

}  // namespace htree
