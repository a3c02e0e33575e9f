#include "htree/monotone.hpp"

#include <algorithm>
#include <cmath>

#include "htree/error.hpp"

namespace htree {

namespace {

double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

std::uint64_t power(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > std::numeric_limits<std::uint64_t>::max() / base) {
      throw Error(ErrorCode::size_cap_exceeded, "tree level size overflows 64 bits");
    }
    r *= base;
  }
  return r;
}

}  // namespace

std::size_t CountingTable::idx(int j, Height a) const {
  if (j < 1 || j > n_ - 1 || a < -k_ || a > 0) {
    throw Error(ErrorCode::invalid_argument,
                "table entry (" + std::to_string(j) + ", " + std::to_string(a) + ") out of range");
  }
  return static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(k_ + 1) + static_cast<std::size_t>(a + k_);
}

const BigInt& CountingTable::z(int j, Height a) const {
  if (mode_ != CountMode::exact) throw Error(ErrorCode::invalid_argument, "exact counts need an exact table");
  return z_[idx(j, a)];
}

const BigInt& CountingTable::prefix(int j, Height a) const {
  if (mode_ != CountMode::exact) throw Error(ErrorCode::invalid_argument, "exact counts need an exact table");
  return prefix_[idx(j, a)];
}

double CountingTable::log_z(int j, Height a) const { return log_z_[idx(j, a)]; }
double CountingTable::log_prefix(int j, Height a) const { return log_prefix_[idx(j, a)]; }

BigInt CountingTable::total() const { return pow(prefix(1, 0), static_cast<unsigned>(d_)); }
double CountingTable::log_total() const { return d_ * log_prefix(1, 0); }

CountingTable build_counting_table(int d, int n, Height k, CountMode mode, double digit_cap) {
  if (d < 1) throw Error(ErrorCode::invalid_argument, "need at least one child per vertex");
  if (n < 2) throw Error(ErrorCode::invalid_argument, "depth must be at least 2");
  if (k < 0) throw Error(ErrorCode::invalid_argument, "boundary drop must be nonnegative");
  if (static_cast<double>(n) * static_cast<double>(k + 1) > 5e7) {
    throw Error(ErrorCode::size_cap_exceeded, "counting table exceeds 5e7 entries");
  }
  CountingTable t;
  t.d_ = d;
  t.n_ = n;
  t.k_ = k;
  t.mode_ = mode;
  const std::size_t width = static_cast<std::size_t>(k + 1);
  const std::size_t cells = static_cast<std::size_t>(n - 1) * width;
  t.log_z_.assign(cells, 0.0);
  t.log_prefix_.assign(cells, 0.0);
  for (int j = n - 1; j >= 1; --j) {
    double run = -std::numeric_limits<double>::infinity();
    for (Height a = -k; a <= 0; ++a) {
      const std::size_t i = t.idx(j, a);
      t.log_z_[i] = j == n - 1 ? 0.0 : d * t.log_prefix_[t.idx(j + 1, a)];
      run = log_add(run, t.log_z_[i]);
      t.log_prefix_[i] = run;
    }
  }
  if (mode == CountMode::logfloat) return t;

  const double digits = t.log_total() / std::log(10.0);
  if (digits > digit_cap) {
    throw Error(ErrorCode::size_cap_exceeded,
                "exact counts need about " + std::to_string(static_cast<long long>(digits)) + " digits");
  }
  t.z_.assign(cells, BigInt(0));
  t.prefix_.assign(cells, BigInt(0));
  for (int j = n - 1; j >= 1; --j) {
    BigInt run = 0;
    for (Height a = -k; a <= 0; ++a) {
      const std::size_t i = t.idx(j, a);
      t.z_[i] = j == n - 1 ? BigInt(1) : pow(t.prefix_[t.idx(j + 1, a)], static_cast<unsigned>(d));
      run += t.z_[i];
      t.prefix_[i] = run;
    }
  }
  return t;
}

DirectedTreeRegion monotone_region(int d, int n, Height k, std::size_t vertex_cap) {
  const DirectedTreeRegion shape = build_regular_directed_region(d, n, vertex_cap);
  std::vector<Height> h(shape.size(), 0);
  for (std::size_t v = 0; v < shape.size(); ++v) {
    if (shape.depth(static_cast<Vertex>(v)) == n) h[v] = -k;
  }
  return shape.with_heights(std::move(h));
}

Rational child_zero_probability(const CountingTable& t) { return Rational(t.z(1, 0), t.prefix(1, 0)); }

double child_zero_probability_log(const CountingTable& t) { return std::exp(t.log_z(1, 0) - t.log_prefix(1, 0)); }

Rational child_zero_lower_bound(int d, int n, Height k) {
  if (n < 2 || d < 1 || k < 0) throw Error(ErrorCode::invalid_argument, "need d >= 1, n >= 2, k >= 0");
  const std::uint64_t e = power(static_cast<std::uint64_t>(d), n - 2);
  return 1 - pow(Rational(BigInt(k), BigInt(k + 1)), e);
}

IntPMF depth_marginal(const CountingTable& t, int depth) {
  if (depth < 1 || depth > t.n() - 1) throw Error(ErrorCode::invalid_argument, "depth must lie in [1, n-1]");
  const Height k = t.k();
  const auto at = [k](Height a) { return static_cast<std::size_t>(a + k); };
  std::vector<Rational> law(static_cast<std::size_t>(k + 1));
  for (Height b = -k; b <= 0; ++b) law[at(b)] = Rational(t.z(1, b), t.prefix(1, 0));
  for (int j = 2; j <= depth; ++j) {
    std::vector<Rational> next(law.size(), Rational(0));
    for (Height a = -k; a <= 0; ++a) {
      if (law[at(a)] == 0) continue;
      const Rational scale = law[at(a)] / Rational(t.prefix(j, a));
      for (Height b = -k; b <= a; ++b) next[at(b)] += scale * Rational(t.z(j, b));
    }
    law = std::move(next);
  }
  return IntPMF::from_exact(-k, 1, std::move(law));
}

IntPMF depth_marginal_log(const CountingTable& t, int depth) {
  if (depth < 1 || depth > t.n() - 1) throw Error(ErrorCode::invalid_argument, "depth must lie in [1, n-1]");
  const Height k = t.k();
  const auto at = [k](Height a) { return static_cast<std::size_t>(a + k); };
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> law(static_cast<std::size_t>(k + 1));
  for (Height b = -k; b <= 0; ++b) law[at(b)] = t.log_z(1, b) - t.log_prefix(1, 0);
  for (int j = 2; j <= depth; ++j) {
    std::vector<double> next(law.size(), ninf);
    for (Height a = -k; a <= 0; ++a) {
      const double scale = law[at(a)] - t.log_prefix(j, a);
      for (Height b = -k; b <= a; ++b) next[at(b)] = log_add(next[at(b)], scale + t.log_z(j, b));
    }
    law = std::move(next);
  }
  return IntPMF::from_log(-k, 1, std::move(law));
}

// ---------------------------------------------------------------------------
// Sampling

BigInt uniform_below(Rng& rng, const BigInt& bound) {
  if (bound <= 0) throw Error(ErrorCode::invalid_argument, "uniform draw needs a positive bound");
  const std::size_t bits = msb(bound) + 1;
  if (bits <= 64) return BigInt(rng.below(bound.convert_to<std::uint64_t>()));
  const std::size_t words = (bits + 63) / 64;
  const std::size_t drop = words * 64 - bits;
  for (;;) {
    BigInt x = 0;
    for (std::size_t w = 0; w < words; ++w) {
      x <<= 64;
      x += BigInt(rng.bits());
    }
    x >>= drop;
    if (x < bound) return x;
  }
}

MonotoneSampler::MonotoneSampler(const CountingTable& table) : table_(&table) {
  if (table.mode() != CountMode::exact) throw Error(ErrorCode::invalid_argument, "the sampler needs exact counts");
}

Height MonotoneSampler::draw_child(Rng& rng, int depth, Height parent_value) const {
  const Height k = table_->k();
  if (depth == table_->n() || parent_value == -k) return -k;
  const BigInt u = uniform_below(rng, table_->prefix(depth, parent_value));
  // smallest b with prefix(depth, b) > u
  Height lo = -k;
  Height hi = parent_value;
  while (lo < hi) {
    const Height mid = lo + (hi - lo) / 2;
    if (table_->prefix(depth, mid) > u) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

void MonotoneSampler::sample(Rng& rng, const DirectedTreeRegion& r, HeightAssignment& out) const {
  if (r.max_depth() != table_->n()) throw Error(ErrorCode::invalid_argument, "region depth does not match the table");
  out.assign(r.size(), 0);
  for (std::size_t v = 1; v < r.size(); ++v) {
    const auto vx = static_cast<Vertex>(v);
    out[v] = draw_child(rng, r.depth(vx), out[static_cast<std::size_t>(r.parent(vx))]);
  }
}

bool MonotoneSampler::frozen_to_depth(Rng& rng, int m) const {
  // While everything above is zero, each vertex of depth j is an independent
  // draw given a zero parent.
  m = std::min(m, table_->n() - 1);
  for (int j = 1; j <= m; ++j) {
    const std::uint64_t level = power(static_cast<std::uint64_t>(table_->d()), j);
    for (std::uint64_t i = 0; i < level; ++i) {
      if (draw_child(rng, j, 0) != 0) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Frozen region

Rational frozen_union_bound(int d, int n, Height k, int m) {
  Rational sum = 0;
  const Rational keep(BigInt(k), BigInt(k + 1));
  for (int j = 1; j <= m; ++j) {
    sum += Rational(BigInt(power(static_cast<std::uint64_t>(d), j))) *
           pow(keep, power(static_cast<std::uint64_t>(d), n - j - 1));
  }
  return 1 - sum;
}

FrozenRegionResult frozen_region_experiment(int d, int n, double c, std::size_t replicas, std::uint64_t seed,
                                            double a) {
  if (c < 0) throw Error(ErrorCode::invalid_argument, "c must be nonnegative");
  if (a < 0) throw Error(ErrorCode::invalid_argument, "a must be nonnegative");
  FrozenRegionResult res;
  res.d = d;
  res.n = n;
  res.c = c;
  res.k = static_cast<Height>(std::floor(a * n));
  res.replicas = replicas;
  const double raw = std::floor(static_cast<double>(n) - c * std::log(static_cast<double>(n)));
  res.m = static_cast<int>(std::clamp(raw, 0.0, static_cast<double>(n - 1)));

  const CountingTable table = build_counting_table(d, n, res.k);
  double log_exact = 0.0;
  for (int j = 1; j <= res.m; ++j) {
    log_exact += static_cast<double>(power(static_cast<std::uint64_t>(d), j)) * (table.log_z(j, 0) - table.log_prefix(j, 0));
  }
  res.exact = std::exp(log_exact);
  res.union_bound = to_double(frozen_union_bound(d, n, res.k, res.m));

  if (replicas > 0) {
    const MonotoneSampler sampler(table);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < replicas; ++r) {
      Rng rng(derive_seed(seed, "frozen_region", r));
      if (sampler.frozen_to_depth(rng, res.m)) ++hits;
    }
    res.estimate = static_cast<double>(hits) / static_cast<double>(replicas);
    res.standard_error = std::sqrt(res.estimate * (1 - res.estimate) / static_cast<double>(replicas));
  }
  return res;
}

}  // namespace htree
