#include "htree/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "htree/error.hpp"

namespace htree {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Height floor_div(Height a, Height b) {
  Height q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

bool on_lattice(Height k, Height base, int step) {
  return ((k - base) % step + step) % step == 0;
}

}  // namespace

IntPMF IntPMF::dirac(Height at) {
  IntPMF p;
  p.mode_ = PmfMode::exact;
  p.base_ = at;
  p.step_ = 1;
  p.size_ = 1;
  p.num_.assign(1, BigInt(1));
  p.den_ = 1;
  return p;
}

IntPMF IntPMF::from_exact(Height base, int step, std::vector<Rational> weights) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  BigInt scale = 1;
  for (const auto& w : weights) {
    if (w < 0) throw Error(ErrorCode::invalid_argument, "negative PMF weight");
    if (denominator(w) != 1) scale = lcm(scale, BigInt(denominator(w)));
  }
  std::vector<BigInt> ints;
  ints.reserve(weights.size());
  for (const auto& w : weights) ints.push_back(BigInt(numerator(w)) * (scale / BigInt(denominator(w))));
  return from_integers(base, step, std::move(ints));
}

IntPMF IntPMF::from_integers(Height base, int step, std::vector<BigInt> weights) {
  if (step != 1 && step != 2) throw Error(ErrorCode::invalid_argument, "lattice step must be 1 or 2");
  std::size_t first = 0;
  while (first < weights.size() && weights[first] == 0) ++first;
  std::size_t end = weights.size();
  while (end > first && weights[end - 1] == 0) --end;
  if (first == end) throw Error(ErrorCode::invalid_argument, "PMF has no mass");
  IntPMF p;
  p.mode_ = PmfMode::exact;
  p.base_ = base + step * static_cast<Height>(first);
  p.size_ = end - first;
  p.step_ = p.size_ == 1 ? 1 : step;
  p.den_ = 0;
  p.num_.reserve(p.size_);
  for (std::size_t i = first; i < end; ++i) {
    if (weights[i] < 0) throw Error(ErrorCode::invalid_argument, "negative PMF weight");
    if (weights[i] == 0) throw Error(ErrorCode::invalid_argument, "PMF support is not contiguous");
    p.den_ += weights[i];
    p.num_.push_back(std::move(weights[i]));
  }
  return p;
}

IntPMF IntPMF::from_log(Height base, int step, std::vector<double> log_weights) {
  if (step != 1 && step != 2) throw Error(ErrorCode::invalid_argument, "lattice step must be 1 or 2");
  std::size_t first = 0;
  while (first < log_weights.size() && log_weights[first] == kNegInf) ++first;
  std::size_t end = log_weights.size();
  while (end > first && log_weights[end - 1] == kNegInf) --end;
  if (first == end) throw Error(ErrorCode::invalid_argument, "PMF has no mass");
  double log_total = kNegInf;
  for (std::size_t i = first; i < end; ++i) {
    if (std::isnan(log_weights[i]) || log_weights[i] == std::numeric_limits<double>::infinity()) {
      throw Error(ErrorCode::invalid_argument, "log weight is not finite");
    }
    if (log_weights[i] == kNegInf) throw Error(ErrorCode::invalid_argument, "PMF support is not contiguous");
    log_total = log_add(log_total, log_weights[i]);
  }
  IntPMF p;
  p.mode_ = PmfMode::logfloat;
  p.base_ = base + step * static_cast<Height>(first);
  p.size_ = end - first;
  p.step_ = p.size_ == 1 ? 1 : step;
  p.log_.reserve(p.size_);
  for (std::size_t i = first; i < end; ++i) p.log_.push_back(log_weights[i] - log_total);
  return p;
}

IntPMF IntPMF::from_points(const std::vector<std::pair<Height, Rational>>& points) {
  if (points.empty()) throw Error(ErrorCode::invalid_argument, "PMF has no mass");
  auto sorted = points;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  int step = 1;
  if (sorted.size() >= 2) step = static_cast<int>(sorted[1].first - sorted[0].first);
  if (step != 1 && step != 2) throw Error(ErrorCode::invalid_argument, "points are not on a lattice of step 1 or 2");
  std::vector<Rational> weights;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].first != sorted[0].first + step * static_cast<Height>(i)) {
      throw Error(ErrorCode::invalid_argument, "points are not contiguous on their lattice");
    }
    weights.push_back(sorted[i].second);
  }
  return from_exact(sorted[0].first, step, std::move(weights));
}

bool IntPMF::contains(Height k) const noexcept {
  return k >= base_ && k <= last() && (k - base_) % step_ == 0;
}

Rational IntPMF::exact(Height k) const {
  if (!is_exact()) throw Error(ErrorCode::invalid_argument, "exact weight requested from a log-float PMF");
  if (!contains(k)) return Rational(0);
  return exact_weights()[static_cast<std::size_t>((k - base_) / step_)];
}

double IntPMF::prob(Height k) const {
  if (!contains(k)) return 0.0;
  const auto i = static_cast<std::size_t>((k - base_) / step_);
  return is_exact() ? to_double(exact_weights()[i]) : std::exp(log_[i]);
}

double IntPMF::log_prob(Height k) const {
  if (!contains(k)) return kNegInf;
  const auto i = static_cast<std::size_t>((k - base_) / step_);
  return is_exact() ? std::log(to_double(exact_weights()[i])) : log_[i];
}

const std::vector<Rational>& IntPMF::exact_weights() const {
  if (!is_exact()) throw Error(ErrorCode::invalid_argument, "exact weights requested from a log-float PMF");
  if (exact_.size() != size_) {
    exact_.clear();
    exact_.reserve(size_);
    for (const auto& a : num_) exact_.emplace_back(a, den_);
  }
  return exact_;
}

const std::vector<BigInt>& IntPMF::numerators() const {
  if (!is_exact()) throw Error(ErrorCode::invalid_argument, "exact weights requested from a log-float PMF");
  return num_;
}

const BigInt& IntPMF::denominator() const {
  if (!is_exact()) throw Error(ErrorCode::invalid_argument, "exact weights requested from a log-float PMF");
  return den_;
}

const std::vector<double>& IntPMF::log_weights() const {
  if (is_exact()) throw Error(ErrorCode::invalid_argument, "log weights requested from an exact PMF");
  return log_;
}

IntPMF IntPMF::to_logfloat() const {
  if (!is_exact()) return *this;
  std::vector<double> logs;
  logs.reserve(size_);
  // Ratios to the largest weight keep tiny probabilities representable.
  const BigInt& peak = *std::max_element(num_.begin(), num_.end());
  for (const auto& a : num_) logs.push_back(std::log(to_double(Rational(a, peak))));
  return from_log(base_, step_, std::move(logs));
}

std::string IntPMF::to_string() const {
  std::ostringstream out;
  out << '{';
  for (std::size_t i = 0; i < size_; ++i) {
    if (i) out << ", ";
    out << at_index(i) << ':';
    out << (is_exact() ? htree::to_string(exact_weights()[i]) : format_double(std::exp(log_[i])));
  }
  out << '}';
  return out.str();
}

bool operator==(const IntPMF& a, const IntPMF& b) {
  if (a.mode_ != b.mode_ || a.base_ != b.base_ || a.size_ != b.size_ || (a.size_ != 1 && a.step_ != b.step_)) {
    return false;
  }
  if (!a.is_exact()) return a.log_ == b.log_;
  for (std::size_t i = 0; i < a.size_; ++i) {
    if (a.num_[i] * b.den_ != b.num_[i] * a.den_) return false;
  }
  return true;
}

IntPMF convolve_step(const IntPMF& p) {
  const std::size_t n = p.size();
  const bool parity_lattice = p.step() == 2 || n == 1;
  // Parity lattice: q at base-1+2i mixes p_{i-1}, p_i. Step 1: q at base-1+j mixes p_{j-2}, p_j.
  const std::size_t out_size = parity_lattice ? n + 1 : n + 2;
  const std::size_t lag = parity_lattice ? 1 : 2;
  const int out_step = parity_lattice ? 2 : 1;
  if (p.is_exact()) {
    const auto& w = p.numerators();
    std::vector<BigInt> q(out_size);
    for (std::size_t j = 0; j < out_size; ++j) {
      if (j >= lag && j - lag < n) q[j] += w[j - lag];
      if (j < n) q[j] += w[j];
    }
    return IntPMF::from_integers(p.base() - 1, out_step, std::move(q));
  }
  const auto& w = p.log_weights();
  std::vector<double> q(out_size, kNegInf);
  for (std::size_t j = 0; j < out_size; ++j) {
    double acc = kNegInf;
    if (j >= lag && j - lag < n) acc = log_add(acc, w[j - lag]);
    if (j < n) acc = log_add(acc, w[j]);
    q[j] = acc - std::log(2.0);
  }
  return IntPMF::from_log(p.base() - 1, out_step, std::move(q));
}

IntPMF product_normalize(std::span<const IntPMF> ps) {
  if (ps.empty()) throw Error(ErrorCode::invalid_argument, "product of an empty PMF list");
  int step = 1;
  bool all_exact = true;
  for (const auto& p : ps) {
    if (p.size() > 1) {
      if (step != 1 && p.step() != step) throw Error(ErrorCode::disjoint_support, "PMFs live on different lattices");
      step = p.step();
    }
    all_exact = all_exact && p.is_exact();
  }
  Height lo = ps[0].base();
  Height hi = ps[0].last();
  for (const auto& p : ps) {
    lo = std::max(lo, p.base());
    hi = std::min(hi, p.last());
  }
  if (lo > hi) throw Error(ErrorCode::disjoint_support, "PMF supports are disjoint");
  for (const auto& p : ps) {
    if (!on_lattice(lo, p.base(), p.size() > 1 ? p.step() : step)) {
      throw Error(ErrorCode::disjoint_support, "PMF supports lie on different parity classes");
    }
  }
  const auto count = static_cast<std::size_t>(floor_div(hi - lo, step) + 1);
  if (all_exact) {
    std::vector<BigInt> w(count, BigInt(1));
    for (const auto& p : ps) {
      const auto& num = p.numerators();
      for (std::size_t i = 0; i < count; ++i) {
        w[i] *= num[static_cast<std::size_t>((lo + step * static_cast<Height>(i) - p.base()) / p.step())];
      }
    }
    return IntPMF::from_integers(lo, step, std::move(w));
  }
  std::vector<double> w(count, 0.0);
  for (const auto& p : ps) {
    for (std::size_t i = 0; i < count; ++i) w[i] += p.log_prob(lo + step * static_cast<Height>(i));
  }
  return IntPMF::from_log(lo, step, std::move(w));
}

bool SlcCoefficient::at_least(const Rational& alpha) const {
  if (infinite) return true;
  if (exact) return value >= alpha;
  return approx >= to_double(alpha);
}

std::string SlcCoefficient::to_string() const {
  if (infinite) return "inf";
  if (exact) return htree::to_string(value);
  return format_double(approx);
}

SlcCoefficient log_concavity_coefficient(const IntPMF& p) {
  SlcCoefficient c;
  c.exact = p.is_exact();
  if (p.size() <= 2) return c;
  c.infinite = false;
  if (p.is_exact()) {
    // the common denominator cancels; compare a/b < c/d as a*d < c*b
    const auto& w = p.numerators();
    BigInt best_num, best_den;
    for (std::size_t i = 1; i + 1 < w.size(); ++i) {
      BigInt num = w[i] * w[i];
      BigInt den = w[i - 1] * w[i + 1];
      if (i == 1 || num * best_den < best_num * den) {
        best_num = std::move(num);
        best_den = std::move(den);
      }
    }
    c.value = Rational(best_num, best_den);
    c.approx = to_double(c.value);
    return c;
  }
  const auto& w = p.log_weights();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < w.size(); ++i) best = std::min(best, 2 * w[i] - w[i - 1] - w[i + 1]);
  c.approx = std::exp(best);
  return c;
}

std::int64_t geometric_truncation_point(double alpha, double eps) {
  if (!(alpha > 0)) throw Error(ErrorCode::non_positive_rate, "geometric rate must be positive");
  if (!(eps > 0 && eps < 1)) throw Error(ErrorCode::invalid_argument, "tail tolerance must lie in (0,1)");
  if (std::isinf(alpha)) return 0;
  const double target = -std::log(eps) / alpha;
  if (target > 1e7) throw Error(ErrorCode::size_cap_exceeded, "geometric truncation point exceeds 1e7");
  auto k = static_cast<std::int64_t>(std::max(0.0, std::ceil(target) - 1));
  // Correct for rounding in the closed form.
  while (k > 0 && -static_cast<double>(k) * alpha <= std::log(eps)) --k;
  while (-static_cast<double>(k + 1) * alpha > std::log(eps)) ++k;
  return k;
}

IntPMF geometric_pmf(double alpha, double eps) {
  const std::int64_t k_max = geometric_truncation_point(alpha, eps);
  if (std::isinf(alpha)) return IntPMF::dirac(0);
  std::vector<double> logs(static_cast<std::size_t>(k_max + 1));
  for (std::int64_t k = 0; k <= k_max; ++k) logs[static_cast<std::size_t>(k)] = -static_cast<double>(k) * alpha;
  return IntPMF::from_log(0, 1, std::move(logs));
}

IntPMF geometric_pmf_exact(const Rational& ratio, const Rational& eps) {
  if (ratio < 0 || ratio >= 1) throw Error(ErrorCode::non_positive_rate, "geometric ratio must lie in [0,1)");
  if (eps <= 0 || eps >= 1) throw Error(ErrorCode::invalid_argument, "tail tolerance must lie in (0,1)");
  if (ratio == 0) return IntPMF::dirac(0);
  std::vector<Rational> w{Rational(1)};
  Rational tail = ratio;
  while (tail > eps) {
    w.push_back(tail);
    tail *= ratio;
    if (w.size() > 100000) throw Error(ErrorCode::size_cap_exceeded, "exact geometric support exceeds 1e5 points");
  }
  return IntPMF::from_exact(0, 1, std::move(w));
}

Moments moments(const IntPMF& p) {
  Moments m;
  for (std::size_t i = 0; i < p.size(); ++i) m.mean += static_cast<double>(p.at_index(i)) * p.prob(p.at_index(i));
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(p.at_index(i)) - m.mean;
    m.variance += d * d * p.prob(p.at_index(i));
  }
  return m;
}

ExactMoments exact_moments(const IntPMF& p) {
  const auto& w = p.exact_weights();
  ExactMoments m;
  for (std::size_t i = 0; i < w.size(); ++i) m.mean += Rational(p.at_index(i)) * w[i];
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Rational d = Rational(p.at_index(i)) - m.mean;
    m.variance += d * d * w[i];
  }
  return m;
}

double variance_bound_constant(double alpha, int step) {
  if (!(alpha > 1)) throw Error(ErrorCode::alpha_not_above_one, "variance bound needs alpha > 1");
  if (step != 1 && step != 2) throw Error(ErrorCode::invalid_argument, "lattice step must be 1 or 2");
  const double beta = 0.5 * std::log(alpha);
  // l = +-1 carries exponent zero even when beta is infinite.
  double sum = 2.0;
  for (std::int64_t l = 2; l < 100000000; ++l) {
    const double ld = static_cast<double>(l);
    const double term = 2.0 * ld * ld * std::exp(-beta * ld * (ld - 1));
    sum += term;
    if (term < 1e-18 * sum && beta * (ld - 1) > 2.0) break;
  }
  return static_cast<double>(step * step) * sum;
}

Rational lambda_polynomial(const Rational& x) { return x * x * x - 3 * x * x - x - 1; }

LambdaConstant lambda_root(double tol) {
  if (!(tol > 0)) throw Error(ErrorCode::invalid_argument, "tolerance must be positive");
  const Rational tol_exact = rational_from_double(tol);
  Rational lo = 3;
  Rational hi = 4;
  LambdaConstant out;
  out.tolerance = tol;
  for (int iter = 0; iter < 2000; ++iter) {
    const Rational mid = (lo + hi) / 2;
    const Rational residual = abs(lambda_polynomial(mid));
    if (hi - lo <= tol_exact && residual <= tol_exact) {
      out.value = to_double(mid);
      out.residual = to_double(abs(lambda_polynomial(rational_from_double(out.value))));
      if (out.residual <= tol) break;
    }
    const Rational f_mid = lambda_polynomial(mid);
    if (f_mid == 0) {
      lo = hi = mid;
    } else if (f_mid < 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.lower = lo;
  out.upper = hi;
  return out;
}

double total_variation(const IntPMF& p, const IntPMF& q) {
  const Height lo = std::min(p.base(), q.base());
  const Height hi = std::max(p.last(), q.last());
  double sum = 0.0;
  for (Height k = lo; k <= hi; ++k) sum += std::abs(p.prob(k) - q.prob(k));
  return 0.5 * sum;
}

Rational total_variation_exact(const IntPMF& p, const IntPMF& q) {
  const Height lo = std::min(p.base(), q.base());
  const Height hi = std::max(p.last(), q.last());
  Rational sum = 0;
  for (Height k = lo; k <= hi; ++k) sum += abs(p.exact(k) - q.exact(k));
  return sum / 2;
}

}  // namespace htree
