#include "htree/stats.hpp"

#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "htree/error.hpp"

namespace htree {

SampleSummary summarize(std::span<const double> xs) {
  SampleSummary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : xs) {
    const double d = x - s.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const auto n = static_cast<double>(xs.size());
  if (xs.size() > 1) s.variance = m2 / (n - 1);
  s.mean_se = std::sqrt(s.variance / n);
  const double pop_var = m2 / n;
  s.variance_se = std::sqrt(std::max(0.0, m4 / n - pop_var * pop_var) / n);
  return s;
}

IntPMF empirical_pmf(const std::map<Height, std::uint64_t>& counts) {
  std::vector<std::pair<Height, Rational>> points;
  std::uint64_t total = 0;
  for (const auto& [k, c] : counts) total += c;
  if (total == 0) throw Error(ErrorCode::invalid_argument, "no observations");
  for (const auto& [k, c] : counts) {
    if (c > 0) points.emplace_back(k, Rational(BigInt(c), BigInt(total)));
  }
  return IntPMF::from_points(points);
}

double empirical_tv(const std::map<Height, std::uint64_t>& counts, const IntPMF& reference) {
  std::uint64_t total = 0;
  for (const auto& [k, c] : counts) total += c;
  if (total == 0) throw Error(ErrorCode::invalid_argument, "no observations");
  double sum = 0.0;
  double covered = 0.0;
  for (const auto& [k, c] : counts) {
    const double ref = reference.prob(k);
    sum += std::abs(static_cast<double>(c) / static_cast<double>(total) - ref);
    covered += ref;
  }
  // Reference mass on values never observed.
  sum += std::max(0.0, 1.0 - covered);
  return 0.5 * sum;
}

double chi_square_sf(double statistic, double dof) {
  if (dof <= 0) return 1.0;
  if (statistic <= 0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed, std::span<const double> expected_probs) {
  if (observed.size() != expected_probs.size()) {
    throw Error(ErrorCode::invalid_argument, "observed and expected sizes differ");
  }
  std::uint64_t total = 0;
  for (auto c : observed) total += c;
  ChiSquareResult r;
  std::size_t bins = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = expected_probs[i] * static_cast<double>(total);
    if (e <= 0) {
      if (observed[i] > 0) r.statistic = std::numeric_limits<double>::infinity();
      continue;
    }
    const double d = static_cast<double>(observed[i]) - e;
    r.statistic += d * d / e;
    ++bins;
  }
  r.dof = bins > 0 ? static_cast<double>(bins - 1) : 0.0;
  r.p_value = std::isinf(r.statistic) ? 0.0 : chi_square_sf(r.statistic, r.dof);
  return r;
}

ChiSquareResult bowker_symmetry(const std::map<std::pair<Height, Height>, std::uint64_t>& table) {
  ChiSquareResult r;
  std::size_t pairs = 0;
  for (const auto& [key, n_ij] : table) {
    const auto [i, j] = key;
    if (i >= j) continue;
    const auto it = table.find({j, i});
    const std::uint64_t n_ji = it == table.end() ? 0 : it->second;
    if (n_ij + n_ji == 0) continue;
    const double d = static_cast<double>(n_ij) - static_cast<double>(n_ji);
    r.statistic += d * d / static_cast<double>(n_ij + n_ji);
    ++pairs;
  }
  // Cells present only below the diagonal.
  for (const auto& [key, n_ji] : table) {
    const auto [j, i] = key;
    if (j <= i || n_ji == 0) continue;
    if (table.find({i, j}) != table.end()) continue;
    r.statistic += static_cast<double>(n_ji);
    ++pairs;
  }
  r.dof = static_cast<double>(pairs);
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

}  // namespace htree
