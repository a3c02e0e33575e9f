#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "htree/pmf.hpp"

namespace htree {

struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;        // unbiased sample variance
  double mean_se = 0.0;         // standard error of the mean
  double variance_se = 0.0;     // standard error of the sample variance, sqrt((m4 - s^4)/n)
};

SampleSummary summarize(std::span<const double> xs);

/// Empirical law of integer observations as an exact PMF (counts / total).
/// The observed values must form a contiguous run on a lattice of step 1 or 2;
/// gaps are rejected by IntPMF, so callers may prefer empirical_tv.
IntPMF empirical_pmf(const std::map<Height, std::uint64_t>& counts);

/// Total variation between observed counts and a reference PMF.
double empirical_tv(const std::map<Height, std::uint64_t>& counts, const IntPMF& reference);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double statistic, double dof);

/// Pearson chi-square goodness of fit; expected probabilities sum to one.
struct ChiSquareResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed, std::span<const double> expected_probs);

/// Bowker's test of symmetry for a square contingency table given as
/// (row, col) -> count.
ChiSquareResult bowker_symmetry(const std::map<std::pair<Height, Height>, std::uint64_t>& table);

}  // namespace htree
