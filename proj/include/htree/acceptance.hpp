#pragma once

// The one-shot acceptance suite: ten criteria, each a deterministic function
// of the master seed and the shipped fixtures.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace htree {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;  // wall-clock; never part of the rendered table
};

struct AcceptanceOptions {
  std::uint64_t seed = 20240601;
  std::string fixture_dir;
  /// Nonzero: run only this criterion (1-9), skipping the determinism rerun.
  int only = 0;
  /// Called as each criterion finishes (progress reporting).
  std::function<void(const CriterionResult&)> progress;
};

struct AcceptanceReport {
  std::vector<CriterionResult> criteria;

  bool pass() const;
  /// One "PASS|FAIL  <id>  <name>  <detail>" line per criterion.
  std::string table() const;
};

/// Runs criteria 1-9, then reruns them and compares the rendered tables
/// byte for byte (criterion 10).
AcceptanceReport run_acceptance(const AcceptanceOptions& options);

/// Criteria 1-9 once.
AcceptanceReport run_acceptance_once(const AcceptanceOptions& options);

/// Fixture directory baked in at build time.
std::string default_fixture_dir();

}  // namespace htree
