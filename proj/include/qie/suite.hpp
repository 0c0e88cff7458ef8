#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace qie {

// The acceptance suite: every release gate in one run.  Each criterion is
// self-contained, timed, and reports a one-line verdict; thresholds live in
// src/suite.cpp as named constants and are part of the build contract.

struct CriterionResult {
  int index = 0;
  std::string title;
  bool passed = false;
  std::string detail;   // compact facts backing the verdict
  double seconds = 0.0;
};

struct AcceptanceReport {
  std::uint64_t seed = 0;
  std::vector<CriterionResult> criteria;
  bool all_passed = false;
};

/// Runs all criteria.  The seed feeds every sampled sub-check through fixed
/// per-criterion offsets, so one seed pins the entire run.
AcceptanceReport run_acceptance(std::uint64_t seed);

/// One line per criterion ("[ 3] PASS  ...") plus a summary line.
std::string acceptance_text(const AcceptanceReport& report);

/// Deterministic report (timings are excluded from the JSON so reruns with
/// the same seed are byte-identical).
nlohmann::ordered_json acceptance_json(const AcceptanceReport& report);

}  // namespace qie
