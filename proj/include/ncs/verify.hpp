#pragma once

#include "ncs/lti_core.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ncs {

/// Outcome of one self-check suite.
struct SuiteReport {
  std::string name;
  int cases = 0;
  int failures = 0;
  double seconds = 0.0;
  std::vector<std::string> firstFailures;  // at most a handful, for diagnostics

  bool passed() const { return cases > 0 && failures == 0; }
};

/// Random plant with n states and n inputs: entries of A uniform in [-1.2, 1.2],
/// B, weights and covariances diagonally dominant. Alpha and beta are zero.
PlantModel random_plant(Rng& rng, int n);

/// Strictly decreasing random prices for links 0..D, capacities of 1.
NetworkModel random_network(Rng& rng, int D);

// Each suite compares the library against a brute-force reference.

/// Random binary programs (at most maxVars variables) against enumeration.
SuiteReport verify_random_milps(int count, int maxVars, std::uint64_t seed);

/// Every delay-control and allocation program generated from small random
/// instances whose size stays within maxVars, solved and enumerated.
SuiteReport verify_delay_programs(int plantDraws, int maxVars, std::uint64_t seed);

/// impassive_plan against the best of all (D+1)^T request sequences, for
/// T = 1..maxT and D = 1..maxD.
SuiteReport verify_planner(int plantDraws, int maxT, int maxD, std::uint64_t seed);

/// b_coefficients against replayed deliveries for every allocation history of
/// length up to D+2, D = 1..maxD.
SuiteReport verify_freshness_selector(int maxD);

std::vector<SuiteReport> run_all_verifications(std::uint64_t seed = 7);

}  // namespace ncs
