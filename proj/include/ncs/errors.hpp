#pragma once

#include <stdexcept>
#include <string>

namespace ncs {

// Bad dimensions, non-PSD covariances, malformed JSON, and similar user errors.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Broken internal invariant (a bug, not bad input).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The centralized allocation program has no feasible point. Carries the first
// time step and link where the capacity/tolerance constraints cannot be met.
class AllocationInfeasible : public std::runtime_error {
 public:
  AllocationInfeasible(int time, int link, const std::string& what)
      : std::runtime_error(what), time_(time), link_(link) {}

  int time() const { return time_; }
  int link() const { return link_; }

 private:
  int time_;
  int link_;
};

// A solve stopped at its time limit with a relative gap above the accepted threshold.
class SolverGapExceeded : public std::runtime_error {
 public:
  SolverGapExceeded(double gap, const std::string& what)
      : std::runtime_error(what), gap_(gap) {}
  double gap() const { return gap_; }

 private:
  double gap_;
};

}  // namespace ncs
