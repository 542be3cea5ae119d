#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ncs::lp {

using SparseTerms = std::vector<std::pair<int, double>>;

struct Row {
  SparseTerms terms;
  double rhs = 0.0;
  bool isEquality = false;
};

enum class LpStatus { Optimal, Infeasible };

/// Thrown from solve()/reoptimize() once the deadline passes. The tableau is
/// left mid-pivot; only a fresh solve() may follow.
struct DeadlineReached : std::runtime_error {
  DeadlineReached() : std::runtime_error("lp: deadline reached") {}
};

/// Dense bounded-variable simplex over  min c^T x  s.t.  rows,  lb <= x <= ub.
///
/// Structural variables start in [0, 1]. The tableau is kept between calls so
/// a branch-and-bound driver can change bounds and call reoptimize(), which
/// runs the dual simplex from the last optimal basis. solve() runs the
/// two-phase primal method from a slack/artificial basis.
class BoundedSimplex {
 public:
  BoundedSimplex(int numStructural, std::vector<Row> rows, std::vector<double> cost);

  void setBounds(int j, double lb, double ub);
  double lower(int j) const { return lb_[j]; }
  double upper(int j) const { return ub_[j]; }

  LpStatus solve();
  LpStatus reoptimize();

  using Clock = std::chrono::steady_clock;
  void setDeadline(std::optional<Clock::time_point> deadline) { deadline_ = deadline; }

  /// Objective c^T x of the current basic solution.
  double objective() const;
  /// Values of the structural variables.
  std::vector<double> primal() const;
  /// Dual bound on the objective if structural j were forced to `value`,
  /// derived from its reduced cost. Valid only when j is nonbasic.
  bool isNonbasic(int j) const { return status_[j] != Status::Basic; }
  double reducedCost(int j) const { return dj_[j]; }

  long pivots() const { return pivots_; }
  /// Largest violation of the original rows by primal(); used to detect drift.
  double residual() const;

 private:
  enum class Status : std::uint8_t { Basic, AtLower, AtUpper };

  double& at(int i, int j) { return tab_[static_cast<std::size_t>(i) * cols_ + j]; }
  double at(int i, int j) const { return tab_[static_cast<std::size_t>(i) * cols_ + j]; }

  void resetTableau();
  void computeReducedCosts(const std::vector<double>& c);
  void recomputeBasicValues();
  void pivot(int r, int j);
  bool primalSimplex(const std::vector<double>& c, long iterationCap);
  // Returns false when the problem is infeasible; throws on iteration cap.
  enum class DualResult { Optimal, Infeasible, Stalled };
  DualResult dualSimplex(long iterationCap);
  double valueOf(int j) const;
  void checkDeadline(long iter) const;

  int nStruct_;
  int m_;
  int cols_;  // structural + one slack per row + one artificial per row
  std::vector<Row> rows_;
  std::vector<double> cost_;  // phase-2 costs over all columns

  std::vector<double> tab_;  // m x cols, row-major: B^{-1} A
  std::vector<double> rhs_;  // B^{-1} b
  std::vector<double> lb_, ub_, x_;
  std::vector<Status> status_;
  std::vector<int> basic_;  // basic variable per row
  std::vector<double> beta_;  // basic values
  std::vector<double> dj_;
  bool haveBasis_ = false;
  long pivots_ = 0;
  std::optional<Clock::time_point> deadline_;
};

}  // namespace ncs::lp
