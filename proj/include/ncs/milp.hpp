#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ncs {

using Terms = std::vector<std::pair<int, double>>;

struct LinearConstraint {
  Terms terms;  // sparse (variable, coefficient) pairs
  double rhs = 0.0;
};

/// Pure binary linear program: min objective^T x + objectiveOffset subject to
/// equality and <= rows, x in {0,1}^numVars.
struct MilpProblem {
  int numVars = 0;
  std::vector<double> objective;
  double objectiveOffset = 0.0;
  std::vector<LinearConstraint> eqConstraints;
  std::vector<LinearConstraint> leConstraints;
  std::vector<std::string> varNames;
  std::optional<double> timeLimit;  // seconds

  int addVar(double cost, std::string name = {});
  void addEq(Terms terms, double rhs);
  void addLe(Terms terms, double rhs);
  /// Throws ConfigError if sizes or indices are inconsistent.
  void validate() const;
  double evaluate(const std::vector<std::uint8_t>& x) const;
  bool isFeasible(const std::vector<std::uint8_t>& x, double tol = 1e-9) const;
};

enum class MilpStatus { Optimal, Infeasible, TimeLimitIncumbent };

struct NodeRecord {
  int id = 0;
  int parent = -1;
  double lpBound = 0.0;
  bool lpInfeasible = false;
  // Objective of an integer point found at this node, if any.
  std::optional<double> integerValue;
};

struct MilpSolution {
  MilpStatus status = MilpStatus::Infeasible;
  std::vector<std::uint8_t> assignment;
  double objectiveValue = 0.0;
  double gap = 0.0;  // relative, 0 when Optimal
  long nodes = 0;
  long pivots = 0;
  std::vector<NodeRecord> nodeLog;  // filled only when requested
};

struct SolverOptions {
  // Problems with more binaries than this get largeInstanceTimeLimit unless
  // the problem carries its own limit.
  int exactThreshold = 600;
  double largeInstanceTimeLimit = 60.0;
  bool recordNodeLog = false;
  // Feasible point to start from; used as the incumbent if it is feasible.
  std::optional<std::vector<std::uint8_t>> hint;
  // Known lower bound on the optimum, used for the gap if the search stops early.
  std::optional<double> lowerBound;
};

/// Branch-and-bound with LP-relaxation bounds. Branches on the lowest-index
/// fractional variable, 0-branch first. Among optimal points the one that wins
/// lexPreferred is returned; objective ties are judged with a 1e-9 relative
/// tolerance.
MilpSolution solve(const MilpProblem& p, const SolverOptions& options = {});

/// Exhaustive reference solve under the same tie rule. Refuses numVars > 22.
MilpSolution solve_by_enumeration(const MilpProblem& p);

/// True iff solve(p) agrees with enumeration on status, optimal value (1e-9
/// relative) and assignment.
bool verify_against_enumeration(const MilpProblem& p);

/// Factor of a product: variable v, or its complement 1 - v.
struct ProductFactor {
  int var = 0;
  bool complemented = false;
};

/// Rows forcing z = prod(factors) over binaries: z <= f for every factor and
/// z >= sum(f) - (|factors| - 1). Complemented factors contribute 1 - v.
std::vector<LinearConstraint> linearize_binary_product(int z,
                                                       const std::vector<ProductFactor>& factors);

/// CPLEX LP text dump (objective, rows, binaries) for external cross-checks.
void write_lp_format(const MilpProblem& p, std::ostream& os);

/// Tie order: compares the increasing lists of positions set to 1
/// lexicographically, a proper prefix winning. (1,0) beats (0,1) and (0,0)
/// beats (0,1); for one-hot link choices the lowest delay index wins.
bool lexPreferred(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b);

}  // namespace ncs
