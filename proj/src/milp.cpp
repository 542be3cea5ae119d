#include "ncs/milp.hpp"

#include "ncs/errors.hpp"
#include "ncs/lp_relaxation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

namespace ncs {

namespace {

constexpr double kIntTol = 1e-6;

double tieTol(double v) { return 1e-9 * std::max(1.0, std::abs(v)); }

struct Incumbent {
  bool has = false;
  double value = 0.0;
  std::vector<std::uint8_t> x;

  bool improvedBy(double v, const std::vector<std::uint8_t>& cand) const {
    if (!has) return true;
    const double tol = tieTol(value);
    if (v < value - tol) return true;
    return std::abs(v - value) <= tol && lexPreferred(cand, x);
  }
};

bool anyOneAfter(const std::vector<std::uint8_t>& x, std::size_t i) {
  return std::find(x.begin() + static_cast<std::ptrdiff_t>(i) + 1, x.end(), 1) != x.end();
}

// True when no point of the region defined by `fix` (-1 = free) can win the
// tie order against `inc`. Constraints are ignored, so this only over-approximates.
bool noPreferredPoint(const std::vector<std::int8_t>& fix, const std::vector<std::uint8_t>& inc) {
  const std::size_t n = fix.size();
  // oneFixedAfter[i]: some variable after i is fixed to 1.
  std::vector<bool> oneFixedAfter(n + 1, false);
  for (std::size_t i = n; i-- > 0;) oneFixedAfter[i] = oneFixedAfter[i + 1] || (i + 1 < n && fix[i + 1] == 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (inc[i] == 1) {
      // Dropping this 1 and everything after it gives a proper prefix.
      if (fix[i] != 1 && !oneFixedAfter[i]) return false;
      if (fix[i] == 0) return true;
    } else {
      if (fix[i] != 0 && anyOneAfter(inc, i)) return false;
      if (fix[i] == 1) return true;
    }
  }
  return true;
}

bool prunable(const Incumbent& inc, double bound, const std::vector<std::int8_t>& fix) {
  if (!inc.has) return false;
  const double tol = tieTol(inc.value);
  if (bound > inc.value + tol) return true;
  return bound >= inc.value - tol && noPreferredPoint(fix, inc.x);
}

std::string varName(const MilpProblem& p, int i) {
  if (i < static_cast<int>(p.varNames.size()) && !p.varNames[i].empty()) {
    std::string s = p.varNames[i];
    for (char& c : s) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) c = '_';
    }
    return s;
  }
  return "x" + std::to_string(i);
}

void writeTerms(std::ostream& os, const MilpProblem& p, const Terms& terms) {
  if (terms.empty()) {
    os << " 0 " << varName(p, 0);
    return;
  }
  for (const auto& [j, a] : terms) {
    os << (a < 0 ? " - " : " + ") << std::abs(a) << ' ' << varName(p, j);
  }
}

}  // namespace

bool lexPreferred(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (a[i] == b[i]) continue;
    return a[i] == 1 ? anyOneAfter(b, i) : !anyOneAfter(a, i);
  }
  return false;
}

int MilpProblem::addVar(double cost, std::string name) {
  objective.push_back(cost);
  varNames.push_back(std::move(name));
  return numVars++;
}

void MilpProblem::addEq(Terms terms, double rhs) {
  eqConstraints.push_back({std::move(terms), rhs});
}

void MilpProblem::addLe(Terms terms, double rhs) {
  leConstraints.push_back({std::move(terms), rhs});
}

void MilpProblem::validate() const {
  if (numVars < 0 || static_cast<int>(objective.size()) != numVars) {
    throw ConfigError("milp: objective size does not match numVars");
  }
  if (!varNames.empty() && static_cast<int>(varNames.size()) != numVars) {
    throw ConfigError("milp: varNames size does not match numVars");
  }
  auto check = [&](const std::vector<LinearConstraint>& rows) {
    for (const auto& row : rows) {
      if (!std::isfinite(row.rhs)) throw ConfigError("milp: non-finite right-hand side");
      for (const auto& [j, a] : row.terms) {
        if (j < 0 || j >= numVars || !std::isfinite(a)) {
          throw ConfigError("milp: constraint references an invalid variable or coefficient");
        }
      }
    }
  };
  check(eqConstraints);
  check(leConstraints);
  for (double c : objective) {
    if (!std::isfinite(c)) throw ConfigError("milp: non-finite objective coefficient");
  }
}

double MilpProblem::evaluate(const std::vector<std::uint8_t>& x) const {
  double v = objectiveOffset;
  for (int j = 0; j < numVars; ++j) v += objective[j] * x[j];
  return v;
}

bool MilpProblem::isFeasible(const std::vector<std::uint8_t>& x, double tol) const {
  if (static_cast<int>(x.size()) != numVars) return false;
  auto lhs = [&](const LinearConstraint& row) {
    double s = 0.0;
    for (const auto& [j, a] : row.terms) s += a * x[j];
    return s;
  };
  for (const auto& row : eqConstraints) {
    if (std::abs(lhs(row) - row.rhs) > tol) return false;
  }
  for (const auto& row : leConstraints) {
    if (lhs(row) > row.rhs + tol) return false;
  }
  return true;
}

MilpSolution solve(const MilpProblem& p, const SolverOptions& options) {
  using Clock = std::chrono::steady_clock;
  p.validate();
  const int n = p.numVars;
  const auto start = Clock::now();
  std::optional<double> timeLimit = p.timeLimit;
  if (!timeLimit && n > options.exactThreshold) timeLimit = options.largeInstanceTimeLimit;

  MilpSolution out;
  Incumbent inc;
  if (options.hint && p.isFeasible(*options.hint, 1e-9)) {
    inc = {true, p.evaluate(*options.hint), *options.hint};
  }

  std::vector<lp::Row> rows;
  rows.reserve(p.eqConstraints.size() + p.leConstraints.size());
  for (const auto& c : p.eqConstraints) rows.push_back({c.terms, c.rhs, true});
  for (const auto& c : p.leConstraints) rows.push_back({c.terms, c.rhs, false});
  lp::BoundedSimplex relax(n, std::move(rows), p.objective);
  if (timeLimit) {
    relax.setDeadline(start + std::chrono::duration_cast<Clock::duration>(
                                  std::chrono::duration<double>(*timeLimit)));
  }

  struct Node {
    std::vector<std::int8_t> fix;
    double bound;
    int parent;
  };
  std::vector<Node> stack;
  stack.push_back({std::vector<std::int8_t>(static_cast<std::size_t>(n), -1),
                   -std::numeric_limits<double>::infinity(), -1});
  std::vector<std::int8_t> current(static_cast<std::size_t>(n), -1);

  bool first = true;
  bool timedOut = false;
  double openBound = std::numeric_limits<double>::infinity();
  int nextId = 0;

  while (!stack.empty()) {
    if (timeLimit &&
        std::chrono::duration<double>(Clock::now() - start).count() > *timeLimit) {
      timedOut = true;
      for (const auto& node : stack) openBound = std::min(openBound, node.bound);
      break;
    }
    Node node = std::move(stack.back());
    stack.pop_back();
    if (prunable(inc, node.bound, node.fix)) continue;

    for (int j = 0; j < n; ++j) {
      if (node.fix[j] == current[j]) continue;
      if (node.fix[j] < 0) {
        relax.setBounds(j, 0.0, 1.0);
      } else {
        relax.setBounds(j, node.fix[j], node.fix[j]);
      }
      current[j] = node.fix[j];
    }
    lp::LpStatus status;
    try {
      status = first ? relax.solve() : relax.reoptimize();
    } catch (const lp::DeadlineReached&) {
      // The interrupted node is still open; its parent bound is the best we know.
      timedOut = true;
      openBound = node.bound;
      for (const auto& open : stack) openBound = std::min(openBound, open.bound);
      break;
    }
    first = false;
    ++out.nodes;
    const int id = nextId++;
    NodeRecord record{id, node.parent, 0.0, status == lp::LpStatus::Infeasible, std::nullopt};
    if (status == lp::LpStatus::Infeasible) {
      if (options.recordNodeLog) out.nodeLog.push_back(record);
      continue;
    }

    const std::vector<double> x = relax.primal();
    const double z = relax.objective() + p.objectiveOffset;
    record.lpBound = z;
    if (prunable(inc, z, node.fix)) {
      if (options.recordNodeLog) out.nodeLog.push_back(record);
      continue;
    }

    int frac = -1;
    for (int j = 0; j < n; ++j) {
      if (std::abs(x[j] - std::round(x[j])) > kIntTol) {
        frac = j;
        break;
      }
    }
    if (frac >= 0) {
      if (options.recordNodeLog) out.nodeLog.push_back(record);
      Node one{node.fix, z, id};
      one.fix[frac] = 1;
      node.fix[frac] = 0;
      stack.push_back(std::move(one));
      stack.push_back({std::move(node.fix), z, id});
      continue;
    }

    std::vector<std::uint8_t> cand(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) cand[j] = x[j] > 0.5 ? 1 : 0;
    if (!p.isFeasible(cand, 1e-6)) {
      throw InternalError("milp: integral relaxation point violates the constraints");
    }
    const double v = p.evaluate(cand);
    record.integerValue = v;
    if (options.recordNodeLog) out.nodeLog.push_back(record);
    if (inc.improvedBy(v, cand)) inc = {true, v, cand};

    // The relaxation optimum is integral, but an equally good point that wins
    // the tie order may still sit in this region. Split those by the first free
    // position where they differ from cand; lowest position first.
    std::vector<Node> children;
    std::vector<std::int8_t> fix = node.fix;
    for (int i = 0; i < n; ++i) {
      if (fix[i] >= 0) continue;
      if (cand[i] == 1) {
        // Only the single point that clears i and every free variable after it.
        std::vector<std::uint8_t> y = cand;
        for (int j = i; j < n; ++j) {
          if (fix[j] < 0 || j == i) y[j] = 0;
        }
        if (p.isFeasible(y, 1e-9)) {
          const double vy = p.evaluate(y);
          if (inc.improvedBy(vy, y)) inc = {true, vy, y};
        }
      } else if (anyOneAfter(cand, static_cast<std::size_t>(i))) {
        double bound = z;
        if (relax.isNonbasic(i)) bound = std::max(z, z + relax.reducedCost(i));
        Node child{fix, bound, id};
        child.fix[i] = 1;
        if (!prunable(inc, bound, child.fix)) children.push_back(std::move(child));
      }
      fix[i] = static_cast<std::int8_t>(cand[i]);
    }
    for (auto it = children.rbegin(); it != children.rend(); ++it) stack.push_back(std::move(*it));
  }

  out.pivots = relax.pivots();
  if (!inc.has) {
    if (timedOut) {
      throw SolverGapExceeded(std::numeric_limits<double>::infinity(),
                              "milp: time limit reached before any feasible point was found");
    }
    out.status = MilpStatus::Infeasible;
    return out;
  }
  out.assignment = inc.x;
  out.objectiveValue = inc.value;
  if (timedOut) {
    out.status = MilpStatus::TimeLimitIncumbent;
    if (options.lowerBound) openBound = std::max(openBound, *options.lowerBound);
    out.gap = std::max(0.0, (inc.value - openBound) / std::max(1.0, std::abs(inc.value)));
  } else {
    out.status = MilpStatus::Optimal;
    out.gap = 0.0;
  }
  return out;
}

MilpSolution solve_by_enumeration(const MilpProblem& p) {
  p.validate();
  const int n = p.numVars;
  if (n > 22) throw ConfigError("solve_by_enumeration: more than 22 variables");
  Incumbent inc;
  std::vector<std::uint8_t> x(static_cast<std::size_t>(n));
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t c = 0; c < total; ++c) {
    for (int i = 0; i < n; ++i) x[i] = static_cast<std::uint8_t>((c >> (n - 1 - i)) & 1U);
    if (!p.isFeasible(x)) continue;
    const double v = p.evaluate(x);
    if (inc.improvedBy(v, x)) inc = {true, v, x};
  }
  MilpSolution out;
  out.nodes = static_cast<long>(total);
  if (!inc.has) {
    out.status = MilpStatus::Infeasible;
    return out;
  }
  out.status = MilpStatus::Optimal;
  out.assignment = inc.x;
  out.objectiveValue = inc.value;
  return out;
}

bool verify_against_enumeration(const MilpProblem& p) {
  const MilpSolution reference = solve_by_enumeration(p);
  const MilpSolution bb = solve(p);
  if (reference.status != bb.status) return false;
  if (reference.status == MilpStatus::Infeasible) return true;
  if (std::abs(reference.objectiveValue - bb.objectiveValue) > tieTol(reference.objectiveValue)) {
    return false;
  }
  return reference.assignment == bb.assignment;
}

std::vector<LinearConstraint> linearize_binary_product(int z,
                                                       const std::vector<ProductFactor>& factors) {
  if (factors.empty()) throw ConfigError("linearize_binary_product: no factors");
  std::vector<LinearConstraint> rows;
  rows.reserve(factors.size() + 1);
  Terms lower{{z, -1.0}};
  double lowerRhs = static_cast<double>(factors.size()) - 1.0;
  for (const auto& f : factors) {
    if (f.complemented) {
      rows.push_back({{{z, 1.0}, {f.var, 1.0}}, 1.0});  // z <= 1 - v
      lower.emplace_back(f.var, -1.0);
      lowerRhs -= 1.0;
    } else {
      rows.push_back({{{z, 1.0}, {f.var, -1.0}}, 0.0});  // z <= v
      lower.emplace_back(f.var, 1.0);
    }
  }
  rows.push_back({std::move(lower), lowerRhs});  // sum f - z <= |f| - 1
  return rows;
}

void write_lp_format(const MilpProblem& p, std::ostream& os) {
  os << "\\ binary program, " << p.numVars << " variables, objective offset "
     << p.objectiveOffset << "\n";
  os << "Minimize\n obj:";
  Terms obj;
  for (int j = 0; j < p.numVars; ++j) {
    if (p.objective[j] != 0.0) obj.emplace_back(j, p.objective[j]);
  }
  writeTerms(os, p, obj);
  os << "\nSubject To\n";
  for (std::size_t i = 0; i < p.eqConstraints.size(); ++i) {
    os << " e" << i << ':';
    writeTerms(os, p, p.eqConstraints[i].terms);
    os << " = " << p.eqConstraints[i].rhs << '\n';
  }
  for (std::size_t i = 0; i < p.leConstraints.size(); ++i) {
    os << " l" << i << ':';
    writeTerms(os, p, p.leConstraints[i].terms);
    os << " <= " << p.leConstraints[i].rhs << '\n';
  }
  os << "Binary\n";
  for (int j = 0; j < p.numVars; ++j) os << ' ' << varName(p, j) << '\n';
  os << "End\n";
}

}  // namespace ncs
