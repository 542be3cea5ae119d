#include "ncs/resource_manager.hpp"

#include "ncs/errors.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <string>

namespace ncs {

std::string to_string(AllocationRegime r) {
  switch (r) {
    case AllocationRegime::AwareImpassive: return "AwareImpassive";
    case AllocationRegime::AwareReactive: return "AwareReactive";
    case AllocationRegime::AgnosticImpassive: return "AgnosticImpassive";
    case AllocationRegime::AgnosticReactive: return "AgnosticReactive";
    case AllocationRegime::DelayInsensitive: return "DelayInsensitive";
  }
  return "?";
}

AllocationRegime parse_regime(const std::string& s) {
  for (auto r : {AllocationRegime::AwareImpassive, AllocationRegime::AwareReactive,
                 AllocationRegime::AgnosticImpassive, AllocationRegime::AgnosticReactive,
                 AllocationRegime::DelayInsensitive}) {
    if (s == to_string(r)) return r;
  }
  throw ConfigError("unknown regime '" + s + "'");
}

bool is_reactive(AllocationRegime r) {
  return r == AllocationRegime::AwareReactive || r == AllocationRegime::AgnosticReactive;
}

bool is_model_aware(AllocationRegime r) {
  return r == AllocationRegime::AwareImpassive || r == AllocationRegime::AwareReactive ||
         r == AllocationRegime::DelayInsensitive;
}

bool respects_tolerance(AllocationRegime r) { return r != AllocationRegime::DelayInsensitive; }

std::vector<int> Allocation::links() const {
  std::vector<int> out;
  out.reserve(perSub.size());
  for (const auto& s : perSub) out.push_back(s.delay());
  return out;
}

std::pair<int, int> tolerance_window(int requested, Tolerance tol, int D) {
  return {std::max(0, requested - tol.alpha), std::min(requested + tol.beta, D)};
}

Allocation AllocationResult::at(int t, int k, int D) const {
  Allocation a;
  for (const auto& row : links) a.perSub.push_back(LinkSelection::link(row[t - k], D));
  return a;
}

namespace {

void checkSpec(const AllocationProgramSpec& spec) {
  const int N = spec.numLoops();
  if (N < 1) throw ConfigError("allocation: no loops");
  if (spec.k < 0 || spec.k >= spec.T) throw ConfigError("allocation: need 0 <= k < T");
  if (static_cast<int>(spec.tables.size()) != N || static_cast<int>(spec.history.size()) != N) {
    throw ConfigError("allocation: per-loop inputs disagree in size");
  }
  if (spec.toleranceWindows) {
    if (static_cast<int>(spec.requests.size()) != N || static_cast<int>(spec.tolerances.size()) != N) {
      throw ConfigError("allocation: requests and tolerances needed for every loop");
    }
    for (const auto& r : spec.requests) {
      if (static_cast<int>(r.size()) < spec.T - spec.k) throw ConfigError("allocation: requests too short");
      for (int d : r) {
        if (d < 0 || d > spec.net.D) throw ConfigError("allocation: request out of range");
      }
    }
  }
  for (const auto& h : spec.history) {
    if (static_cast<int>(h.size()) < spec.k) throw ConfigError("allocation: history shorter than k");
  }
  for (double w : spec.weights) {
    if (!(w > 0.0)) throw ConfigError("allocation: weights must be positive");
  }
}

std::pair<int, int> windowOf(const AllocationProgramSpec& spec, int i, int t) {
  if (!spec.toleranceWindows) return {0, spec.net.D};
  return tolerance_window(spec.requests[i][t - spec.k], spec.tolerances[i], spec.net.D);
}

std::vector<std::vector<int>> readLinks(const AllocationProgram& prog, const MilpSolution& s) {
  std::vector<std::vector<int>> links;
  for (const auto& loop : prog.vars) {
    std::vector<int> row;
    for (const auto& step : loop) {
      int chosen = -1;
      for (std::size_t d = 0; d < step.size(); ++d) {
        if (step[d] >= 0 && s.assignment[step[d]]) chosen = static_cast<int>(d);
      }
      if (chosen < 0) throw InternalError("allocation: solution leaves a loop without a link");
      row.push_back(chosen);
    }
    links.push_back(std::move(row));
  }
  return links;
}

// One step at a time, each step solved exactly with the earlier steps fixed.
std::vector<std::vector<int>> greedyAllocation(const AllocationProgramSpec& spec,
                                               const SolverOptions& solver) {
  const int N = spec.numLoops();
  std::vector<std::vector<int>> links(static_cast<std::size_t>(N));
  AllocationProgramSpec step = spec;
  for (int t = spec.k; t < spec.T; ++t) {
    step.k = t;
    step.T = t + 1;
    for (int i = 0; i < N; ++i) {
      step.history[i] = spec.history[i];
      step.history[i].resize(static_cast<std::size_t>(spec.k));
      step.history[i].insert(step.history[i].end(), links[i].begin(), links[i].end());
      if (spec.toleranceWindows) step.requests[i] = {spec.requests[i][t - spec.k]};
    }
    const AllocationResult r = solve_allocation(step, solver, false);
    for (int i = 0; i < N; ++i) links[i].push_back(r.links[i][0]);
  }
  return links;
}

}  // namespace

AllocationProgram build_allocation_program(const AllocationProgramSpec& spec) {
  checkSpec(spec);
  const int N = spec.numLoops();
  const int D = spec.net.D;
  AllocationProgram out;
  MilpProblem& p = out.problem;
  out.vars.resize(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    for (int t = spec.k; t < spec.T; ++t) {
      const auto [lo, hi] = windowOf(spec, i, t);
      std::vector<int> vars(static_cast<std::size_t>(D) + 1, -1);
      Terms oneHot;
      for (int d = lo; d <= hi; ++d) {
        vars[d] = p.addVar(spec.weights[i] * spec.net.prices[d],
                           "v_" + std::to_string(i) + "_" + std::to_string(t) + "_" + std::to_string(d));
        oneHot.emplace_back(vars[d], 1.0);
      }
      p.addEq(std::move(oneHot), 1.0);
      out.vars[i].push_back(std::move(vars));
    }
  }
  for (int t = spec.k; t < spec.T; ++t) {
    for (int d = 0; d <= D; ++d) {
      Terms row;
      for (int i = 0; i < N; ++i) {
        const int v = out.vars[i][t - spec.k][d];
        if (v >= 0) row.emplace_back(v, 1.0);
      }
      if (static_cast<int>(row.size()) > spec.net.capacities[d]) {
        p.addLe(std::move(row), spec.net.capacities[d]);
      }
    }
  }
  for (int i = 0; i < N; ++i) {
    if (!spec.tables[i]) continue;
    std::vector<SampleLink> samples(static_cast<std::size_t>(spec.T));
    for (int s = 0; s < spec.k; ++s) samples[s] = SampleLink::fixed(spec.history[i][s]);
    for (int t = spec.k; t < spec.T; ++t) samples[t].vars = out.vars[i][t - spec.k];
    FreshnessTerms fresh(p, D, spec.encoding, std::move(samples), "l" + std::to_string(i) + "_");
    for (int t = spec.k; t < spec.T; ++t) {
      fresh.addStalenessCost(t, (*spec.tables[i])[t], spec.weights[i]);
    }
  }
  return out;
}

void check_allocation_feasible(const AllocationProgramSpec& spec) {
  checkSpec(spec);
  const int N = spec.numLoops();
  const int D = spec.net.D;
  for (int t = spec.k; t < spec.T; ++t) {
    std::vector<std::pair<int, int>> windows;
    for (int i = 0; i < N; ++i) windows.push_back(windowOf(spec, i, t));
    std::sort(windows.begin(), windows.end());
    // Earliest-deadline-first packing is exact for interval windows.
    std::priority_queue<int, std::vector<int>, std::greater<>> open;
    std::size_t next = 0;
    for (int d = 0; d <= D; ++d) {
      while (next < windows.size() && windows[next].first == d) open.push(windows[next++].second);
      for (int c = 0; c < spec.net.capacities[d] && !open.empty(); ++c) open.pop();
      if (!open.empty() && open.top() <= d) {
        throw AllocationInfeasible(t, d,
                                   "allocation infeasible at time " + std::to_string(t) +
                                       ": link " + std::to_string(d) +
                                       " and the faster links in its windows are full");
      }
    }
  }
}

double allocation_objective(const AllocationProgramSpec& spec,
                            const std::vector<std::vector<int>>& links) {
  double v = 0.0;
  for (int i = 0; i < spec.numLoops(); ++i) {
    std::vector<int> full(spec.history[i].begin(), spec.history[i].begin() + spec.k);
    full.insert(full.end(), links[i].begin(), links[i].begin() + (spec.T - spec.k));
    if (spec.tables[i]) {
      v += spec.weights[i] * plan_objective(full, spec.k, *spec.tables[i], spec.net);
    } else {
      for (int t = spec.k; t < spec.T; ++t) v += spec.weights[i] * spec.net.prices[full[t]];
    }
  }
  return v;
}

AllocationResult solve_allocation(const AllocationProgramSpec& spec, const SolverOptions& solver,
                                  bool greedyHint) {
  check_allocation_feasible(spec);
  AllocationProgram prog = build_allocation_program(spec);
  SolverOptions opts = solver;
  if (greedyHint && spec.T - spec.k > 1) {
    const auto hint = greedyAllocation(spec, solver);
    MilpProblem pinned = prog.problem;
    for (std::size_t i = 0; i < prog.vars.size(); ++i) {
      for (std::size_t t = 0; t < prog.vars[i].size(); ++t) {
        for (std::size_t d = 0; d < prog.vars[i][t].size(); ++d) {
          const int v = prog.vars[i][t][d];
          if (v >= 0) pinned.addEq({{v, 1.0}}, static_cast<int>(d) == hint[i][t]);
        }
      }
    }
    const MilpSolution completion = solve(pinned);
    if (completion.status == MilpStatus::Optimal) opts.hint = completion.assignment;
  }
  const MilpSolution s = solve(prog.problem, opts);
  if (s.status == MilpStatus::Infeasible) {
    throw InternalError("allocation: program infeasible although every step can be packed");
  }
  AllocationResult r;
  r.links = readLinks(prog, s);
  r.objective = s.objectiveValue;
  r.status = s.status;
  r.gap = s.gap;
  r.nodes = s.nodes;
  return r;
}

namespace {

AllocationProgramSpec baseSpec(int k, int T, const NetworkModel& net, int N) {
  AllocationProgramSpec spec;
  spec.k = k;
  spec.T = T;
  spec.net = net;
  spec.weights.assign(static_cast<std::size_t>(N), 1.0 / N);
  spec.history.assign(static_cast<std::size_t>(N), {});
  spec.tables.assign(static_cast<std::size_t>(N), nullptr);
  return spec;
}

void attachTables(AllocationProgramSpec& spec, const std::vector<StalenessTable>& tables) {
  if (static_cast<int>(tables.size()) != spec.numLoops()) {
    throw ConfigError("allocation: one staleness table per loop required");
  }
  for (std::size_t i = 0; i < tables.size(); ++i) spec.tables[i] = &tables[i];
}

std::vector<Allocation> allSteps(const AllocationResult& r, int k, int T, int D) {
  std::vector<Allocation> out;
  for (int t = k; t < T; ++t) out.push_back(r.at(t, k, D));
  return out;
}

}  // namespace

std::vector<Allocation> allocate_aware_impassive(const std::vector<std::vector<int>>& requests,
                                                 const std::vector<Tolerance>& tolerances,
                                                 const std::vector<StalenessTable>& tables,
                                                 const NetworkModel& net,
                                                 const AllocatorOptions& opts,
                                                 AllocationResult* details) {
  if (requests.empty()) throw ConfigError("allocation: no loops");
  const int N = static_cast<int>(requests.size());
  const int T = static_cast<int>(requests.front().size());
  AllocationProgramSpec spec = baseSpec(0, T, net, N);
  spec.requests = requests;
  spec.tolerances = tolerances;
  spec.encoding = opts.encoding;
  attachTables(spec, tables);
  const AllocationResult r = solve_allocation(spec, opts.solver, opts.greedyHint);
  if (details) *details = r;
  return allSteps(r, 0, T, net.D);
}

Allocation allocate_aware_reactive(int k, const std::vector<std::vector<int>>& requests,
                                   const std::vector<std::vector<int>>& history,
                                   const std::vector<Tolerance>& tolerances,
                                   const std::vector<StalenessTable>& tables,
                                   const NetworkModel& net, int T, const AllocatorOptions& opts,
                                   AllocationResult* details) {
  const int N = static_cast<int>(requests.size());
  AllocationProgramSpec spec = baseSpec(k, T, net, N);
  spec.requests = requests;
  spec.history = history;
  spec.tolerances = tolerances;
  spec.encoding = opts.encoding;
  attachTables(spec, tables);
  const AllocationResult r = solve_allocation(spec, opts.solver, opts.greedyHint);
  if (details) *details = r;
  return r.at(k, k, net.D);
}

std::vector<Allocation> allocate_agnostic(PlanMode mode, int k,
                                          const std::vector<std::vector<int>>& requests,
                                          const std::vector<std::vector<int>>& history,
                                          const NetworkModel& net,
                                          const std::vector<Tolerance>& tolerances, int T,
                                          const AllocatorOptions& opts,
                                          AllocationResult* details) {
  const int N = static_cast<int>(requests.size());
  const int start = mode == PlanMode::Impassive ? 0 : k;
  AllocationProgramSpec spec = baseSpec(start, T, net, N);
  spec.requests = requests;
  if (mode == PlanMode::Reactive) spec.history = history;
  spec.tolerances = tolerances;
  spec.encoding = opts.encoding;
  // Prices separate by time step, so there is nothing for the hint to gain.
  const AllocationResult r = solve_allocation(spec, opts.solver, false);
  if (details) *details = r;
  if (mode == PlanMode::Reactive) return {r.at(k, k, net.D)};
  return allSteps(r, 0, T, net.D);
}

std::vector<Allocation> allocate_delay_insensitive(const std::vector<double>& weights,
                                                   const std::vector<StalenessTable>& tables,
                                                   const NetworkModel& net, int T,
                                                   const AllocatorOptions& opts,
                                                   AllocationResult* details) {
  const int N = static_cast<int>(weights.size());
  AllocationProgramSpec spec = baseSpec(0, T, net, N);
  spec.weights = weights;
  spec.toleranceWindows = false;
  spec.encoding = opts.encoding;
  attachTables(spec, tables);
  // Without windows each loop alone could take its unconstrained optimum, so
  // the sum of those bounds the shared program from below.
  SolverOptions solver = opts.solver;
  if (net.D <= 6) {
    double bound = 0.0;
    for (int i = 0; i < N; ++i) {
      bound += weights[i] * plan_by_dynamic_programming(0, {}, tables[i], net, T).second;
    }
    solver.lowerBound = bound;
  }
  const AllocationResult r = solve_allocation(spec, solver, opts.greedyHint);
  if (details) *details = r;
  return allSteps(r, 0, T, net.D);
}

int feasibility_bound(int d, const std::vector<Tolerance>& tolerances, int N, int D) {
  if (d < 0 || d > D) throw ConfigError("feasibility_bound: link out of range");
  if (N < 1) throw ConfigError("feasibility_bound: need at least one loop");
  long n1 = 0, n2 = 0, n3 = 0;
  for (const auto& tol : tolerances) {
    if (tol.alpha != 0 && tol.beta == 0) ++n1;
    if (tol.alpha == 0 && tol.beta != 0) ++n2;
    if (tol.alpha != 0 && tol.beta != 0) ++n3;
  }
  const long below = d > 0 ? 1 : 0;
  const long above = d < D ? 1 : 0;
  const long h = n1 * below + n2 * above + n3 * (below + above);
  const long n = N;
  return static_cast<int>((n * n) / (n + h));
}

}  // namespace ncs
