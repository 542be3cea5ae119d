#include "ncs/delay_policy.hpp"

#include "ncs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ncs {

namespace {

constexpr long kMaxDpStates = 2'000'000;

long dpStateCount(int D) {
  long s = 1;
  for (int i = 0; i < D; ++i) {
    s *= D + 2;
    if (s > kMaxDpStates) return kMaxDpStates + 1;
  }
  return s;
}

void checkInputs(int k, std::span<const int> history, const StalenessTable& table,
                 const NetworkModel& net, int T) {
  if (T < 1 || k < 0 || k >= T) throw ConfigError("plan: need 0 <= k < T");
  if (static_cast<int>(table.size()) < T) throw ConfigError("plan: staleness table shorter than T");
  if (static_cast<int>(history.size()) < k) throw ConfigError("plan: history shorter than k");
  for (int s = 0; s < k; ++s) {
    if (history[s] < 0 || history[s] > net.D) throw ConfigError("plan: history link out of range");
  }
}

}  // namespace

std::vector<int> DelayPlan::links() const {
  std::vector<int> out;
  out.reserve(perStep.size());
  for (const auto& s : perStep) out.push_back(s.delay());
  return out;
}

int DelayPlan::linkAt(int t) const {
  if (t < start || t >= horizon()) throw InternalError("DelayPlan: time outside the plan");
  return perStep[static_cast<std::size_t>(t - start)].delay();
}

int freshest_staleness(std::span<const int> links, int t, int D) {
  for (int j = 0; j <= std::min(D, t); ++j) {
    if (links[t - j] <= j) return j;
  }
  return t + 1;
}

double plan_objective(std::span<const int> links, int k, const StalenessTable& table,
                      const NetworkModel& net) {
  double v = 0.0;
  for (int t = k; t < static_cast<int>(links.size()); ++t) {
    v += net.prices[links[t]] + table[t][freshest_staleness(links, t, net.D)];
  }
  return v;
}

PlanProgram build_plan_program(int k, std::span<const int> allocHistory,
                               const StalenessTable& table, const NetworkModel& net, int T,
                               FreshnessEncoding encoding) {
  checkInputs(k, allocHistory, table, net, T);
  const int D = net.D;
  PlanProgram out;
  MilpProblem& p = out.problem;
  std::vector<SampleLink> samples(static_cast<std::size_t>(T));
  for (int s = 0; s < k; ++s) samples[s] = SampleLink::fixed(allocHistory[s]);
  for (int t = k; t < T; ++t) {
    std::vector<int> vars;
    Terms oneHot;
    for (int d = 0; d <= D; ++d) {
      vars.push_back(p.addVar(net.prices[d], "th_" + std::to_string(t) + "_" + std::to_string(d)));
      oneHot.emplace_back(vars.back(), 1.0);
    }
    p.addEq(std::move(oneHot), 1.0);
    samples[t].vars = vars;
    out.selection.push_back(std::move(vars));
  }
  FreshnessTerms fresh(p, D, encoding, std::move(samples));
  for (int t = k; t < T; ++t) fresh.addStalenessCost(t, table[t], 1.0);
  return out;
}

std::pair<std::vector<int>, double> plan_by_dynamic_programming(
    int k, std::span<const int> allocHistory, const StalenessTable& table,
    const NetworkModel& net, int T) {
  checkInputs(k, allocHistory, table, net, T);
  const int D = net.D;
  const long numStates = dpStateCount(D);
  if (numStates > kMaxDpStates) throw ConfigError("plan_by_dynamic_programming: D too large");
  const int base = D + 2;
  const int none = D + 1;
  // State: links of samples t-D..t-1, oldest in the most significant digit.
  auto decode = [&](long state, std::vector<int>& window) {
    for (int i = D - 1; i >= 0; --i) {
      window[i] = static_cast<int>(state % base);
      state /= base;
    }
  };
  long initial = 0;
  for (int s = k - D; s < k; ++s) initial = initial * base + (s < 0 ? none : allocHistory[s]);

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> value(static_cast<std::size_t>(numStates), inf);
  value[initial] = 0.0;
  std::vector<std::vector<long>> parent(static_cast<std::size_t>(T - k),
                                        std::vector<long>(static_cast<std::size_t>(numStates), -1));
  std::vector<int> window(static_cast<std::size_t>(D) + 1);
  const long top = numStates / base;  // weight of the oldest digit
  for (int t = k; t < T; ++t) {
    std::vector<double> next(static_cast<std::size_t>(numStates), inf);
    auto& par = parent[t - k];
    for (long state = 0; state < numStates; ++state) {
      if (value[state] == inf) continue;
      decode(state, window);
      for (int d = 0; d <= D; ++d) {
        window[D] = d;
        // window[i] is sample t-D+i; "none" never arrives.
        int j = t + 1;
        for (int jj = 0; jj <= std::min(D, t); ++jj) {
          if (window[D - jj] <= jj) {
            j = jj;
            break;
          }
        }
        const double v = value[state] + net.prices[d] + table[t][j];
        const long ns = D == 0 ? 0 : (state % top) * base + d;
        if (v < next[ns]) {
          next[ns] = v;
          par[ns] = state * base + d;  // remember predecessor and choice together
        }
      }
    }
    value = std::move(next);
  }
  const long best = std::min_element(value.begin(), value.end()) - value.begin();
  std::vector<int> links(static_cast<std::size_t>(T - k));
  long state = best;
  for (int t = T - 1; t >= k; --t) {
    const long packed = parent[t - k][state];
    links[t - k] = static_cast<int>(packed % base);
    state = packed / base;
  }
  return {links, value[best]};
}

DelayPlan solve_plan(PlanMode mode, int k, std::span<const int> allocHistory,
                     const StalenessTable& table, const NetworkModel& net, int T,
                     const PlannerOptions& opts) {
  if (mode == PlanMode::Impassive) {
    if (k < 0 || k >= T) throw ConfigError("plan: need 0 <= k < T");
    DelayPlan full = solve_plan(PlanMode::Reactive, 0, {}, table, net, T, opts);
    full.mode = PlanMode::Impassive;
    if (k > 0) {
      full.predictedObjective = plan_objective(full.links(), k, table, net);
      full.perStep.erase(full.perStep.begin(), full.perStep.begin() + k);
      full.start = k;
    }
    return full;
  }
  const FreshnessEncoding encoding = k == 0 ? opts.impassiveEncoding : opts.reactiveEncoding;
  PlanProgram prog = build_plan_program(k, allocHistory, table, net, T, encoding);
  SolverOptions solverOpts = opts.solver;
  if (opts.dpHint && dpStateCount(net.D) <= kMaxDpStates) {
    const auto [links, value] = plan_by_dynamic_programming(k, allocHistory, table, net, T);
    (void)value;
    // Only the selection part is known; complete it with the auxiliaries by
    // searching the rest of the program with the selection pinned.
    MilpProblem pinned = prog.problem;
    for (int t = k; t < T; ++t) {
      for (int d = 0; d <= net.D; ++d) pinned.addEq({{prog.selection[t - k][d], 1.0}}, d == links[t - k]);
    }
    const MilpSolution completion = solve(pinned);
    if (completion.status == MilpStatus::Optimal) solverOpts.hint = completion.assignment;
  }
  const MilpSolution s = solve(prog.problem, solverOpts);
  if (s.status == MilpStatus::Infeasible) throw InternalError("plan: delay program infeasible");
  DelayPlan plan;
  plan.start = k;
  plan.mode = PlanMode::Reactive;
  plan.status = s.status;
  plan.gap = s.gap;
  plan.predictedObjective = s.objectiveValue;
  for (int t = k; t < T; ++t) {
    int chosen = -1;
    for (int d = 0; d <= net.D; ++d) {
      if (s.assignment[prog.selection[t - k][d]]) chosen = d;
    }
    plan.perStep.push_back(LinkSelection::link(chosen, net.D));
  }
  return plan;
}

DelayPlan impassive_plan(const PlantModel& model, const NetworkModel& net,
                         const RiccatiSolution& sol, int T, const PlannerOptions& opts) {
  const auto table = staleness_cost_table(model, sol, net.D);
  return solve_plan(PlanMode::Impassive, 0, {}, table, net, T, opts);
}

DelayPlan reactive_plan(int k, std::span<const int> allocHistory, const PlantModel& model,
                        const NetworkModel& net, const RiccatiSolution& sol, int T,
                        const PlannerOptions& opts) {
  const auto table = staleness_cost_table(model, sol, net.D);
  return solve_plan(PlanMode::Reactive, k, allocHistory, table, net, T, opts);
}

}  // namespace ncs
