#pragma once

#include "ncs/estimator.hpp"
#include "ncs/freshness.hpp"
#include "ncs/lqg.hpp"
#include "ncs/milp.hpp"

#include <span>
#include <utility>
#include <vector>

namespace ncs {

/// E[t][j]: expected error cost at t with a j-step-old freshest sample
/// (see staleness_costs).
using StalenessTable = std::vector<std::vector<double>>;

enum class PlanMode { Impassive, Reactive };

/// Link requests of one loop over [start, T-1].
struct DelayPlan {
  int start = 0;
  std::vector<LinkSelection> perStep;
  double predictedObjective = 0.0;
  PlanMode mode = PlanMode::Impassive;
  MilpStatus status = MilpStatus::Optimal;
  double gap = 0.0;

  std::vector<int> links() const;
  /// Requested delay at absolute time t in [start, T).
  int linkAt(int t) const;
  int horizon() const { return start + static_cast<int>(perStep.size()); }
};

struct PlannerOptions {
  SolverOptions solver;
  FreshnessEncoding impassiveEncoding = FreshnessEncoding::Product;
  FreshnessEncoding reactiveEncoding = FreshnessEncoding::Dominance;
  // Seed branch-and-bound with the dynamic-programming optimum.
  bool dpHint = true;
};

/// Offline plan over [0, T-1], independent of noise and of allocations.
DelayPlan impassive_plan(const PlantModel& model, const NetworkModel& net,
                         const RiccatiSolution& sol, int T, const PlannerOptions& opts = {});

/// Plan over [k, T-1] given the links actually granted to samples 0..k-1.
/// Future samples are assumed to travel on the links the plan requests.
DelayPlan reactive_plan(int k, std::span<const int> allocHistory, const PlantModel& model,
                        const NetworkModel& net, const RiccatiSolution& sol, int T,
                        const PlannerOptions& opts = {});

/// Core used by both planners; `table` comes from staleness_cost_table. In
/// Impassive mode the history is ignored and the offline plan's suffix from k
/// is returned.
DelayPlan solve_plan(PlanMode mode, int k, std::span<const int> allocHistory,
                     const StalenessTable& table, const NetworkModel& net, int T,
                     const PlannerOptions& opts = {});

/// The binary program behind solve_plan. Variables theta_t(d) for t = k..T-1
/// come first, in (t, d) order; their indices are returned in `selection`.
struct PlanProgram {
  MilpProblem problem;
  std::vector<std::vector<int>> selection;
};
PlanProgram build_plan_program(int k, std::span<const int> allocHistory,
                               const StalenessTable& table, const NetworkModel& net, int T,
                               FreshnessEncoding encoding);

/// Staleness of the freshest sample held at t when sample s travelled on
/// links[s] (s = 0..t). Returns t+1 when nothing has arrived yet.
int freshest_staleness(std::span<const int> links, int t, int D);

/// sum_{t=k}^{T-1} price(links[t]) + table[t][staleness at t], where links
/// covers 0..T-1 (granted history followed by the plan).
double plan_objective(std::span<const int> links, int k, const StalenessTable& table,
                      const NetworkModel& net);

/// Exact plan by dynamic programming over the last D links. Returns the
/// requested links for k..T-1 and the objective.
std::pair<std::vector<int>, double> plan_by_dynamic_programming(
    int k, std::span<const int> allocHistory, const StalenessTable& table,
    const NetworkModel& net, int T);

}  // namespace ncs
