#pragma once

#include "ncs/delay_policy.hpp"
#include "ncs/estimator.hpp"
#include "ncs/freshness.hpp"
#include "ncs/milp.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ncs {

enum class AllocationRegime {
  AwareImpassive,
  AwareReactive,
  AgnosticImpassive,
  AgnosticReactive,
  DelayInsensitive,
};

std::string to_string(AllocationRegime r);
AllocationRegime parse_regime(const std::string& s);
bool is_reactive(AllocationRegime r);
bool is_model_aware(AllocationRegime r);
/// Whether the manager must keep allocations within each loop's tolerance window.
bool respects_tolerance(AllocationRegime r);

/// Links granted to every loop at one time step.
struct Allocation {
  std::vector<LinkSelection> perSub;

  std::vector<int> links() const;
};

struct Tolerance {
  int alpha = 0;
  int beta = 0;
};

/// Links a loop may receive when it asked for `requested`.
std::pair<int, int> tolerance_window(int requested, Tolerance tol, int D);

/// One centralized allocation program over times [k, T-1].
///
/// Loop i contributes weights[i] * (price of its links + staleness costs from
/// tables[i]); a null table leaves only the price. With toleranceWindows the
/// links of loop i at t are limited to tolerance_window(requests[i][t-k]).
struct AllocationProgramSpec {
  int k = 0;
  int T = 0;
  NetworkModel net;
  std::vector<std::vector<int>> requests;  // [i][t-k]; may be empty without windows
  std::vector<std::vector<int>> history;   // [i][s], granted links for s < k
  std::vector<double> weights;
  std::vector<const StalenessTable*> tables;
  std::vector<Tolerance> tolerances;
  bool toleranceWindows = true;
  FreshnessEncoding encoding = FreshnessEncoding::Cumulative;

  int numLoops() const { return static_cast<int>(weights.size()); }
};

struct AllocationProgram {
  MilpProblem problem;
  // vars[i][t-k][d]: binary for loop i on link d at time t, or -1 if not allowed.
  std::vector<std::vector<std::vector<int>>> vars;
};

AllocationProgram build_allocation_program(const AllocationProgramSpec& spec);

struct AllocationResult {
  std::vector<std::vector<int>> links;  // [i][t-k]
  double objective = 0.0;
  MilpStatus status = MilpStatus::Optimal;
  double gap = 0.0;
  long nodes = 0;

  /// Allocation at absolute time t.
  Allocation at(int t, int k, int D) const;
};

struct AllocatorOptions {
  SolverOptions solver;
  FreshnessEncoding encoding = FreshnessEncoding::Cumulative;
  // Seed large programs with a step-by-step greedy allocation.
  bool greedyHint = true;
};

/// Solves the program. Throws AllocationInfeasible, naming the first time and
/// link where capacity cannot absorb the tolerance windows.
AllocationResult solve_allocation(const AllocationProgramSpec& spec, const SolverOptions& solver,
                                  bool greedyHint = true);

/// Throws AllocationInfeasible if the windows at some step cannot be packed
/// into the capacities. Exact (interval bipartite matching).
void check_allocation_feasible(const AllocationProgramSpec& spec);

/// sum_i weights[i] * plan_objective over [k, T-1] of the given links; entries
/// with a null table count prices only.
double allocation_objective(const AllocationProgramSpec& spec,
                            const std::vector<std::vector<int>>& links);

/// Offline allocation for the whole horizon. requests[i][t] are the impassive
/// plans; objective is the fleet average of price plus staleness cost.
std::vector<Allocation> allocate_aware_impassive(const std::vector<std::vector<int>>& requests,
                                                 const std::vector<Tolerance>& tolerances,
                                                 const std::vector<StalenessTable>& tables,
                                                 const NetworkModel& net,
                                                 const AllocatorOptions& opts = {},
                                                 AllocationResult* details = nullptr);

/// Online allocation at k: requests[i] holds the current requests for k..T-1,
/// history[i] the links granted before k. Only the allocation at k is returned.
Allocation allocate_aware_reactive(int k, const std::vector<std::vector<int>>& requests,
                                   const std::vector<std::vector<int>>& history,
                                   const std::vector<Tolerance>& tolerances,
                                   const std::vector<StalenessTable>& tables,
                                   const NetworkModel& net, int T,
                                   const AllocatorOptions& opts = {},
                                   AllocationResult* details = nullptr);

/// Price-only allocation under the same windows and capacities. Impassive
/// mode returns all T steps from one solve; Reactive mode returns the single
/// allocation at k.
std::vector<Allocation> allocate_agnostic(PlanMode mode, int k,
                                          const std::vector<std::vector<int>>& requests,
                                          const std::vector<std::vector<int>>& history,
                                          const NetworkModel& net,
                                          const std::vector<Tolerance>& tolerances, int T,
                                          const AllocatorOptions& opts = {},
                                          AllocationResult* details = nullptr);

/// Weighted allocation without tolerance windows, solved once at k = 0 for
/// the whole horizon.
std::vector<Allocation> allocate_delay_insensitive(const std::vector<double>& weights,
                                                   const std::vector<StalenessTable>& tables,
                                                   const NetworkModel& net, int T,
                                                   const AllocatorOptions& opts = {},
                                                   AllocationResult* details = nullptr);

/// Largest c_d the sufficient feasibility condition asks for at link d:
/// floor(N^2 / (N + h)) where h counts loops whose window can reach d from
/// both sides or one side.
int feasibility_bound(int d, const std::vector<Tolerance>& tolerances, int N, int D);

}  // namespace ncs
