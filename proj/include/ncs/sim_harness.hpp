#pragma once

#include "ncs/delay_policy.hpp"
#include "ncs/estimator.hpp"
#include "ncs/lqg.hpp"
#include "ncs/resource_manager.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ncs {

/// Everything precomputed for one loop.
struct LoopSetup {
  PlantModel model;
  RiccatiSolution sol;
  StalenessTable table;
  Matrix sqrtSigmaW;
  Matrix sqrtSigmaX0;
};

struct Scenario {
  NetworkModel net;
  int T = 0;
  std::vector<LoopSetup> loops;
  std::vector<double> weights;  // delay-insensitive priorities, sum 1
  PlannerOptions planner;
  AllocatorOptions allocator;

  int numLoops() const { return static_cast<int>(loops.size()); }
  std::vector<Tolerance> tolerances() const;
  std::vector<StalenessTable> tables() const;
};

/// Validates the models and precomputes Riccati solutions and staleness costs.
/// Empty weights mean 1/N each.
Scenario make_scenario(const std::vector<PlantModel>& plants, const NetworkModel& net, int T,
                       std::vector<double> weights = {}, const PlannerOptions& planner = {},
                       const AllocatorOptions& allocator = {});

/// Requests and grants of every loop at one step, as produced by a regime.
class DecisionSource {
 public:
  virtual ~DecisionSource() = default;
  virtual std::vector<int> requests(int k) = 0;
  /// Must be called after requests(k).
  virtual std::vector<int> allocations(int k) = 0;
};

/// Decisions of one regime over a whole episode. None of them depend on the
/// noise, so one pass serves every replication.
struct DecisionTrace {
  std::string label;
  std::vector<std::vector<int>> requested;  // [i][k]
  std::vector<std::vector<int>> allocated;  // [i][k]
  // Largest relative gap of any solve that contributed to step k.
  std::vector<double> solverGap;
  bool certified = true;  // every solve finished with a proven optimum
  // Reactive regimes only: predicted objective of loop i's plan at k, and of
  // its offline plan's suffix under the same granted history.
  std::vector<std::vector<double>> reactiveObjective;
  std::vector<std::vector<double>> impassiveSuffixObjective;
};

/// Runs the planners and the resource manager of `regime` step by step.
class LiveDecisions : public DecisionSource {
 public:
  LiveDecisions(const Scenario& scenario, AllocationRegime regime);
  std::vector<int> requests(int k) override;
  std::vector<int> allocations(int k) override;
  const DecisionTrace& trace() const { return trace_; }

 private:
  void noteGap(int k, MilpStatus status, double gap);

  const Scenario& sc_;
  AllocationRegime regime_;
  std::vector<DelayPlan> offline_;                 // impassive plan per loop
  std::vector<std::vector<int>> offlineAlloc_;     // [i][k] when solved up front
  std::vector<DelayPlan> current_;                 // reactive plan per loop at k
  DecisionTrace trace_;
};

/// Replays a recorded DecisionTrace.
class ReplayDecisions : public DecisionSource {
 public:
  explicit ReplayDecisions(const DecisionTrace& trace) : trace_(trace) {}
  std::vector<int> requests(int k) override;
  std::vector<int> allocations(int k) override;

 private:
  const DecisionTrace& trace_;
};

/// Full decision pass of one regime.
DecisionTrace plan_decisions(const Scenario& scenario, AllocationRegime regime);
/// Contention-free reference: every loop follows its offline plan and is
/// granted exactly what it asks for.
DecisionTrace shadow_decisions(const Scenario& scenario);

/// Per-step record of one loop.
struct StepRecord {
  Vector x;
  Vector xhat;
  Vector u;
  int requested = 0;
  int allocated = 0;
  double stageCost = 0.0;  // |x|^2_Q1 + |u|^2_R
  double requestedPrice = 0.0;
  double allocatedPrice = 0.0;
};

struct EpisodeTrace {
  std::string regime;
  std::uint64_t seed = 0;
  int replication = 0;
  int T = 0;
  std::vector<std::vector<StepRecord>> steps;  // [i][k]
  std::vector<Vector> terminalState;           // x_T per loop
  std::vector<double> terminalCost;            // |x_T|^2_Q2 per loop
  bool complete() const;
};

/// Mutable simulation state of all loops during one episode.
struct EpisodeState {
  struct Loop {
    Rng rng;
    Vector x;
    ControllerInfo info;
    std::vector<ReceivedSample> inFlight;
  };
  std::vector<Loop> loops;
  EpisodeTrace trace;
};

EpisodeState start_episode(const Scenario& scenario, std::uint64_t seed, int replication,
                           std::string regime);

/// One sample time: state update, requests, allocation, sending, delivery and
/// estimation, control, record.
void run_cycle(int k, const Scenario& scenario, EpisodeState& state, DecisionSource& decisions);

/// Applies the last disturbance and records the terminal cost.
void finish_episode(const Scenario& scenario, EpisodeState& state);

EpisodeTrace simulate_episode(const Scenario& scenario, DecisionSource& decisions,
                              std::uint64_t seed, int replication, std::string regime);

enum class PriceColumn { Requested, Allocated };

/// LQG part plus the chosen communication prices of loop i.
double local_cost(const EpisodeTrace& trace, int loop, PriceColumn which);

struct Estimate {
  double mean = 0.0;
  double stdError = 0.0;
};

Estimate mean_and_stderr(const std::vector<double>& samples);

/// Fleet-average paired excess of the regime runs over the shadow runs.
/// Throws ConfigError when seeds or replication indices do not pair up.
Estimate social_cost(const std::vector<EpisodeTrace>& regimeTraces,
                     const std::vector<EpisodeTrace>& shadowTraces);

/// rho[d][t]: share of transmissions on link d among all sent up to t.
std::vector<std::vector<double>> link_utilization(const std::vector<std::vector<int>>& allocated,
                                                  int D);
std::vector<std::vector<double>> link_utilization(const std::vector<EpisodeTrace>& traces, int D);

/// Fleet average of |allocated - requested| up to t, per t.
std::vector<double> average_deviation(const std::vector<std::vector<int>>& requested,
                                      const std::vector<std::vector<int>>& allocated);
std::vector<double> average_deviation(const std::vector<EpisodeTrace>& traces);
/// Same quantity for one loop.
std::vector<double> loop_deviation(const std::vector<int>& requested, const std::vector<int>& allocated);

/// Exact expected cost of loop i (LQG part plus allocated prices) when its
/// samples travel on `allocated`.
double expected_loop_cost(const LoopSetup& loop, const NetworkModel& net,
                          const std::vector<int>& allocated);

struct RegimeMetrics {
  std::string regime;
  std::vector<Estimate> localCosts;       // per loop, allocated prices
  Estimate meanCost;                      // fleet average of local costs
  Estimate socialCost;
  std::vector<double> perReplicationCost;    // fleet average per replication
  std::vector<double> perReplicationSocial;  // paired excess per replication
  double analyticMeanCost = 0.0;
  std::vector<std::vector<double>> utilization;  // [d][t]
  std::vector<double> avgDeviation;              // [t]
  std::vector<std::vector<double>> loopDeviation;  // [i][t]
  std::vector<double> solverGap;                 // [t]
  bool certified = true;
  DecisionTrace decisions;
};

struct ExperimentOptions {
  int replications = 100;
  std::uint64_t seed = 1;
  // Episode traces kept for output (the first few replications).
  int keepTraces = 1;
};

struct ExperimentResult {
  std::vector<RegimeMetrics> regimes;
  DecisionTrace shadow;
  std::vector<std::vector<EpisodeTrace>> keptTraces;  // per regime
};

/// Plans every regime once, then runs the replications with common random
/// numbers against the shared shadow runs.
ExperimentResult run_regimes(const Scenario& scenario, const std::vector<AllocationRegime>& regimes,
                             const ExperimentOptions& opts);

}  // namespace ncs
