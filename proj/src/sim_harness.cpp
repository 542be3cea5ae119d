#include "ncs/sim_harness.hpp"

#include "ncs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ncs {

std::vector<Tolerance> Scenario::tolerances() const {
  std::vector<Tolerance> out;
  for (const auto& l : loops) out.push_back({l.model.alpha, l.model.beta});
  return out;
}

std::vector<StalenessTable> Scenario::tables() const {
  std::vector<StalenessTable> out;
  for (const auto& l : loops) out.push_back(l.table);
  return out;
}

Scenario make_scenario(const std::vector<PlantModel>& plants, const NetworkModel& net, int T,
                       std::vector<double> weights, const PlannerOptions& planner,
                       const AllocatorOptions& allocator) {
  if (T < 1) throw ConfigError("horizon must be at least 1");
  if (plants.empty()) throw ConfigError("at least one sub-system is required");
  validate(net);
  validateTotalCapacity(net, static_cast<int>(plants.size()));
  Scenario sc;
  sc.net = net;
  sc.T = T;
  sc.planner = planner;
  sc.allocator = allocator;
  for (const auto& plant : plants) {
    validate(plant);
    validate(plant, net);
    LoopSetup loop;
    loop.model = plant;
    loop.sol = riccati_backward(plant, T);
    loop.table = staleness_cost_table(plant, loop.sol, net.D);
    loop.sqrtSigmaW = covariance_sqrt(plant.SigmaW);
    loop.sqrtSigmaX0 = covariance_sqrt(plant.SigmaX0);
    sc.loops.push_back(std::move(loop));
  }
  const int N = sc.numLoops();
  if (weights.empty()) weights.assign(static_cast<std::size_t>(N), 1.0 / N);
  if (static_cast<int>(weights.size()) != N) throw ConfigError("one weight per sub-system required");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ConfigError("weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("weights must sum to 1");
  sc.weights = std::move(weights);
  return sc;
}

// ---------------------------------------------------------------------------
// Decisions

LiveDecisions::LiveDecisions(const Scenario& scenario, AllocationRegime regime)
    : sc_(scenario), regime_(regime) {
  const int N = sc_.numLoops();
  const int T = sc_.T;
  trace_.label = to_string(regime);
  trace_.requested.assign(static_cast<std::size_t>(N), {});
  trace_.allocated.assign(static_cast<std::size_t>(N), {});
  trace_.solverGap.assign(static_cast<std::size_t>(T), 0.0);
  std::vector<std::vector<int>> offlineLinks;
  for (const auto& loop : sc_.loops) {
    offline_.push_back(solve_plan(PlanMode::Impassive, 0, {}, loop.table, sc_.net, T, sc_.planner));
    offlineLinks.push_back(offline_.back().links());
    for (int k = 0; k < T; ++k) noteGap(k, offline_.back().status, offline_.back().gap);
  }
  AllocationResult details;
  bool upFront = true;
  switch (regime_) {
    case AllocationRegime::AwareImpassive:
      allocate_aware_impassive(offlineLinks, sc_.tolerances(), sc_.tables(), sc_.net, sc_.allocator,
                               &details);
      break;
    case AllocationRegime::AgnosticImpassive:
      allocate_agnostic(PlanMode::Impassive, 0, offlineLinks, {}, sc_.net, sc_.tolerances(), T,
                        sc_.allocator, &details);
      break;
    case AllocationRegime::DelayInsensitive:
      allocate_delay_insensitive(sc_.weights, sc_.tables(), sc_.net, T, sc_.allocator, &details);
      break;
    case AllocationRegime::AwareReactive:
    case AllocationRegime::AgnosticReactive:
      upFront = false;
      trace_.reactiveObjective.assign(static_cast<std::size_t>(N), {});
      trace_.impassiveSuffixObjective.assign(static_cast<std::size_t>(N), {});
      current_.resize(static_cast<std::size_t>(N));
      break;
  }
  if (upFront) {
    offlineAlloc_ = details.links;
    for (int k = 0; k < T; ++k) noteGap(k, details.status, details.gap);
  }
}

void LiveDecisions::noteGap(int k, MilpStatus status, double gap) {
  if (status != MilpStatus::Optimal) trace_.certified = false;
  trace_.solverGap[k] = std::max(trace_.solverGap[k], gap);
}

std::vector<int> LiveDecisions::requests(int k) {
  const int N = sc_.numLoops();
  std::vector<int> out(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    const auto& loop = sc_.loops[i];
    if (is_reactive(regime_)) {
      const auto& history = trace_.allocated[i];
      current_[i] = solve_plan(PlanMode::Reactive, k, history, loop.table, sc_.net, sc_.T, sc_.planner);
      noteGap(k, current_[i].status, current_[i].gap);
      out[i] = current_[i].linkAt(k);
      std::vector<int> offlineSuffix(history.begin(), history.begin() + k);
      const auto plan = offline_[i].links();
      offlineSuffix.insert(offlineSuffix.end(), plan.begin() + k, plan.end());
      trace_.reactiveObjective[i].push_back(current_[i].predictedObjective);
      trace_.impassiveSuffixObjective[i].push_back(
          plan_objective(offlineSuffix, k, loop.table, sc_.net));
    } else {
      out[i] = offline_[i].linkAt(k);
    }
    trace_.requested[i].push_back(out[i]);
  }
  return out;
}

std::vector<int> LiveDecisions::allocations(int k) {
  const int N = sc_.numLoops();
  std::vector<int> out(static_cast<std::size_t>(N));
  if (is_reactive(regime_)) {
    std::vector<std::vector<int>> suffixes;
    for (const auto& plan : current_) suffixes.push_back(plan.links());
    AllocationResult details;
    Allocation a;
    if (regime_ == AllocationRegime::AwareReactive) {
      a = allocate_aware_reactive(k, suffixes, trace_.allocated, sc_.tolerances(), sc_.tables(),
                                  sc_.net, sc_.T, sc_.allocator, &details);
    } else {
      a = allocate_agnostic(PlanMode::Reactive, k, suffixes, trace_.allocated, sc_.net,
                            sc_.tolerances(), sc_.T, sc_.allocator, &details)
              .front();
    }
    noteGap(k, details.status, details.gap);
    out = a.links();
  } else {
    for (int i = 0; i < N; ++i) out[i] = offlineAlloc_[i][k];
  }
  for (int i = 0; i < N; ++i) trace_.allocated[i].push_back(out[i]);
  return out;
}

std::vector<int> ReplayDecisions::requests(int k) {
  std::vector<int> out;
  for (const auto& row : trace_.requested) out.push_back(row.at(k));
  return out;
}

std::vector<int> ReplayDecisions::allocations(int k) {
  std::vector<int> out;
  for (const auto& row : trace_.allocated) out.push_back(row.at(k));
  return out;
}

DecisionTrace plan_decisions(const Scenario& scenario, AllocationRegime regime) {
  LiveDecisions live(scenario, regime);
  for (int k = 0; k < scenario.T; ++k) {
    live.requests(k);
    live.allocations(k);
  }
  return live.trace();
}

DecisionTrace shadow_decisions(const Scenario& scenario) {
  DecisionTrace out;
  out.label = "Shadow";
  out.solverGap.assign(static_cast<std::size_t>(scenario.T), 0.0);
  for (const auto& loop : scenario.loops) {
    const DelayPlan plan =
        solve_plan(PlanMode::Impassive, 0, {}, loop.table, scenario.net, scenario.T, scenario.planner);
    if (plan.status != MilpStatus::Optimal) out.certified = false;
    for (auto& g : out.solverGap) g = std::max(g, plan.gap);
    out.requested.push_back(plan.links());
    out.allocated.push_back(plan.links());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Episodes

bool EpisodeTrace::complete() const {
  if (steps.empty() || terminalCost.size() != steps.size()) return false;
  return std::all_of(steps.begin(), steps.end(),
                     [&](const auto& row) { return static_cast<int>(row.size()) == T; });
}

EpisodeState start_episode(const Scenario& scenario, std::uint64_t seed, int replication,
                           std::string regime) {
  EpisodeState state;
  state.trace.regime = std::move(regime);
  state.trace.seed = seed;
  state.trace.replication = replication;
  state.trace.T = scenario.T;
  state.trace.steps.resize(scenario.loops.size());
  for (std::size_t i = 0; i < scenario.loops.size(); ++i) {
    const auto& loop = scenario.loops[i];
    EpisodeState::Loop l{Rng::stream(seed, static_cast<std::uint64_t>(replication), i), {}, {}, {}};
    l.x = sample_gaussian_factored(l.rng, loop.model.meanX0, loop.sqrtSigmaX0);
    l.info.D = scenario.net.D;
    state.loops.push_back(std::move(l));
  }
  return state;
}

void run_cycle(int k, const Scenario& scenario, EpisodeState& state, DecisionSource& decisions) {
  const int N = scenario.numLoops();
  const int D = scenario.net.D;
  if (k > 0) {
    for (int i = 0; i < N; ++i) {
      auto& l = state.loops[i];
      const auto& loop = scenario.loops[i];
      const Vector w = sample_gaussian_factored(l.rng, Vector::Zero(loop.model.stateDim()),
                                                loop.sqrtSigmaW);
      l.x = step_plant(l.x, l.info.inputs.back(), w, loop.model);
    }
  }
  const std::vector<int> req = decisions.requests(k);
  const std::vector<int> alloc = decisions.allocations(k);
  for (int i = 0; i < N; ++i) {
    auto& l = state.loops[i];
    const auto& loop = scenario.loops[i];
    l.info.requested.push_back(LinkSelection::link(req[i], D));
    l.info.allocated.push_back(LinkSelection::link(alloc[i], D));
    if (k + alloc[i] < scenario.T) l.inFlight.push_back({k, l.x, k + alloc[i]});
    auto due = std::stable_partition(l.inFlight.begin(), l.inFlight.end(),
                                     [&](const ReceivedSample& s) { return s.arrival != k; });
    for (auto it = due; it != l.inFlight.end(); ++it) ingest(l.info, *it, k);
    l.inFlight.erase(due, l.inFlight.end());

    l.info.estimate = estimate(l.info, loop.model, k);
    const Vector u = control_input(loop.sol.L[k], l.info.estimate);
    l.info.inputs.push_back(u);

    StepRecord rec;
    rec.x = l.x;
    rec.xhat = l.info.estimate;
    rec.u = u;
    rec.requested = req[i];
    rec.allocated = alloc[i];
    rec.stageCost = l.x.dot(loop.model.Q1 * l.x) + u.dot(loop.model.R * u);
    rec.requestedPrice = scenario.net.prices[req[i]];
    rec.allocatedPrice = scenario.net.prices[alloc[i]];
    state.trace.steps[i].push_back(std::move(rec));
  }
}

void finish_episode(const Scenario& scenario, EpisodeState& state) {
  for (std::size_t i = 0; i < state.loops.size(); ++i) {
    auto& l = state.loops[i];
    const auto& loop = scenario.loops[i];
    const Vector w =
        sample_gaussian_factored(l.rng, Vector::Zero(loop.model.stateDim()), loop.sqrtSigmaW);
    l.x = step_plant(l.x, l.info.inputs.back(), w, loop.model);
    state.trace.terminalState.push_back(l.x);
    state.trace.terminalCost.push_back(l.x.dot(loop.model.Q2 * l.x));
  }
}

EpisodeTrace simulate_episode(const Scenario& scenario, DecisionSource& decisions,
                              std::uint64_t seed, int replication, std::string regime) {
  EpisodeState state = start_episode(scenario, seed, replication, std::move(regime));
  for (int k = 0; k < scenario.T; ++k) run_cycle(k, scenario, state, decisions);
  finish_episode(scenario, state);
  return std::move(state.trace);
}

// ---------------------------------------------------------------------------
// Costs and metrics

double local_cost(const EpisodeTrace& trace, int loop, PriceColumn which) {
  if (!trace.complete()) throw ConfigError("local_cost: incomplete trace");
  double v = trace.terminalCost.at(static_cast<std::size_t>(loop));
  for (const auto& rec : trace.steps.at(static_cast<std::size_t>(loop))) {
    v += rec.stageCost + (which == PriceColumn::Requested ? rec.requestedPrice : rec.allocatedPrice);
  }
  return v;
}

Estimate mean_and_stderr(const std::vector<double>& samples) {
  Estimate e;
  if (samples.empty()) return e;
  const double n = static_cast<double>(samples.size());
  e.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double s : samples) ss += (s - e.mean) * (s - e.mean);
    e.stdError = std::sqrt(ss / (n - 1.0) / n);
  }
  return e;
}

namespace {

double pairedExcess(const EpisodeTrace& run, const EpisodeTrace& shadow) {
  if (run.seed != shadow.seed || run.replication != shadow.replication ||
      run.steps.size() != shadow.steps.size()) {
    throw ConfigError("social_cost: runs are not paired on the same noise streams");
  }
  const int N = static_cast<int>(run.steps.size());
  double v = 0.0;
  for (int i = 0; i < N; ++i) {
    v += local_cost(run, i, PriceColumn::Allocated) - local_cost(shadow, i, PriceColumn::Requested);
  }
  return v / N;
}

}  // namespace

Estimate social_cost(const std::vector<EpisodeTrace>& regimeTraces,
                     const std::vector<EpisodeTrace>& shadowTraces) {
  if (regimeTraces.size() != shadowTraces.size() || regimeTraces.empty()) {
    throw ConfigError("social_cost: need one shadow run per regime run");
  }
  std::vector<double> diffs;
  for (std::size_t r = 0; r < regimeTraces.size(); ++r) {
    diffs.push_back(pairedExcess(regimeTraces[r], shadowTraces[r]));
  }
  return mean_and_stderr(diffs);
}

std::vector<std::vector<double>> link_utilization(const std::vector<std::vector<int>>& allocated,
                                                  int D) {
  const int N = static_cast<int>(allocated.size());
  const int T = N ? static_cast<int>(allocated.front().size()) : 0;
  std::vector<std::vector<double>> rho(static_cast<std::size_t>(D) + 1,
                                       std::vector<double>(static_cast<std::size_t>(T), 0.0));
  std::vector<long> count(static_cast<std::size_t>(D) + 1, 0);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < N; ++i) ++count[allocated[i][t]];
    for (int d = 0; d <= D; ++d) rho[d][t] = static_cast<double>(count[d]) / (N * (t + 1.0));
  }
  return rho;
}

namespace {

std::vector<std::vector<int>> column(const EpisodeTrace& trace, bool requested) {
  std::vector<std::vector<int>> out;
  for (const auto& row : trace.steps) {
    std::vector<int> links;
    for (const auto& rec : row) links.push_back(requested ? rec.requested : rec.allocated);
    out.push_back(std::move(links));
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> link_utilization(const std::vector<EpisodeTrace>& traces, int D) {
  if (traces.empty()) return {};
  std::vector<std::vector<int>> all;
  for (const auto& tr : traces) {
    for (auto& row : column(tr, false)) all.push_back(std::move(row));
  }
  return link_utilization(all, D);
}

std::vector<double> loop_deviation(const std::vector<int>& requested, const std::vector<int>& allocated) {
  std::vector<double> out;
  double sum = 0.0;
  for (std::size_t t = 0; t < allocated.size(); ++t) {
    sum += std::abs(allocated[t] - requested[t]);
    out.push_back(sum / (t + 1.0));
  }
  return out;
}

std::vector<double> average_deviation(const std::vector<std::vector<int>>& requested,
                                      const std::vector<std::vector<int>>& allocated) {
  const std::size_t N = allocated.size();
  if (N == 0) return {};
  std::vector<double> out(allocated.front().size(), 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    const auto dev = loop_deviation(requested[i], allocated[i]);
    for (std::size_t t = 0; t < out.size(); ++t) out[t] += dev[t] / N;
  }
  return out;
}

std::vector<double> average_deviation(const std::vector<EpisodeTrace>& traces) {
  std::vector<std::vector<int>> req, alloc;
  for (const auto& tr : traces) {
    for (auto& row : column(tr, true)) req.push_back(std::move(row));
    for (auto& row : column(tr, false)) alloc.push_back(std::move(row));
  }
  return average_deviation(req, alloc);
}

double expected_loop_cost(const LoopSetup& loop, const NetworkModel& net,
                          const std::vector<int>& allocated) {
  return baseline_cost(loop.model, loop.sol) + plan_objective(allocated, 0, loop.table, net);
}

ExperimentResult run_regimes(const Scenario& scenario, const std::vector<AllocationRegime>& regimes,
                             const ExperimentOptions& opts) {
  if (opts.replications < 1) throw ConfigError("replications must be at least 1");
  const int N = scenario.numLoops();
  const int R = opts.replications;
  ExperimentResult out;
  out.shadow = shadow_decisions(scenario);

  // Shadow costs per replication and loop, shared by every regime.
  std::vector<std::vector<double>> shadowCost(static_cast<std::size_t>(R));
  {
    ReplayDecisions replay(out.shadow);
    for (int r = 0; r < R; ++r) {
      const EpisodeTrace tr = simulate_episode(scenario, replay, opts.seed, r, "Shadow");
      for (int i = 0; i < N; ++i) shadowCost[r].push_back(local_cost(tr, i, PriceColumn::Requested));
    }
  }

  for (AllocationRegime regime : regimes) {
    RegimeMetrics m;
    m.regime = to_string(regime);
    m.decisions = plan_decisions(scenario, regime);
    ReplayDecisions replay(m.decisions);
    std::vector<std::vector<double>> local(static_cast<std::size_t>(N));
    std::vector<EpisodeTrace> kept;
    for (int r = 0; r < R; ++r) {
      EpisodeTrace tr = simulate_episode(scenario, replay, opts.seed, r, m.regime);
      double fleet = 0.0;
      double excess = 0.0;
      for (int i = 0; i < N; ++i) {
        const double c = local_cost(tr, i, PriceColumn::Allocated);
        local[i].push_back(c);
        fleet += c / N;
        excess += (c - shadowCost[r][i]) / N;
      }
      m.perReplicationCost.push_back(fleet);
      m.perReplicationSocial.push_back(excess);
      if (r < opts.keepTraces) kept.push_back(std::move(tr));
    }
    for (int i = 0; i < N; ++i) m.localCosts.push_back(mean_and_stderr(local[i]));
    m.meanCost = mean_and_stderr(m.perReplicationCost);
    m.socialCost = mean_and_stderr(m.perReplicationSocial);
    for (int i = 0; i < N; ++i) {
      m.analyticMeanCost +=
          expected_loop_cost(scenario.loops[i], scenario.net, m.decisions.allocated[i]) / N;
      m.loopDeviation.push_back(loop_deviation(m.decisions.requested[i], m.decisions.allocated[i]));
    }
    m.utilization = link_utilization(m.decisions.allocated, scenario.net.D);
    m.avgDeviation = average_deviation(m.decisions.requested, m.decisions.allocated);
    m.solverGap = m.decisions.solverGap;
    m.certified = m.decisions.certified;
    out.regimes.push_back(std::move(m));
    out.keptTraces.push_back(std::move(kept));
  }
  return out;
}

}  // namespace ncs
