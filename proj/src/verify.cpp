#include "ncs/verify.hpp"

#include "ncs/delay_policy.hpp"
#include "ncs/estimator.hpp"
#include "ncs/lqg.hpp"
#include "ncs/milp.hpp"
#include "ncs/resource_manager.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace ncs {

namespace {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int uniformInt(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.nextU64() % static_cast<std::uint64_t>(hi - lo + 1));
}

double uniformReal(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

void record(SuiteReport& r, bool ok, const std::string& what) {
  ++r.cases;
  if (ok) return;
  ++r.failures;
  if (r.firstFailures.size() < 5) r.firstFailures.push_back(what);
}

// Staleness of the freshest sample at t by replaying every delivery.
int replayStaleness(const std::vector<int>& links, int t) {
  int freshest = -1;
  for (int s = 0; s <= t; ++s) {
    if (s + links[s] <= t) freshest = std::max(freshest, s);
  }
  return freshest < 0 ? t + 1 : t - freshest;
}

double replayCost(const std::vector<int>& links, const StalenessTable& table, const NetworkModel& net) {
  double v = 0.0;
  for (int t = 0; t < static_cast<int>(links.size()); ++t) {
    v += net.prices[links[t]] + table[t][replayStaleness(links, t)];
  }
  return v;
}

// Advances seq through {0..D}^n; false after the last one.
bool nextSequence(std::vector<int>& seq, int D) {
  for (int i = static_cast<int>(seq.size()) - 1; i >= 0; --i) {
    if (seq[i] < D) {
      ++seq[i];
      return true;
    }
    seq[i] = 0;
  }
  return false;
}

MilpProblem randomMilp(Rng& rng, int maxVars) {
  MilpProblem p;
  const int n = uniformInt(rng, 1, maxVars);
  // Small integer costs produce many ties, which exercises the tie rule.
  const bool integral = rng.uniform() < 0.5;
  for (int j = 0; j < n; ++j) {
    p.addVar(integral ? uniformInt(rng, -4, 4) : uniformReal(rng, -5.0, 5.0));
  }
  const int rows = uniformInt(rng, 0, 6);
  for (int r = 0; r < rows; ++r) {
    Terms terms;
    for (int j = 0; j < n; ++j) {
      if (rng.uniform() < 0.5) terms.emplace_back(j, uniformInt(rng, -3, 4));
    }
    if (terms.empty()) continue;
    if (rng.uniform() < 0.2) {
      p.addEq(std::move(terms), uniformInt(rng, 0, 2));
    } else {
      p.addLe(std::move(terms), uniformInt(rng, -1, 4));
    }
  }
  return p;
}

}  // namespace

PlantModel random_plant(Rng& rng, int n) {
  PlantModel m;
  m.A = Matrix(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m.A(r, c) = uniformReal(rng, -1.2, 1.2);
  m.B = Matrix::Identity(n, n) * uniformReal(rng, 0.1, 1.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (r != c) m.B(r, c) = uniformReal(rng, -0.05, 0.05);
  auto spd = [&](double lo, double hi) {
    Matrix G(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) G(r, c) = uniformReal(rng, -0.3, 0.3);
    Matrix S = G * G.transpose();
    for (int i = 0; i < n; ++i) S(i, i) += uniformReal(rng, lo, hi);
    return S;
  };
  m.Q1 = spd(0.5, 2.0);
  m.Q2 = spd(0.5, 2.0);
  m.R = spd(0.1, 1.0);
  m.SigmaW = spd(0.2, 1.5);
  m = withDefaultPrior(m);
  return m;
}

NetworkModel random_network(Rng& rng, int D) {
  NetworkModel net;
  net.D = D;
  net.prices.resize(static_cast<std::size_t>(D) + 1);
  double p = uniformReal(rng, 0.0, 1.0);
  for (int d = D; d >= 0; --d) {
    net.prices[d] = p;
    p += uniformReal(rng, 0.2, 4.0);
  }
  net.capacities.assign(static_cast<std::size_t>(D) + 1, 1);
  return net;
}

SuiteReport verify_random_milps(int count, int maxVars, std::uint64_t seed) {
  SuiteReport r;
  r.name = "random binary programs vs enumeration";
  Timer timer;
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    const MilpProblem p = randomMilp(rng, maxVars);
    record(r, verify_against_enumeration(p), "random program #" + std::to_string(i));
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteReport verify_delay_programs(int plantDraws, int maxVars, std::uint64_t seed) {
  SuiteReport r;
  r.name = "delay-control programs vs enumeration";
  Timer timer;
  Rng rng(seed);
  const FreshnessEncoding encodings[] = {FreshnessEncoding::Product, FreshnessEncoding::Dominance,
                                         FreshnessEncoding::Cumulative};
  for (int draw = 0; draw < plantDraws; ++draw) {
    for (int D = 1; D <= 2; ++D) {
      const NetworkModel net = random_network(rng, D);
      const int T = 4;
      const PlantModel a = random_plant(rng, 2);
      const PlantModel b = random_plant(rng, 1);
      const auto solA = riccati_backward(a, T);
      const auto solB = riccati_backward(b, T);
      const StalenessTable tabA = staleness_cost_table(a, solA, D);
      const StalenessTable tabB = staleness_cost_table(b, solB, D);

      // Single-loop planning programs.
      for (int k = 0; k < T; ++k) {
        std::vector<int> history;
        for (int s = 0; s < k; ++s) history.push_back(uniformInt(rng, 0, D));
        for (auto enc : encodings) {
          const PlanProgram prog = build_plan_program(k, history, tabA, net, T, enc);
          if (prog.problem.numVars > maxVars) continue;
          std::ostringstream what;
          what << "plan draw " << draw << " D=" << D << " k=" << k << " " << to_string(enc);
          record(r, verify_against_enumeration(prog.problem), what.str());
        }
      }

      // Two-loop allocation programs, model-aware and price-only.
      for (int Th = 1; Th <= 3; ++Th) {
        for (int k = 0; k < Th; ++k) {
          AllocationProgramSpec spec;
          spec.k = k;
          spec.T = Th;
          spec.net = net;
          spec.weights = {0.5, 0.5};
          spec.tolerances = {{uniformInt(rng, 0, D), uniformInt(rng, 0, D)},
                             {uniformInt(rng, 0, D), uniformInt(rng, 0, D)}};
          spec.requests.assign(2, {});
          spec.history.assign(2, {});
          for (int i = 0; i < 2; ++i) {
            for (int t = k; t < Th; ++t) spec.requests[i].push_back(uniformInt(rng, 0, D));
            for (int s = 0; s < k; ++s) spec.history[i].push_back(uniformInt(rng, 0, D));
          }
          for (int variant = 0; variant < 3; ++variant) {
            spec.toleranceWindows = variant != 2;
            spec.tables = variant == 1 ? std::vector<const StalenessTable*>{nullptr, nullptr}
                                       : std::vector<const StalenessTable*>{&tabA, &tabB};
            for (auto enc : encodings) {
              spec.encoding = enc;
              const AllocationProgram prog = build_allocation_program(spec);
              if (prog.problem.numVars > maxVars) continue;
              std::ostringstream what;
              what << "allocation draw " << draw << " D=" << D << " T=" << Th << " k=" << k
                   << " variant " << variant << " " << to_string(enc);
              record(r, verify_against_enumeration(prog.problem), what.str());
            }
          }
        }
      }
    }
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteReport verify_planner(int plantDraws, int maxT, int maxD, std::uint64_t seed) {
  SuiteReport r;
  r.name = "impassive planner vs exhaustive search";
  Timer timer;
  Rng rng(seed);
  for (int draw = 0; draw < plantDraws; ++draw) {
    const PlantModel m = random_plant(rng, uniformInt(rng, 1, 2));
    for (int D = 1; D <= maxD; ++D) {
      const NetworkModel net = random_network(rng, D);
      for (int T = 1; T <= maxT; ++T) {
        const auto sol = riccati_backward(m, T);
        const StalenessTable table = staleness_cost_table(m, sol, D);
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> seq(static_cast<std::size_t>(T), 0);
        do {
          best = std::min(best, replayCost(seq, table, net));
        } while (nextSequence(seq, D));
        const DelayPlan plan = impassive_plan(m, net, sol, T);
        const double achieved = replayCost(plan.links(), table, net);
        const double tol = 1e-9 * std::max(1.0, std::abs(best));
        std::ostringstream what;
        what << "draw " << draw << " D=" << D << " T=" << T << ": plan " << plan.predictedObjective
             << " replay " << achieved << " best " << best;
        record(r,
               std::abs(plan.predictedObjective - best) <= tol && std::abs(achieved - best) <= tol,
               what.str());
      }
    }
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteReport verify_freshness_selector(int maxD) {
  SuiteReport r;
  r.name = "freshness selector vs delivery replay";
  Timer timer;
  for (int D = 1; D <= maxD; ++D) {
    for (int k = 0; k <= D + 1; ++k) {
      std::vector<int> links(static_cast<std::size_t>(k) + 1, 0);
      do {
        const std::vector<int> b = b_coefficients_from_links(links, k, D);
        std::vector<int> expected(static_cast<std::size_t>(D) + 1, 0);
        expected[replayStaleness(links, k)] = 1;
        std::ostringstream what;
        what << "D=" << D << " k=" << k << " links";
        for (int l : links) what << ' ' << l;
        record(r, b == expected, what.str());
      } while (nextSequence(links, D));
    }
  }
  r.seconds = timer.seconds();
  return r;
}

std::vector<SuiteReport> run_all_verifications(std::uint64_t seed) {
  return {verify_random_milps(200, 10, seed), verify_delay_programs(6, 22, seed + 1),
          verify_planner(20, 4, 2, seed + 2), verify_freshness_selector(3)};
}

}  // namespace ncs
