#include <doctest.h>

#include "ncs/errors.hpp"
#include "ncs/resource_manager.hpp"
#include "ncs/verify.hpp"
#include "../support/oracles.hpp"

#include <cmath>
#include <limits>

using namespace ncs;

namespace {

PlantModel scalar(double a) {
  PlantModel m;
  m.A = Matrix::Constant(1, 1, a);
  m.B = Matrix::Constant(1, 1, 1.0);
  m.Q1 = m.Q2 = m.R = m.SigmaW = Matrix::Identity(1, 1);
  return withDefaultPrior(m);
}

NetworkModel network(std::vector<double> prices, std::vector<int> caps) {
  NetworkModel net;
  net.D = static_cast<int>(prices.size()) - 1;
  net.prices = std::move(prices);
  net.capacities = std::move(caps);
  return net;
}

std::vector<std::vector<int>> byLoop(const std::vector<Allocation>& perStep) {
  std::vector<std::vector<int>> out(perStep.front().perSub.size());
  for (const auto& a : perStep)
    for (std::size_t i = 0; i < a.perSub.size(); ++i) out[i].push_back(a.perSub[i].delay());
  return out;
}

struct Brute {
  double value = std::numeric_limits<double>::infinity();
  std::vector<std::vector<int>> links;
};

// Exhaustive allocation over [k, T) for every loop. tables[i] == nullptr prices only;
// requests empty means no windows.
Brute bruteAllocation(int k, int T, const NetworkModel& net, const std::vector<std::vector<int>>& requests,
                      const std::vector<std::vector<int>>& history, const std::vector<Tolerance>& tol,
                      const std::vector<const StalenessTable*>& tables, const std::vector<double>& w) {
  const int N = static_cast<int>(w.size());
  const int len = T - k;
  Brute best;
  oracle::for_each_sequence(N * len, net.D, [&](const std::vector<int>& flat) {
    for (int t = 0; t < len; ++t) {
      std::vector<int> load(net.D + 1, 0);
      for (int i = 0; i < N; ++i) {
        const int d = flat[i * len + t];
        if (++load[d] > net.capacities[d]) return;
        if (!requests.empty()) {
          const int r = requests[i][t];
          if (d < r - tol[i].alpha || d > r + tol[i].beta) return;
        }
      }
    }
    double v = 0.0;
    for (int i = 0; i < N; ++i) {
      std::vector<int> links = history.empty() ? std::vector<int>{} : history[i];
      links.insert(links.end(), flat.begin() + i * len, flat.begin() + (i + 1) * len);
      if (tables[i]) {
        v += w[i] * oracle::sequence_cost(links, k, *tables[i], net.prices);
      } else {
        for (int t = k; t < T; ++t) v += w[i] * net.prices[links[t]];
      }
    }
    if (v < best.value - 1e-12) {
      best.value = v;
      best.links.assign(N, {});
      for (int i = 0; i < N; ++i)
        best.links[i].assign(flat.begin() + i * len, flat.begin() + (i + 1) * len);
    }
  });
  return best;
}

void checkAllocations(const std::vector<std::vector<int>>& links, const NetworkModel& net,
                      const std::vector<std::vector<int>>* requests, const std::vector<Tolerance>& tol) {
  const std::size_t T = links.front().size();
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<int> load(net.D + 1, 0);
    for (std::size_t i = 0; i < links.size(); ++i) {
      const int d = links[i][t];
      REQUIRE(d >= 0);
      REQUIRE(d <= net.D);
      ++load[d];
      if (requests) {
        const int dev = d - (*requests)[i][t];
        CHECK(dev >= -tol[i].alpha);
        CHECK(dev <= tol[i].beta);
      }
    }
    for (int d = 0; d <= net.D; ++d) CHECK(load[d] <= net.capacities[d]);
  }
}

}  // namespace

TEST_CASE("feasibility_bound: worked values") {
  const std::vector<Tolerance> tol(20, {3, 3});
  CHECK(feasibility_bound(0, tol, 20, 5) == 10);
  CHECK(feasibility_bound(5, tol, 20, 5) == 10);
  for (int d = 1; d <= 4; ++d) CHECK(feasibility_bound(d, tol, 20, 5) == 6);
  CHECK(feasibility_bound(2, std::vector<Tolerance>(7, {0, 0}), 7, 4) == 7);
  // Backward-only tolerances only help links with a faster neighbour.
  const std::vector<Tolerance> back(4, {1, 0});
  CHECK(feasibility_bound(0, back, 4, 2) == 4);
  CHECK(feasibility_bound(1, back, 4, 2) == 2);
  CHECK_THROWS_AS(feasibility_bound(6, tol, 20, 5), ConfigError);
}

TEST_CASE("aware impassive: slack capacity grants every request") {
  Rng rng(41);
  const NetworkModel net = network({9, 4, 2, 1}, {3, 3, 3, 3});
  std::vector<StalenessTable> tables;
  std::vector<std::vector<int>> requests;
  for (int i = 0; i < 3; ++i) {
    const PlantModel m = random_plant(rng, 2);
    const auto sol = riccati_backward(m, 6);
    tables.push_back(staleness_cost_table(m, sol, 3));
    requests.push_back(impassive_plan(m, net, sol, 6).links());
  }
  for (const Tolerance t : {Tolerance{2, 2}, Tolerance{0, 0}}) {
    const auto out = allocate_aware_impassive(requests, std::vector<Tolerance>(3, t), tables, net);
    CHECK(byLoop(out) == requests);
  }
}

TEST_CASE("aware impassive: two identical loops competing for link 0") {
  const PlantModel m = scalar(2.0);
  const NetworkModel net = network({2, 1}, {1, 2});
  const auto sol = riccati_backward(m, 1);
  const std::vector<StalenessTable> tables(2, staleness_cost_table(m, sol, 1));
  const std::vector<std::vector<int>> requests = {{0}, {0}};
  const std::vector<Tolerance> tol(2, {1, 1});
  REQUIRE(tables[0][0][1] > 1.0);
  const auto out = byLoop(allocate_aware_impassive(requests, tol, tables, net));
  // One stays, the other moves; the tie goes to the lower loop index.
  CHECK(out == std::vector<std::vector<int>>{{0}, {1}});
}

TEST_CASE("aware allocation matches exhaustive search") {
  Rng rng(42);
  for (int trial = 0; trial < 12; ++trial) {
    const int D = 1 + trial % 2;
    NetworkModel net = random_network(rng, D);
    net.capacities.assign(D + 1, 1);
    net.capacities[0] = 2;
    const int N = 2, T = 3;
    std::vector<StalenessTable> tables;
    std::vector<std::vector<int>> requests;
    for (int i = 0; i < N; ++i) {
      const PlantModel m = random_plant(rng, 1 + i);
      const auto sol = riccati_backward(m, T);
      tables.push_back(staleness_cost_table(m, sol, D));
      requests.push_back(impassive_plan(m, net, sol, T).links());
    }
    const std::vector<Tolerance> tol(N, {1, 1});
    AllocationResult details;
    const auto out = byLoop(allocate_aware_impassive(requests, tol, tables, net, {}, &details));
    const auto brute = bruteAllocation(0, T, net, requests, {}, tol, {&tables[0], &tables[1]}, {0.5, 0.5});
    CHECK(details.objective == doctest::Approx(brute.value).epsilon(1e-9));
    CHECK(details.status == MilpStatus::Optimal);
    checkAllocations(out, net, &requests, tol);

    // Reactive at k = 1 with a history that deviated.
    const std::vector<std::vector<int>> history = {{D}, {0}};
    std::vector<std::vector<int>> suffix;
    for (const auto& r : requests) suffix.emplace_back(r.begin() + 1, r.end());
    AllocationResult re;
    const Allocation a = allocate_aware_reactive(1, suffix, history, tol, tables, net, T, {}, &re);
    const auto bruteRe = bruteAllocation(1, T, net, suffix, history, tol, {&tables[0], &tables[1]}, {0.5, 0.5});
    CHECK(re.objective == doctest::Approx(bruteRe.value).epsilon(1e-9));
    CHECK(a.links() == std::vector<int>{re.links[0][0], re.links[1][0]});
  }
}

TEST_CASE("aware reactive at k = 0 equals the offline program") {
  Rng rng(43);
  const NetworkModel net = network({11, 7, 4, 1}, {1, 1, 1, 2});
  std::vector<StalenessTable> tables;
  std::vector<std::vector<int>> requests;
  for (int i = 0; i < 3; ++i) {
    const PlantModel m = random_plant(rng, 2);
    const auto sol = riccati_backward(m, 4);
    tables.push_back(staleness_cost_table(m, sol, 3));
    requests.push_back(impassive_plan(m, net, sol, 4).links());
  }
  const std::vector<Tolerance> tol(3, {2, 2});
  AllocationResult off, on;
  const auto offline = allocate_aware_impassive(requests, tol, tables, net, {}, &off);
  const Allocation first = allocate_aware_reactive(0, requests, {{}, {}, {}}, tol, tables, net, 4, {}, &on);
  CHECK(off.objective == doctest::Approx(on.objective).epsilon(1e-12));
  CHECK(first.links() == offline[0].links());
}

TEST_CASE("aware reactive: a lone loop gets what it asks for") {
  Rng rng(44);
  for (int trial = 0; trial < 6; ++trial) {
    const int D = 1 + trial % 3;
    NetworkModel net = random_network(rng, D);
    const PlantModel m = random_plant(rng, 2);
    const int T = 5;
    const auto sol = riccati_backward(m, T);
    const auto plan = impassive_plan(m, net, sol, T).links();
    const std::vector<StalenessTable> tables = {staleness_cost_table(m, sol, D)};
    const Allocation a = allocate_aware_reactive(0, {plan}, {{}}, {{D, D}}, tables, net, T);
    CHECK(a.links()[0] == plan[0]);
  }
}

TEST_CASE("agnostic: pushes each grant to the slowest tolerated link") {
  const NetworkModel net = network({25, 17, 11, 7, 4, 1}, {4, 4, 4, 4, 4, 4});
  const std::vector<std::vector<int>> requests = {{0, 0}, {2, 4}};
  const auto out = byLoop(allocate_agnostic(PlanMode::Impassive, 0, requests, {}, net, {{3, 3}, {3, 3}}, 2));
  CHECK(out == std::vector<std::vector<int>>{{3, 3}, {5, 5}});
  const auto pinned = byLoop(allocate_agnostic(PlanMode::Impassive, 0, requests, {}, net, {{0, 0}, {0, 0}}, 2));
  CHECK(pinned == requests);
  // Reactive returns only the step at k.
  const auto re = allocate_agnostic(PlanMode::Reactive, 1, {{0}, {4}}, {{3}, {5}}, net, {{3, 3}, {3, 3}}, 2);
  REQUIRE(re.size() == 1);
  CHECK(re[0].links() == std::vector<int>{3, 5});
}

TEST_CASE("agnostic: matches exhaustive search at N=3, D=2") {
  Rng rng(45);
  for (int trial = 0; trial < 10; ++trial) {
    NetworkModel net = random_network(rng, 2);
    net.capacities = {1, 1, 1};
    std::vector<std::vector<int>> requests(3);
    for (auto& r : requests)
      for (int t = 0; t < 2; ++t) r.push_back(static_cast<int>(rng.nextU64() % 3));
    const std::vector<Tolerance> tol(3, {2, 2});
    AllocationResult details;
    const auto out = byLoop(allocate_agnostic(PlanMode::Impassive, 0, requests, {}, net, tol, 2, {}, &details));
    const auto brute = bruteAllocation(0, 2, net, requests, {}, tol, {nullptr, nullptr, nullptr},
                                       {1.0 / 3, 1.0 / 3, 1.0 / 3});
    CHECK(details.objective == doctest::Approx(brute.value).epsilon(1e-9));
    checkAllocations(out, net, &requests, tol);
  }
}

TEST_CASE("aware beats agnostic under the aware objective") {
  Rng rng(46);
  for (int trial = 0; trial < 6; ++trial) {
    const NetworkModel net = network({11, 7, 4, 1}, {2, 2, 1, 1});
    std::vector<StalenessTable> tables;
    std::vector<std::vector<int>> requests;
    for (int i = 0; i < 4; ++i) {
      const PlantModel m = random_plant(rng, 2);
      const auto sol = riccati_backward(m, 5);
      tables.push_back(staleness_cost_table(m, sol, 3));
      requests.push_back(impassive_plan(m, net, sol, 5).links());
    }
    const std::vector<Tolerance> tol(4, {2, 2});
    AllocationResult aware;
    allocate_aware_impassive(requests, tol, tables, net, {}, &aware);
    const auto agn = byLoop(allocate_agnostic(PlanMode::Impassive, 0, requests, {}, net, tol, 5));
    AllocationProgramSpec spec;
    spec.T = 5;
    spec.net = net;
    spec.requests = requests;
    spec.history.assign(4, {});
    spec.weights.assign(4, 0.25);
    spec.tolerances = tol;
    for (const auto& t : tables) spec.tables.push_back(&t);
    CHECK(aware.objective <= allocation_objective(spec, agn) + 1e-9);
    CHECK(aware.objective == doctest::Approx(allocation_objective(spec, aware.links)).epsilon(1e-9));
  }
}

TEST_CASE("delay-insensitive: separable under slack capacity, bounded by the aware optimum") {
  Rng rng(47);
  const NetworkModel slack = network({11, 7, 4, 1}, {3, 3, 3, 3});
  const NetworkModel tight = network({11, 7, 4, 1}, {1, 1, 1, 1});
  const int T = 6;
  std::vector<StalenessTable> tables;
  std::vector<std::vector<int>> requests;
  double separate = 0.0;
  for (int i = 0; i < 3; ++i) {
    const PlantModel m = random_plant(rng, 2);
    const auto sol = riccati_backward(m, T);
    tables.push_back(staleness_cost_table(m, sol, 3));
    const DelayPlan plan = impassive_plan(m, slack, sol, T);
    requests.push_back(plan.links());
    separate += plan.predictedObjective / 3.0;
  }
  const std::vector<double> w(3, 1.0 / 3);
  AllocationResult di;
  byLoop(allocate_delay_insensitive(w, tables, slack, T, {}, &di));
  CHECK(di.objective == doctest::Approx(separate).epsilon(1e-9));

  AllocationResult diTight, awareTight;
  allocate_delay_insensitive(w, tables, tight, T, {}, &diTight);
  allocate_aware_impassive(requests, std::vector<Tolerance>(3, {3, 3}), tables, tight, {}, &awareTight);
  CHECK(diTight.objective <= awareTight.objective + 1e-9);
  checkAllocations(diTight.links, tight, nullptr, {});
}

TEST_CASE("delay-insensitive: one loop reduces to its own plan") {
  Rng rng(48);
  const PlantModel m = random_plant(rng, 2);
  const NetworkModel net = network({5, 3, 1}, {1, 1, 1});
  const auto sol = riccati_backward(m, 5);
  AllocationResult di;
  const auto out = byLoop(allocate_delay_insensitive({1.0}, {staleness_cost_table(m, sol, 2)}, net, 5, {}, &di));
  const DelayPlan plan = impassive_plan(m, net, sol, 5);
  CHECK(di.objective == doctest::Approx(plan.predictedObjective).epsilon(1e-9));
  CHECK(out[0] == plan.links());
}

TEST_CASE("delay-insensitive: suffixes of the k = 0 solution stay optimal") {
  Rng rng(49);
  const NetworkModel net = network({11, 7, 4, 1}, {1, 1, 2, 1});
  const int T = 6, N = 4;
  std::vector<StalenessTable> tables;
  for (int i = 0; i < N; ++i) {
    const PlantModel m = random_plant(rng, 2);
    tables.push_back(staleness_cost_table(m, riccati_backward(m, T), 3));
  }
  const std::vector<double> w = {0.1, 0.2, 0.3, 0.4};
  AllocationResult full;
  allocate_delay_insensitive(w, tables, net, T, {}, &full);
  const int k = T / 2;
  AllocationProgramSpec spec;
  spec.k = k;
  spec.T = T;
  spec.net = net;
  spec.weights = w;
  spec.toleranceWindows = false;
  for (const auto& t : tables) spec.tables.push_back(&t);
  for (const auto& l : full.links) spec.history.emplace_back(l.begin(), l.begin() + k);
  const AllocationResult again = solve_allocation(spec, {});
  std::vector<std::vector<int>> suffix;
  for (const auto& l : full.links) suffix.emplace_back(l.begin() + k, l.end());
  CHECK(again.objective == doctest::Approx(allocation_objective(spec, suffix)).epsilon(1e-9));
}

TEST_CASE("infeasible windows name the first bad step and link") {
  const NetworkModel net = network({3, 2, 1}, {1, 1, 3});
  const std::vector<std::vector<int>> requests = {{2, 0}, {2, 0}, {2, 0}};
  try {
    allocate_agnostic(PlanMode::Impassive, 0, requests, {}, net, std::vector<Tolerance>(3, {0, 1}), 2);
    FAIL("expected AllocationInfeasible");
  } catch (const AllocationInfeasible& e) {
    CHECK(e.time() == 1);
    CHECK(e.link() >= 0);
    CHECK(e.link() <= 1);
  }
}

TEST_CASE("large-fleet capacities below the sufficient bound are still packable") {
  PlantModel u;
  u.A = Matrix(2, 2);
  u.A << 1.01, 0.2, 0.2, 1.0;
  u.B = Matrix::Zero(2, 2);
  u.B(0, 0) = 0.1;
  u.B(1, 1) = 0.15;
  u.Q1 = u.Q2 = u.R = Matrix::Identity(2, 2);
  u.SigmaW = 1.5 * Matrix::Identity(2, 2);
  u = withDefaultPrior(u);
  PlantModel s = u;
  s.A << 0.5, 0.1, 0.6, 0.8;
  const NetworkModel net = network({25, 17, 11, 7, 4, 1}, std::vector<int>(6, 6));
  const int T = 20;
  const auto pu = impassive_plan(u, net, riccati_backward(u, T), T).links();
  const auto ps = impassive_plan(s, net, riccati_backward(s, T), T).links();
  AllocationProgramSpec spec;
  spec.T = T;
  spec.net = net;
  spec.weights.assign(20, 0.05);
  spec.tolerances.assign(20, {3, 3});
  spec.tables.assign(20, nullptr);
  spec.history.assign(20, {});
  for (int i = 0; i < 10; ++i) spec.requests.push_back(ps);
  for (int i = 0; i < 10; ++i) spec.requests.push_back(pu);
  CHECK(feasibility_bound(0, spec.tolerances, 20, 5) > 6);
  CHECK_NOTHROW(check_allocation_feasible(spec));
}

TEST_CASE("regime names round-trip") {
  for (auto r : {AllocationRegime::AwareImpassive, AllocationRegime::AwareReactive,
                 AllocationRegime::AgnosticImpassive, AllocationRegime::AgnosticReactive,
                 AllocationRegime::DelayInsensitive}) {
    CHECK(parse_regime(to_string(r)) == r);
  }
  CHECK_THROWS_AS(parse_regime("Aware"), ConfigError);
  CHECK(respects_tolerance(AllocationRegime::AgnosticReactive));
  CHECK_FALSE(respects_tolerance(AllocationRegime::DelayInsensitive));
}
