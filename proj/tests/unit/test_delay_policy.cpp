#include <doctest.h>

#include "ncs/delay_policy.hpp"
#include "ncs/errors.hpp"
#include "ncs/verify.hpp"
#include "../support/oracles.hpp"

using namespace ncs;

namespace {

PlantModel scalar(double a) {
  PlantModel m;
  m.A = Matrix::Constant(1, 1, a);
  m.B = Matrix::Constant(1, 1, 1.0);
  m.Q1 = m.Q2 = m.R = m.SigmaW = Matrix::Identity(1, 1);
  return withDefaultPrior(m);
}

NetworkModel net3(std::vector<double> prices) {
  NetworkModel net;
  net.D = static_cast<int>(prices.size()) - 1;
  net.prices = std::move(prices);
  net.capacities.assign(net.prices.size(), 1);
  return net;
}

void checkWellFormed(const DelayPlan& plan, int D) {
  for (const auto& s : plan.perStep) {
    CHECK(s.isOneHot());
    CHECK(static_cast<int>(s.oneHot.size()) == D + 1);
  }
}

}  // namespace

TEST_CASE("impassive_plan: single link is forced") {
  const PlantModel m = scalar(1.5);
  const NetworkModel net = net3({2.0});
  const auto sol = riccati_backward(m, 4);
  const DelayPlan plan = impassive_plan(m, net, sol, 4);
  CHECK(plan.links() == std::vector<int>{0, 0, 0, 0});
  checkWellFormed(plan, 0);
}

TEST_CASE("impassive_plan: A = 0 takes the cheapest link") {
  PlantModel m = scalar(0.0);
  const NetworkModel net = net3({9, 5, 2, 1});
  const auto sol = riccati_backward(m, 6);
  const DelayPlan plan = impassive_plan(m, net, sol, 6);
  CHECK(plan.links() == std::vector<int>(6, 3));
  CHECK(plan.predictedObjective == doctest::Approx(6.0));
}

TEST_CASE("impassive_plan: T=3, D=2, a=1.2 matches exhaustive search") {
  const PlantModel m = scalar(1.2);
  for (const auto& prices : {std::vector<double>{3, 1.5, 0.2}, std::vector<double>{0.9, 0.5, 0.0},
                             std::vector<double>{10, 5, 0}}) {
    const NetworkModel net = net3(prices);
    const auto sol = riccati_backward(m, 3);
    const auto table = staleness_cost_table(m, sol, 2);
    const auto best = oracle::best_plan({}, 3, table, prices);
    const DelayPlan plan = impassive_plan(m, net, sol, 3);
    CHECK(plan.predictedObjective == doctest::Approx(best.value).epsilon(1e-9));
    CHECK(oracle::sequence_cost(plan.links(), 0, table, prices) == doctest::Approx(best.value).epsilon(1e-9));
    checkWellFormed(plan, 2);
  }
}

TEST_CASE("reactive_plan: k = 0 reproduces the impassive plan") {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const PlantModel m = random_plant(rng, 2);
    const NetworkModel net = random_network(rng, 2);
    const auto sol = riccati_backward(m, 5);
    const DelayPlan a = impassive_plan(m, net, sol, 5);
    const DelayPlan b = reactive_plan(0, {}, m, net, sol, 5);
    CHECK(a.links() == b.links());
    CHECK(a.predictedObjective == doctest::Approx(b.predictedObjective).epsilon(1e-9));
  }
}

TEST_CASE("reactive_plan: history that followed the plan keeps the plan") {
  Rng rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    const PlantModel m = random_plant(rng, 2);
    const NetworkModel net = random_network(rng, 3);
    const int T = 7;
    const auto sol = riccati_backward(m, T);
    const auto full = impassive_plan(m, net, sol, T).links();
    for (int k = 1; k < T; ++k) {
      const std::vector<int> history(full.begin(), full.begin() + k);
      const DelayPlan re = reactive_plan(k, history, m, net, sol, T);
      CHECK(re.links() == std::vector<int>(full.begin() + k, full.end()));
      CHECK(re.start == k);
    }
  }
}

TEST_CASE("reactive_plan: forced deviation, D=1, T=2") {
  const PlantModel m = scalar(1.3);
  const NetworkModel net = net3({1.0, 0.0});
  const auto sol = riccati_backward(m, 2);
  const auto table = staleness_cost_table(m, sol, 1);
  const DelayPlan re = reactive_plan(1, std::vector<int>{1}, m, net, sol, 2);
  const auto best = oracle::best_plan({1}, 2, table, net.prices);
  CHECK(re.links() == best.links);
  CHECK(re.predictedObjective == doctest::Approx(best.value).epsilon(1e-9));
}

TEST_CASE("plans agree with exhaustive search for every encoding and history") {
  Rng rng(23);
  const FreshnessEncoding encodings[] = {FreshnessEncoding::Product, FreshnessEncoding::Dominance,
                                         FreshnessEncoding::Cumulative};
  for (int trial = 0; trial < 8; ++trial) {
    const PlantModel m = random_plant(rng, 2);
    const int D = 1 + trial % 3;
    const NetworkModel net = random_network(rng, D);
    const int T = 5;
    const auto sol = riccati_backward(m, T);
    const auto table = staleness_cost_table(m, sol, D);
    for (int k = 0; k < T; ++k) {
      std::vector<int> history;
      for (int s = 0; s < k; ++s) history.push_back(static_cast<int>(rng.nextU64() % (D + 1)));
      const auto best = oracle::best_plan(history, T, table, net.prices);
      const auto dp = plan_by_dynamic_programming(k, history, table, net, T);
      CHECK(dp.second == doctest::Approx(best.value).epsilon(1e-9));
      for (auto enc : encodings) {
        PlannerOptions opts;
        opts.reactiveEncoding = enc;
        opts.impassiveEncoding = enc;
        opts.dpHint = false;
        const DelayPlan plan = solve_plan(PlanMode::Reactive, k, history, table, net, T, opts);
        CHECK(plan.predictedObjective == doctest::Approx(best.value).epsilon(1e-9));
        CHECK(plan.links() == best.links);
        checkWellFormed(plan, D);
      }
    }
  }
}

TEST_CASE("impassive mode ignores the history") {
  Rng rng(24);
  const PlantModel m = random_plant(rng, 2);
  const NetworkModel net = random_network(rng, 2);
  const int T = 6;
  const auto sol = riccati_backward(m, T);
  const auto table = staleness_cost_table(m, sol, 2);
  const auto full = solve_plan(PlanMode::Impassive, 0, {}, table, net, T).links();
  for (int k = 1; k < T; ++k) {
    const std::vector<int> history(static_cast<std::size_t>(k), 2);
    const DelayPlan p = solve_plan(PlanMode::Impassive, k, history, table, net, T);
    CHECK(p.links() == std::vector<int>(full.begin() + k, full.end()));
  }
}

TEST_CASE("reactive objective never exceeds the offline suffix under the same history") {
  Rng rng(25);
  for (int trial = 0; trial < 15; ++trial) {
    const PlantModel m = random_plant(rng, 2);
    const int D = 2 + trial % 2;
    const NetworkModel net = random_network(rng, D);
    const int T = 8;
    const auto sol = riccati_backward(m, T);
    const auto table = staleness_cost_table(m, sol, D);
    const auto offline = impassive_plan(m, net, sol, T).links();
    for (int k = 1; k < T; ++k) {
      std::vector<int> links;
      for (int s = 0; s < k; ++s) links.push_back(static_cast<int>(rng.nextU64() % (D + 1)));
      const DelayPlan re = reactive_plan(k, links, m, net, sol, T);
      links.insert(links.end(), offline.begin() + k, offline.end());
      CHECK(re.predictedObjective <= plan_objective(links, k, table, net) + 1e-9);
    }
  }
}

TEST_CASE("freshest_staleness matches replay") {
  for (int D = 0; D <= 3; ++D) {
    for (int t = 0; t <= 4; ++t) {
      oracle::for_each_sequence(t + 1, D, [&](const std::vector<int>& links) {
        CHECK(freshest_staleness(links, t, D) == oracle::staleness_by_replay(links, t));
      });
    }
  }
}

TEST_CASE("plan inputs are validated") {
  const PlantModel m = scalar(1.1);
  const NetworkModel net = net3({2, 1});
  const auto sol = riccati_backward(m, 3);
  const auto table = staleness_cost_table(m, sol, 1);
  CHECK_THROWS_AS(solve_plan(PlanMode::Reactive, 3, std::vector<int>{0, 0, 0}, table, net, 3), ConfigError);
  CHECK_THROWS_AS(solve_plan(PlanMode::Reactive, 2, std::vector<int>{0}, table, net, 3), ConfigError);
  CHECK_THROWS_AS(solve_plan(PlanMode::Reactive, 1, std::vector<int>{5}, table, net, 3), ConfigError);
}
