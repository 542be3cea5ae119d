#include <doctest.h>

#include "ncs/errors.hpp"
#include "ncs/milp.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

using namespace ncs;

namespace {

MilpProblem randomProblem(std::mt19937_64& gen, int n, int rows, bool withEq) {
  std::uniform_int_distribution<int> coef(-5, 5);
  std::uniform_int_distribution<int> cost(-10, 10);
  MilpProblem p;
  for (int j = 0; j < n; ++j) p.addVar(cost(gen));
  for (int r = 0; r < rows; ++r) {
    Terms t;
    for (int j = 0; j < n; ++j) {
      if (gen() % 2) t.emplace_back(j, coef(gen));
    }
    const double rhs = std::uniform_int_distribution<int>(-2, 6)(gen);
    if (withEq && r == 0) {
      p.addEq(t, std::max(0.0, rhs));
    } else {
      p.addLe(t, rhs);
    }
  }
  return p;
}

}  // namespace

TEST_CASE("milp: two-variable packing picks (1,0)") {
  MilpProblem p;
  p.addVar(-1);
  p.addVar(-1);
  p.addLe({{0, 1}, {1, 1}}, 1);
  const auto s = solve(p);
  CHECK(s.status == MilpStatus::Optimal);
  CHECK(s.objectiveValue == doctest::Approx(-1));
  CHECK(s.assignment == std::vector<std::uint8_t>{1, 0});
  CHECK(verify_against_enumeration(p));
}

TEST_CASE("milp: nonnegative costs without rows give zero") {
  MilpProblem p;
  for (double c : {3.0, 0.0, 1.5}) p.addVar(c);
  const auto s = solve(p);
  CHECK(s.status == MilpStatus::Optimal);
  CHECK(s.assignment == std::vector<std::uint8_t>{0, 0, 0});
  CHECK(s.objectiveValue == 0.0);
  CHECK(verify_against_enumeration(p));
}

TEST_CASE("milp: contradictory equalities are infeasible") {
  MilpProblem p;
  p.addVar(1);
  p.addEq({{0, 1}}, 1);
  p.addEq({{0, 1}}, 0);
  CHECK(solve(p).status == MilpStatus::Infeasible);
  CHECK(verify_against_enumeration(p));
}

TEST_CASE("milp: random programs agree with enumeration") {
  std::mt19937_64 gen(7);
  int feasible = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = randomProblem(gen, 10, 6, trial % 3 == 0);
    INFO("trial " << trial);
    CHECK(verify_against_enumeration(p));
    feasible += solve(p).status == MilpStatus::Optimal;
  }
  CHECK(feasible > 50);
}

TEST_CASE("milp: heavy ties resolve to the lexicographically smallest optimum") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 100; ++trial) {
    MilpProblem p;
    const int n = 12;
    for (int j = 0; j < n; ++j) p.addVar(static_cast<double>(gen() % 3) - 1.0);
    for (int r = 0; r < 4; ++r) {
      Terms t;
      for (int j = 0; j < n; ++j) {
        if (gen() % 3 == 0) t.emplace_back(j, 1.0);
      }
      p.addLe(t, 1 + gen() % 2);
    }
    INFO("trial " << trial);
    CHECK(verify_against_enumeration(p));
  }
}

TEST_CASE("milp: random contradictory equality families are infeasible") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 30; ++trial) {
    MilpProblem p;
    for (int j = 0; j < 8; ++j) p.addVar(static_cast<double>(gen() % 7) - 3.0);
    Terms t;
    for (int j = 0; j < 8; ++j) {
      if (gen() % 2) t.emplace_back(j, 1.0);
    }
    if (t.empty()) t.emplace_back(0, 1.0);
    p.addEq(t, 1);
    p.addEq(t, 2 + static_cast<double>(t.size()));
    CHECK(solve(p).status == MilpStatus::Infeasible);
    CHECK(verify_against_enumeration(p));
  }
}

TEST_CASE("milp: identical problems give identical answers") {
  std::mt19937_64 gen(5);
  const auto p = randomProblem(gen, 10, 5, false);
  const auto a = solve(p);
  const auto b = solve(p);
  CHECK(a.assignment == b.assignment);
  CHECK(a.objectiveValue == b.objectiveValue);
  CHECK(a.nodes == b.nodes);
}

TEST_CASE("milp: node bounds never exceed integer values found below them") {
  std::mt19937_64 gen(19);
  for (int trial = 0; trial < 40; ++trial) {
    const auto p = randomProblem(gen, 10, 6, false);
    SolverOptions opts;
    opts.recordNodeLog = true;
    const auto s = solve(p, opts);
    std::vector<int> parent(s.nodeLog.size() + 1, -1);
    std::vector<double> bound(s.nodeLog.size() + 1, 0.0);
    std::vector<bool> feasible(s.nodeLog.size() + 1, false);
    for (const auto& rec : s.nodeLog) {
      parent[rec.id] = rec.parent;
      bound[rec.id] = rec.lpBound;
      feasible[rec.id] = !rec.lpInfeasible;
    }
    for (const auto& rec : s.nodeLog) {
      if (!rec.integerValue) continue;
      for (int a = rec.id; a >= 0; a = parent[a]) {
        if (feasible[a]) CHECK(bound[a] <= *rec.integerValue + 1e-9);
      }
    }
  }
}

TEST_CASE("milp: hint is used as the starting incumbent") {
  std::mt19937_64 gen(23);
  const auto p = randomProblem(gen, 10, 4, false);
  const auto plain = solve(p);
  REQUIRE(plain.status == MilpStatus::Optimal);
  SolverOptions opts;
  opts.hint = plain.assignment;
  const auto hinted = solve(p, opts);
  CHECK(hinted.assignment == plain.assignment);
  CHECK(hinted.nodes <= plain.nodes);
}

TEST_CASE("milp: product linearization is exact") {
  for (int k = 1; k <= 4; ++k) {
    for (int mask = 0; mask < (1 << k); ++mask) {
      for (int comp = 0; comp < (1 << k); ++comp) {
        MilpProblem p;
        const int z = p.addVar(0.0);
        std::vector<ProductFactor> factors;
        int product = 1;
        for (int f = 0; f < k; ++f) {
          const int v = p.addVar(0.0);
          const bool value = (mask >> f) & 1;
          const bool complemented = (comp >> f) & 1;
          p.addEq({{v, 1}}, value);
          factors.push_back({v, complemented});
          product *= complemented ? 1 - value : value;
        }
        for (auto& row : linearize_binary_product(z, factors)) p.leConstraints.push_back(row);
        const auto s = solve_by_enumeration(p);
        REQUIRE(s.status == MilpStatus::Optimal);
        CHECK(s.assignment[0] == product);
        // z has zero cost, so check the other value is infeasible too.
        auto flipped = s.assignment;
        flipped[0] ^= 1;
        CHECK_FALSE(p.isFeasible(flipped));
      }
    }
  }
}

TEST_CASE("milp: malformed problems are configuration errors") {
  MilpProblem p;
  p.addVar(1.0);
  p.addLe({{3, 1.0}}, 1);
  CHECK_THROWS_AS(solve(p), ConfigError);
  MilpProblem big;
  for (int j = 0; j < 23; ++j) big.addVar(1.0);
  CHECK_THROWS_AS(solve_by_enumeration(big), ConfigError);
}

TEST_CASE("milp: LP text dump lists every section") {
  MilpProblem p;
  p.addVar(-1, "x_a");
  p.addVar(2, "x_b");
  p.addEq({{0, 1}, {1, 1}}, 1);
  p.addLe({{0, 1}}, 1);
  std::ostringstream os;
  write_lp_format(p, os);
  const auto s = os.str();
  CHECK(s.find("Minimize") != std::string::npos);
  CHECK(s.find("Subject To") != std::string::npos);
  CHECK(s.find(" - 1 x_a + 2 x_b") != std::string::npos);
  CHECK(s.find("Binary") != std::string::npos);
  CHECK(s.find("End") != std::string::npos);
}

TEST_CASE("milp: time limit keeps the hint and reports the gap") {
  std::mt19937_64 gen(17);
  MilpProblem p = randomProblem(gen, 40, 30, false);
  for (auto& row : p.leConstraints) row.rhs = std::max(row.rhs, 0.0);
  p.timeLimit = 1e-9;
  std::vector<std::uint8_t> zero(40, 0);
  REQUIRE(p.isFeasible(zero));
  SolverOptions opts;
  opts.hint = zero;
  const auto s = solve(p, opts);
  CHECK(s.status == MilpStatus::TimeLimitIncumbent);
  CHECK(s.assignment == zero);
  CHECK(std::isinf(s.gap));

  opts.lowerBound = -4.0;
  const auto b = solve(p, opts);
  CHECK(b.gap == doctest::Approx(4.0));

  SolverOptions bare;
  CHECK_THROWS_AS(solve(p, bare), SolverGapExceeded);
}

TEST_CASE("milp: a slow relaxation is cut off at the deadline") {
  std::mt19937_64 gen(5);
  MilpProblem p = randomProblem(gen, 400, 400, false);
  for (auto& row : p.leConstraints) row.rhs = std::max(row.rhs, 0.0);
  std::vector<std::uint8_t> zero(400, 0);
  SolverOptions opts;
  opts.hint = zero;
  p.timeLimit = 0.02;
  const auto start = std::chrono::steady_clock::now();
  const auto s = solve(p, opts);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(s.status == MilpStatus::TimeLimitIncumbent);
  CHECK(seconds < 0.5);
  CHECK(s.gap >= 0.0);
}
