#include <doctest.h>

#include "ncs/errors.hpp"
#include "ncs/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ncs;

namespace {

const char* kBase = R"({
  "horizon": 5,
  "replications": 4,
  "seed": 11,
  "regimes": ["AwareImpassive", "DelayInsensitive"],
  "network": {"D": 2, "prices": [5, 2, 1], "capacities": [1, 1, 2]},
  "subsystems": [
    {"name": "u", "repeat": 2, "A": [[1.01, 0.2], [0.2, 1.0]], "B": [[0.1, 0], [0, 0.15]],
     "Q1": 1, "R": 1, "SigmaW": 1.5, "alpha": 2, "beta": 2},
    {"name": "s", "A": [[0.5, 0.1], [0.6, 0.8]], "B": [[0.1, 0], [0, 0.15]],
     "Q1": 1, "Q2": [[2, 0], [0, 2]], "R": 1, "SigmaW": 1.5, "SigmaX0": 0.5, "meanX0": [1, -1],
     "alpha": 2, "beta": 2}
  ],
  "solver": {"timeLimitSeconds": 5, "freshnessEncoding": "dominance"}
})";

std::string replaced(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

std::filesystem::path scratchDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ncs_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config: parses a full document") {
  const ExperimentConfig cfg = parse_config(kBase);
  CHECK(cfg.horizon == 5);
  CHECK(cfg.replications == 4);
  CHECK(cfg.seed == 11);
  CHECK(cfg.regimes.size() == 2);
  REQUIRE(cfg.subsystems.size() == 3);
  CHECK(cfg.groups == std::vector<std::string>{"u", "u", "s"});
  CHECK(cfg.subsystems[0].Q2 == Matrix::Identity(2, 2));
  CHECK(cfg.subsystems[2].Q2 == 2.0 * Matrix::Identity(2, 2));
  CHECK(cfg.subsystems[0].SigmaX0 == cfg.subsystems[0].SigmaW);
  CHECK(cfg.subsystems[2].SigmaX0 == 0.5 * Matrix::Identity(2, 2));
  CHECK(cfg.subsystems[2].meanX0[1] == -1.0);
  CHECK(cfg.subsystems[2].index == 2);
  CHECK(cfg.solver.timeLimitSeconds == 5.0);
  REQUIRE(cfg.solver.freshnessEncoding);
  CHECK(*cfg.solver.freshnessEncoding == FreshnessEncoding::Dominance);
  const Scenario sc = to_scenario(cfg);
  CHECK(sc.allocator.encoding == FreshnessEncoding::Dominance);
  CHECK(sc.allocator.solver.largeInstanceTimeLimit == 5.0);
  CHECK(sc.weights.size() == 3);
}

TEST_CASE("config: integer capacity applies to every link") {
  const auto cfg = parse_config(replaced(kBase, "\"capacities\": [1, 1, 2]", "\"capacities\": 2"));
  CHECK(cfg.network.capacities == std::vector<int>{2, 2, 2});
}

TEST_CASE("config: errors name the offending field") {
  auto fails = [](const std::string& text, const std::string& needle) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
      return;
    }
    FAIL("no ConfigError for " << needle);
  };
  fails("{not json", "JSON");
  fails(replaced(kBase, "\"seed\": 11,", "\"seed\": 11, \"colour\": 1,"), "colour");
  fails(replaced(kBase, "\"horizon\": 5,", ""), "horizon");
  fails(replaced(kBase, "\"AwareImpassive\",", "\"Aware\","), "Aware");
  fails(replaced(kBase, "[5, 2, 1]", "[5, 5, 1]"), "decreasing");
  fails(replaced(kBase, "\"Q1\": 1, \"R\": 1, \"SigmaW\": 1.5, \"alpha\": 2",
                 "\"Q1\": [[1, 2], [0, 1]], \"R\": 1, \"SigmaW\": 1.5, \"alpha\": 2"),
        "symmetric");
  fails(replaced(kBase, "\"alpha\": 2, \"beta\": 2}\n  ]", "\"alpha\": 2, \"beta\": 3}\n  ]"), "tolerance");
  fails(replaced(kBase, "[1, 1, 2]", "[1, 1, 0]"), "capacity");
  fails(replaced(kBase, "\"seed\": 11,", "\"seed\": 11, \"weights\": [0.5, 0.5],"), "weight");
  fails(replaced(kBase, "\"seed\": 11,", "\"seed\": 11, \"delayControl\": {\"futureAllocations\": \"pessimistic\"},"),
        "optimistic");
  fails(replaced(kBase, "\"dominance\"", "\"sparse\""), "sparse");
  fails(replaced(kBase, "\"B\": [[0.1, 0], [0, 0.15]],\n     \"Q1\": 1, \"Q2\"",
                 "\"B\": [[0.1, 0, 1]],\n     \"Q1\": 1, \"Q2\""),
        "subsystems[1]");
}

TEST_CASE("config: weights validated through the scenario") {
  const auto cfg = parse_config(replaced(kBase, "\"seed\": 11,", "\"seed\": 11, \"weights\": [0.2, 0.2, 0.2],"));
  CHECK_THROWS_AS(to_scenario(cfg), ConfigError);
  const auto ok = parse_config(replaced(kBase, "\"seed\": 11,", "\"seed\": 11, \"weights\": [0.2, 0.3, 0.5],"));
  CHECK(to_scenario(ok).weights == std::vector<double>{0.2, 0.3, 0.5});
}

TEST_CASE("run_experiment: writes the four CSV files") {
  ExperimentConfig cfg = parse_config(kBase);
  const auto dir = scratchDir("run");
  cfg.outputs.dir = dir.string();
  cfg.outputs.emitSvg = true;
  cfg.outputs.traceReplications = 2;
  const RunSummary s = run_experiment(cfg);
  CHECK_FALSE(s.gapExceeded);
  for (const char* f : {"trace.csv", "metrics.csv", "utilization.csv", "deviation.csv", "cost.svg",
                        "utilization.svg", "deviation.svg"}) {
    CHECK_MESSAGE(std::filesystem::exists(dir / f), f);
  }
  auto lines = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  };
  // Header, then per regime: 2 replications x 3 loops x (5 steps + terminal row).
  CHECK(lines(dir / "trace.csv").size() == 1 + 2 * 2 * 3 * 6);
  const auto metrics = lines(dir / "metrics.csv");
  CHECK(metrics.size() == 1 + 2 * (1 + 3));
  CHECK(metrics[1].rfind("AwareImpassive,fleet,", 0) == 0);
  const auto util = lines(dir / "utilization.csv");
  CHECK(util.size() == 1 + 5);
  CHECK(util[0] == "t,AwareImpassive/l0,AwareImpassive/l1,AwareImpassive/l2,DelayInsensitive/l0,"
                   "DelayInsensitive/l1,DelayInsensitive/l2");
  CHECK(lines(dir / "deviation.csv").size() == 1 + 5);
  std::filesystem::remove_all(dir);
}

TEST_CASE("run_experiment: one regime, one metrics block") {
  ExperimentConfig cfg = parse_config(kBase);
  cfg.regimes = {AllocationRegime::AgnosticReactive};
  const auto dir = scratchDir("one");
  cfg.outputs.dir = dir.string();
  const RunSummary s = run_experiment(cfg);
  CHECK(s.result.regimes.size() == 1);
  std::ifstream in(dir / "metrics.csv");
  int fleetRows = 0;
  for (std::string l; std::getline(in, l);) fleetRows += l.find(",fleet,") != std::string::npos;
  CHECK(fleetRows == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("plot_csv: draws one polyline per series") {
  const auto dir = scratchDir("plot");
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "d.csv");
    out << "t,a,b\n0,1,2\n1,2,1\n2,3,0\n";
  }
  plot_csv(dir / "d.csv", dir / "d.svg");
  std::ifstream in(dir / "d.svg");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string svg = ss.str();
  std::size_t count = 0;
  for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++count;
  CHECK(count == 2);
  CHECK_THROWS_AS(plot_csv(dir / "missing.csv", dir / "x.svg"), ConfigError);
  std::filesystem::remove_all(dir);
}
