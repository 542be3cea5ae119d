// Command-line front end: run, feasibility, verify, plot.

#include "ncs/errors.hpp"
#include "ncs/experiment.hpp"
#include "ncs/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iomanip>
#include <iostream>

namespace {

enum Exit { Ok = 0, Failure = 1, Infeasible = 2, BadConfig = 3, GapExceeded = 4 };

int cmdRun(const std::string& path, const std::string& outDir, int replications, bool svg) {
  ncs::ExperimentConfig cfg = ncs::load_config(path);
  if (!outDir.empty()) cfg.outputs.dir = outDir;
  if (replications > 0) cfg.replications = replications;
  if (svg) cfg.outputs.emitSvg = true;
  const ncs::RunSummary s = ncs::run_experiment(cfg);

  std::cout << std::fixed << std::setprecision(4);
  std::cout << "regime                 cost (se)              social (se)            analytic   dev(T-1)\n";
  for (const auto& m : s.result.regimes) {
    std::cout << std::left << std::setw(22) << m.regime << std::right << std::setw(11) << m.meanCost.mean
              << " (" << std::setw(8) << m.meanCost.stdError << ")" << std::setw(11) << m.socialCost.mean
              << " (" << std::setw(8) << m.socialCost.stdError << ")" << std::setw(11)
              << m.analyticMeanCost << std::setw(10) << (m.avgDeviation.empty() ? 0.0 : m.avgDeviation.back())
              << (m.certified ? "" : "  [time limit]") << '\n';
  }
  for (const auto& f : s.files) std::cout << "wrote " << f.string() << '\n';
  if (s.gapExceeded) {
    std::cerr << "solver stopped at its time limit with relative gap " << s.maxGap << " (threshold "
              << cfg.solver.maxGap << ")\n";
    return GapExceeded;
  }
  return Ok;
}

int cmdFeasibility(const std::string& path) {
  const ncs::ExperimentConfig cfg = ncs::load_config(path);
  const ncs::Scenario sc = ncs::to_scenario(cfg);
  const auto tol = sc.tolerances();
  const int N = sc.numLoops();
  bool sufficient = true;
  std::cout << "link  capacity  sufficient bound\n";
  for (int d = 0; d <= sc.net.D; ++d) {
    const int bound = ncs::feasibility_bound(d, tol, N, sc.net.D);
    const bool ok = sc.net.capacities[d] >= bound;
    sufficient = sufficient && ok;
    std::cout << std::setw(4) << d << std::setw(10) << sc.net.capacities[d] << std::setw(18) << bound
              << (ok ? "" : "  (below)") << '\n';
  }
  std::cout << (sufficient ? "sufficient condition holds\n" : "sufficient condition does not hold\n");

  // Exact check on the offline requests of this config.
  ncs::AllocationProgramSpec spec;
  spec.T = sc.T;
  spec.net = sc.net;
  spec.weights = sc.weights;
  spec.tolerances = tol;
  spec.tables.assign(static_cast<std::size_t>(N), nullptr);
  for (const auto& loop : sc.loops) {
    spec.requests.push_back(
        ncs::solve_plan(ncs::PlanMode::Impassive, 0, {}, loop.table, sc.net, sc.T, sc.planner).links());
  }
  spec.history.assign(static_cast<std::size_t>(N), {});
  ncs::check_allocation_feasible(spec);
  std::cout << "offline requests can be packed at every step\n";
  return Ok;
}

int cmdVerify(std::uint64_t seed) {
  bool ok = true;
  for (const auto& r : ncs::run_all_verifications(seed)) {
    std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << r.cases - r.failures << "/"
              << r.cases << " in " << std::setprecision(3) << r.seconds << " s\n";
    for (const auto& f : r.firstFailures) std::cout << "    " << f << '\n';
    ok = ok && r.passed();
  }
  return ok ? Ok : Failure;
}

int cmdPlot(const std::vector<std::string>& csvs) {
  for (const auto& c : csvs) {
    std::filesystem::path svg(c);
    svg.replace_extension(".svg");
    ncs::plot_csv(c, svg);
    std::cout << "wrote " << svg.string() << '\n';
  }
  return Ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-design simulator for control loops sharing latency-tiered links"};
  app.require_subcommand(1);

  std::string config, outDir;
  int replications = 0;
  bool svg = false;
  auto* run = app.add_subcommand("run", "Plan, simulate and write CSV outputs");
  run->add_option("config", config, "JSON experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--out", outDir, "Output directory (overrides outputs.dir)");
  run->add_option("--replications", replications, "Override the replication count")->check(CLI::PositiveNumber);
  run->add_flag("--svg", svg, "Also draw SVG charts");

  auto* feas = app.add_subcommand("feasibility", "Print the sufficient capacity bound per link");
  feas->add_option("config", config, "JSON experiment config")->required()->check(CLI::ExistingFile);

  std::uint64_t seed = 7;
  auto* verify = app.add_subcommand("verify", "Run the brute-force self-checks");
  verify->add_option("--seed", seed, "Seed for the random instances");

  std::vector<std::string> csvs;
  auto* plot = app.add_subcommand("plot", "Draw an SVG line chart next to each CSV");
  plot->add_option("csv", csvs, "CSV files with x in the first column")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? Ok : BadConfig;
  }

  try {
    if (*run) return cmdRun(config, outDir, replications, svg);
    if (*feas) return cmdFeasibility(config);
    if (*verify) return cmdVerify(seed);
    if (*plot) return cmdPlot(csvs);
  } catch (const ncs::AllocationInfeasible& e) {
    std::cerr << e.what() << '\n';
    return Infeasible;
  } catch (const ncs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return BadConfig;
  } catch (const ncs::SolverGapExceeded& e) {
    std::cerr << "solver time limit: " << e.what() << '\n';
    return GapExceeded;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Failure;
  }
  return Ok;
}
