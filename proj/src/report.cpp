#include "ncs/experiment.hpp"

#include "ncs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace ncs {

namespace fs = std::filesystem;

namespace {

std::ofstream openOut(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << std::setprecision(10);
  return out;
}

std::string joinVector(const Vector& v) {
  std::ostringstream ss;
  ss << std::setprecision(10);
  // Adding 0.0 turns -0 into 0.
  for (Eigen::Index i = 0; i < v.size(); ++i) ss << (i ? ";" : "") << v[i] + 0.0;
  return ss.str();
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

struct Series {
  std::string name;
  std::vector<double> x, y;
};

std::string escapeXml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

void lineChart(const fs::path& path, const std::string& title, const std::string& xLabel,
               const std::vector<Series>& series) {
  const double W = 760, H = 420, left = 60, right = 200, top = 40, bottom = 50;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = 0.0, ymax = -xmin;
  for (const auto& s : series) {
    for (double x : s.x) xmin = std::min(xmin, x), xmax = std::max(xmax, x);
    for (double y : s.y) ymin = std::min(ymin, y), ymax = std::max(ymax, y);
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (W - left - right); };
  auto py = [&](double y) { return H - bottom - (y - ymin) / (ymax - ymin) * (H - top - bottom); };
  auto out = openOut(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escapeXml(title) << "</text>\n"
      << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\""
      << H - bottom << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = ymin + (ymax - ymin) * i / 4.0;
    out << "<text x=\"" << left - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">"
        << std::setprecision(3) << y << "</text>\n";
    const double x = xmin + (xmax - xmin) * i / 4.0;
    out << "<text x=\"" << px(x) << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\">" << x
        << "</text>\n";
  }
  out << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
      << escapeXml(xLabel) << "</text>\n"
      << std::setprecision(6);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < series[k].x.size(); ++i) {
      out << px(series[k].x[i]) << ',' << py(series[k].y[i]) << ' ';
    }
    out << "\"/>\n";
    const double ly = top + 16.0 * k;
    out << "<line x1=\"" << W - right + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - right + 32
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << W - right + 38 << "\" y=\"" << ly + 4 << "\">" << escapeXml(series[k].name)
        << "</text>\n";
  }
  out << "</svg>\n";
}

std::vector<std::string> splitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

void write_trace_csv(const fs::path& path, const std::vector<EpisodeTrace>& traces) {
  auto out = openOut(path);
  out << "regime,replication,seed,k,loop,x,xhat,u,requested,allocated,stage_cost,requested_price,"
         "allocated_price,terminal_cost\n";
  for (const auto& tr : traces) {
    for (std::size_t i = 0; i < tr.steps.size(); ++i) {
      for (std::size_t k = 0; k < tr.steps[i].size(); ++k) {
        const auto& r = tr.steps[i][k];
        out << tr.regime << ',' << tr.replication << ',' << tr.seed << ',' << k << ',' << i << ','
            << joinVector(r.x) << ',' << joinVector(r.xhat) << ',' << joinVector(r.u) << ','
            << r.requested << ',' << r.allocated << ',' << r.stageCost << ',' << r.requestedPrice
            << ',' << r.allocatedPrice << ",\n";
      }
      if (i < tr.terminalCost.size()) {
        out << tr.regime << ',' << tr.replication << ',' << tr.seed << ',' << tr.T << ',' << i << ','
            << joinVector(tr.terminalState[i]) << ",,,,,,,," << tr.terminalCost[i] << '\n';
      }
    }
  }
}

void write_metrics_csv(const fs::path& path, const ExperimentResult& result) {
  auto out = openOut(path);
  out << "regime,scope,cost_mean,cost_se,social_mean,social_se,analytic_cost,final_deviation,"
         "max_solver_gap,certified\n";
  for (const auto& m : result.regimes) {
    const double gap = m.solverGap.empty() ? 0.0 : *std::max_element(m.solverGap.begin(), m.solverGap.end());
    out << m.regime << ",fleet," << m.meanCost.mean << ',' << m.meanCost.stdError << ','
        << m.socialCost.mean << ',' << m.socialCost.stdError << ',' << m.analyticMeanCost << ','
        << (m.avgDeviation.empty() ? 0.0 : m.avgDeviation.back()) << ',' << gap << ','
        << (m.certified ? 1 : 0) << '\n';
    for (std::size_t i = 0; i < m.localCosts.size(); ++i) {
      out << m.regime << ",loop" << i << ',' << m.localCosts[i].mean << ',' << m.localCosts[i].stdError
          << ",,,," << (m.loopDeviation[i].empty() ? 0.0 : m.loopDeviation[i].back()) << ",,\n";
    }
  }
}

void write_utilization_csv(const fs::path& path, const ExperimentResult& result, int D) {
  auto out = openOut(path);
  out << 't';
  for (const auto& m : result.regimes) {
    for (int d = 0; d <= D; ++d) out << ',' << m.regime << "/l" << d;
  }
  out << '\n';
  const std::size_t T = result.regimes.empty() ? 0 : result.regimes.front().utilization.front().size();
  for (std::size_t t = 0; t < T; ++t) {
    out << t;
    for (const auto& m : result.regimes) {
      for (int d = 0; d <= D; ++d) out << ',' << m.utilization[d][t];
    }
    out << '\n';
  }
}

void write_deviation_csv(const fs::path& path, const ExperimentResult& result) {
  auto out = openOut(path);
  out << 't';
  for (const auto& m : result.regimes) out << ',' << m.regime;
  for (const auto& m : result.regimes) {
    for (std::size_t i = 0; i < m.loopDeviation.size(); ++i) out << ',' << m.regime << "/loop" << i;
  }
  out << '\n';
  const std::size_t T = result.regimes.empty() ? 0 : result.regimes.front().avgDeviation.size();
  for (std::size_t t = 0; t < T; ++t) {
    out << t;
    for (const auto& m : result.regimes) out << ',' << m.avgDeviation[t];
    for (const auto& m : result.regimes) {
      for (const auto& dev : m.loopDeviation) out << ',' << dev[t];
    }
    out << '\n';
  }
}

void plot_csv(const fs::path& csv, const fs::path& svg) {
  std::ifstream in(csv);
  if (!in) throw ConfigError("cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(csv.string() + " is empty");
  const auto header = splitCsvLine(line);
  if (header.size() < 2) throw ConfigError(csv.string() + ": need an x column and at least one series");
  std::vector<Series> series(header.size() - 1);
  for (std::size_t c = 1; c < header.size(); ++c) series[c - 1].name = header[c];
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = splitCsvLine(line);
    double x;
    try {
      x = std::stod(cells.at(0));
    } catch (const std::exception&) {
      throw ConfigError(csv.string() + ": first column must be numeric");
    }
    for (std::size_t c = 1; c < header.size() && c < cells.size(); ++c) {
      try {
        const double y = std::stod(cells[c]);
        series[c - 1].x.push_back(x);
        series[c - 1].y.push_back(y);
      } catch (const std::exception&) {
        // non-numeric cell: leave a gap in that series
      }
    }
  }
  lineChart(svg, csv.stem().string(), header[0], series);
}

void write_cost_svg(const fs::path& path, const ExperimentResult& result) {
  const double W = 760, H = 420, left = 60, bottom = 90, top = 40;
  double ymax = 0.0;
  for (const auto& m : result.regimes) ymax = std::max({ymax, m.meanCost.mean, m.socialCost.mean});
  if (ymax <= 0.0) ymax = 1.0;
  const double slot = (W - left - 20) / std::max<std::size_t>(1, result.regimes.size());
  auto out = openOut(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << "Mean cost (blue) and social cost (red) per regime</text>\n";
  for (std::size_t r = 0; r < result.regimes.size(); ++r) {
    const auto& m = result.regimes[r];
    const double x0 = left + slot * r + slot * 0.15;
    const double bw = slot * 0.3;
    const double values[2] = {m.meanCost.mean, m.socialCost.mean};
    for (int b = 0; b < 2; ++b) {
      const double h = std::max(0.0, values[b]) / ymax * (H - top - bottom);
      out << "<rect x=\"" << x0 + b * bw << "\" y=\"" << H - bottom - h << "\" width=\"" << bw * 0.9
          << "\" height=\"" << h << "\" fill=\"" << kPalette[b == 0 ? 0 : 1] << "\"/>\n";
    }
    out << "<text x=\"" << x0 + bw << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\">"
        << escapeXml(m.regime) << "</text>\n"
        << "<text x=\"" << x0 + bw << "\" y=\"" << H - bottom + 32 << "\" text-anchor=\"middle\">"
        << std::setprecision(4) << m.meanCost.mean << " / " << m.socialCost.mean << "</text>\n";
  }
  out << "</svg>\n";
}

RunSummary run_experiment(const ExperimentConfig& cfg) {
  const Scenario scenario = to_scenario(cfg);
  ExperimentOptions opts;
  opts.replications = cfg.replications;
  opts.seed = cfg.seed;
  opts.keepTraces = cfg.outputs.traceReplications;
  RunSummary summary;
  summary.result = run_regimes(scenario, cfg.regimes, opts);
  for (const auto& m : summary.result.regimes) {
    for (double g : m.solverGap) summary.maxGap = std::max(summary.maxGap, g);
  }
  for (double g : summary.result.shadow.solverGap) summary.maxGap = std::max(summary.maxGap, g);
  summary.gapExceeded = summary.maxGap > cfg.solver.maxGap;

  if (!cfg.outputs.dir.empty()) {
    const fs::path dir(cfg.outputs.dir);
    fs::create_directories(dir);
    std::vector<EpisodeTrace> traces;
    for (const auto& kept : summary.result.keptTraces) traces.insert(traces.end(), kept.begin(), kept.end());
    write_trace_csv(dir / "trace.csv", traces);
    write_metrics_csv(dir / "metrics.csv", summary.result);
    write_utilization_csv(dir / "utilization.csv", summary.result, cfg.network.D);
    write_deviation_csv(dir / "deviation.csv", summary.result);
    summary.files = {dir / "trace.csv", dir / "metrics.csv", dir / "utilization.csv",
                     dir / "deviation.csv"};
    if (cfg.outputs.emitSvg) {
      write_cost_svg(dir / "cost.svg", summary.result);
      plot_csv(dir / "utilization.csv", dir / "utilization.svg");
      plot_csv(dir / "deviation.csv", dir / "deviation.svg");
      summary.files.insert(summary.files.end(),
                           {dir / "cost.svg", dir / "utilization.svg", dir / "deviation.svg"});
    }
  }
  return summary;
}

}  // namespace ncs
