#include "ncs/experiment.hpp"

#include "ncs/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace ncs {

namespace {

using nlohmann::json;

void rejectUnknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError(where + ": unknown field '" + key + "'");
  }
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  return obj.at(key);
}

template <typename T>
T get(const json& v, const std::string& where) {
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

// A matrix is a list of rows, or a number meaning that multiple of the identity.
Matrix matrixField(const json& v, int identityDim, const std::string& where) {
  if (v.is_number()) {
    if (identityDim <= 0) throw ConfigError(where + ": scalar shorthand needs a known dimension");
    return v.get<double>() * Matrix::Identity(identityDim, identityDim);
  }
  if (!v.is_array() || v.empty() || !v.front().is_array()) {
    throw ConfigError(where + ": expected a list of rows or a number");
  }
  const auto rows = static_cast<Eigen::Index>(v.size());
  const auto cols = static_cast<Eigen::Index>(v.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = v[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(where + ": rows have different lengths");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get<double>(row[static_cast<std::size_t>(c)], where);
  }
  return m;
}

Vector vectorField(const json& v, int dim, const std::string& where) {
  if (v.is_number()) return Vector::Constant(dim, v.get<double>());
  const auto values = get<std::vector<double>>(v, where);
  if (static_cast<int>(values.size()) != dim) throw ConfigError(where + ": wrong length");
  return Eigen::Map<const Vector>(values.data(), dim);
}

PlantModel parsePlant(const json& s, const std::string& where) {
  PlantModel m;
  m.A = matrixField(require(s, "A", where), 0, where + ".A");
  const int n = static_cast<int>(m.A.rows());
  m.B = matrixField(require(s, "B", where), n, where + ".B");
  const int inputs = static_cast<int>(m.B.cols());
  m.Q1 = matrixField(require(s, "Q1", where), n, where + ".Q1");
  m.Q2 = s.contains("Q2") ? matrixField(s.at("Q2"), n, where + ".Q2") : m.Q1;
  m.R = matrixField(require(s, "R", where), inputs, where + ".R");
  m.SigmaW = matrixField(require(s, "SigmaW", where), n, where + ".SigmaW");
  m = withDefaultPrior(m);
  if (s.contains("SigmaX0")) m.SigmaX0 = matrixField(s.at("SigmaX0"), n, where + ".SigmaX0");
  if (s.contains("meanX0")) m.meanX0 = vectorField(s.at("meanX0"), n, where + ".meanX0");
  m.alpha = get<int>(require(s, "alpha", where), where + ".alpha");
  m.beta = get<int>(require(s, "beta", where), where + ".beta");
  try {
    validate(m);
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return m;
}

}  // namespace

ExperimentConfig parse_config(const std::string& jsonText) {
  json doc;
  try {
    doc = json::parse(jsonText);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  rejectUnknown(doc,
                {"horizon", "replications", "seed", "regimes", "network", "subsystems", "weights",
                 "delayControl", "solver", "outputs", "description"},
                "config");
  ExperimentConfig cfg;
  cfg.horizon = get<int>(require(doc, "horizon", "config"), "horizon");
  if (cfg.horizon < 1) throw ConfigError("horizon must be at least 1");
  cfg.replications = get<int>(require(doc, "replications", "config"), "replications");
  if (cfg.replications < 1) throw ConfigError("replications must be at least 1");
  cfg.seed = doc.contains("seed") ? get<std::uint64_t>(doc.at("seed"), "seed") : 1;

  for (const auto& r : get<std::vector<std::string>>(require(doc, "regimes", "config"), "regimes")) {
    cfg.regimes.push_back(parse_regime(r));
  }
  if (cfg.regimes.empty()) throw ConfigError("regimes: list is empty");

  const json& net = require(doc, "network", "config");
  rejectUnknown(net, {"D", "prices", "capacities"}, "network");
  cfg.network.D = get<int>(require(net, "D", "network"), "network.D");
  cfg.network.prices = get<std::vector<double>>(require(net, "prices", "network"), "network.prices");
  const json& caps = require(net, "capacities", "network");
  if (caps.is_number_integer()) {
    cfg.network.capacities.assign(static_cast<std::size_t>(cfg.network.D) + 1, caps.get<int>());
  } else {
    cfg.network.capacities = get<std::vector<int>>(caps, "network.capacities");
  }
  validate(cfg.network);

  const json& subs = require(doc, "subsystems", "config");
  if (!subs.is_array() || subs.empty()) throw ConfigError("subsystems: expected a non-empty list");
  for (std::size_t g = 0; g < subs.size(); ++g) {
    const json& s = subs[g];
    const std::string where = "subsystems[" + std::to_string(g) + "]";
    rejectUnknown(s,
                  {"name", "repeat", "A", "B", "Q1", "Q2", "R", "SigmaW", "SigmaX0", "meanX0",
                   "alpha", "beta"},
                  where);
    const PlantModel m = parsePlant(s, where);
    const int repeat = s.contains("repeat") ? get<int>(s.at("repeat"), where + ".repeat") : 1;
    if (repeat < 1) throw ConfigError(where + ".repeat must be at least 1");
    const std::string name = s.contains("name") ? get<std::string>(s.at("name"), where + ".name")
                                                : "group" + std::to_string(g);
    for (int r = 0; r < repeat; ++r) {
      PlantModel copy = m;
      copy.index = static_cast<int>(cfg.subsystems.size());
      validate(copy, cfg.network);
      cfg.subsystems.push_back(std::move(copy));
      cfg.groups.push_back(name);
    }
  }
  validateTotalCapacity(cfg.network, static_cast<int>(cfg.subsystems.size()));

  if (doc.contains("weights") && !doc.at("weights").is_null()) {
    cfg.weights = get<std::vector<double>>(doc.at("weights"), "weights");
    if (cfg.weights.size() != cfg.subsystems.size()) {
      throw ConfigError("weights: need one weight per sub-system");
    }
  }

  if (doc.contains("delayControl")) {
    const json& dc = doc.at("delayControl");
    rejectUnknown(dc, {"futureAllocations"}, "delayControl");
    if (dc.contains("futureAllocations")) {
      const auto closure = get<std::string>(dc.at("futureAllocations"), "delayControl.futureAllocations");
      if (closure != "optimistic") {
        throw ConfigError("delayControl.futureAllocations: only \"optimistic\" is implemented");
      }
    }
  }

  if (doc.contains("solver")) {
    const json& sv = doc.at("solver");
    rejectUnknown(sv, {"timeLimitSeconds", "exactThreshold", "maxGap", "freshnessEncoding"}, "solver");
    if (sv.contains("timeLimitSeconds")) {
      cfg.solver.timeLimitSeconds = get<double>(sv.at("timeLimitSeconds"), "solver.timeLimitSeconds");
      if (!(cfg.solver.timeLimitSeconds > 0)) throw ConfigError("solver.timeLimitSeconds must be positive");
    }
    if (sv.contains("exactThreshold")) {
      cfg.solver.exactThreshold = get<int>(sv.at("exactThreshold"), "solver.exactThreshold");
    }
    if (sv.contains("maxGap")) cfg.solver.maxGap = get<double>(sv.at("maxGap"), "solver.maxGap");
    if (sv.contains("freshnessEncoding")) {
      cfg.solver.freshnessEncoding = parse_freshness_encoding(
          get<std::string>(sv.at("freshnessEncoding"), "solver.freshnessEncoding"));
    }
  }

  if (doc.contains("outputs")) {
    const json& out = doc.at("outputs");
    rejectUnknown(out, {"dir", "emitSvg", "traceReplications"}, "outputs");
    if (out.contains("dir")) cfg.outputs.dir = get<std::string>(out.at("dir"), "outputs.dir");
    if (out.contains("emitSvg")) cfg.outputs.emitSvg = get<bool>(out.at("emitSvg"), "outputs.emitSvg");
    if (out.contains("traceReplications")) {
      cfg.outputs.traceReplications = get<int>(out.at("traceReplications"), "outputs.traceReplications");
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Scenario to_scenario(const ExperimentConfig& cfg) {
  PlannerOptions planner;
  AllocatorOptions allocator;
  for (SolverOptions* s : {&planner.solver, &allocator.solver}) {
    s->exactThreshold = cfg.solver.exactThreshold;
    s->largeInstanceTimeLimit = cfg.solver.timeLimitSeconds;
  }
  if (cfg.solver.freshnessEncoding) {
    planner.impassiveEncoding = *cfg.solver.freshnessEncoding;
    planner.reactiveEncoding = *cfg.solver.freshnessEncoding;
    allocator.encoding = *cfg.solver.freshnessEncoding;
  }
  return make_scenario(cfg.subsystems, cfg.network, cfg.horizon, cfg.weights, planner, allocator);
}

}  // namespace ncs
