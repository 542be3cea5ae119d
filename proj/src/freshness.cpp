#include "ncs/freshness.hpp"

#include "ncs/errors.hpp"

#include <algorithm>

namespace ncs {

std::string to_string(FreshnessEncoding e) {
  switch (e) {
    case FreshnessEncoding::Product: return "product";
    case FreshnessEncoding::Dominance: return "dominance";
    case FreshnessEncoding::Cumulative: return "cumulative";
  }
  return "?";
}

FreshnessEncoding parse_freshness_encoding(const std::string& s) {
  if (s == "product") return FreshnessEncoding::Product;
  if (s == "dominance") return FreshnessEncoding::Dominance;
  if (s == "cumulative") return FreshnessEncoding::Cumulative;
  throw ConfigError("unknown freshness encoding '" + s + "'");
}

FreshnessTerms::FreshnessTerms(MilpProblem& program, int D, FreshnessEncoding encoding,
                               std::vector<SampleLink> samples, std::string label)
    : p_(program), D_(D), encoding_(encoding), samples_(std::move(samples)),
      label_(std::move(label)) {
  for (const auto& s : samples_) {
    if (!s.isFixed() && static_cast<int>(s.vars.size()) != D_ + 1) {
      throw InternalError("FreshnessTerms: selection vars must cover every link");
    }
  }
}

FreshnessTerms::Arrival FreshnessTerms::arrival(int s, int t) const {
  Arrival a;
  if (s < 0) {
    a.constant = true;
    return a;
  }
  if (s >= static_cast<int>(samples_.size())) throw InternalError("FreshnessTerms: unknown sample");
  const SampleLink& link = samples_[s];
  const int maxDelay = t - s;
  if (link.isFixed()) {
    a.constant = true;
    a.value = link.fixedLink <= maxDelay;
    return a;
  }
  bool laterAllowed = false;
  for (int d = 0; d <= D_; ++d) {
    if (link.vars[d] < 0) continue;
    if (d <= maxDelay) {
      a.vars.emplace_back(link.vars[d], 1.0);
    } else {
      laterAllowed = true;
    }
  }
  if (a.vars.empty() || !laterAllowed) {
    a.constant = true;
    a.value = !a.vars.empty();
    a.vars.clear();
  }
  return a;
}

int FreshnessTerms::arrivalVar(int s, int t) {
  const auto key = std::make_pair(s, t);
  if (auto it = arrivalVars_.find(key); it != arrivalVars_.end()) return it->second;
  const Arrival a = arrival(s, t);
  int v;
  if (a.vars.size() == 1) {
    v = a.vars.front().first;
  } else {
    v = p_.addVar(0.0, label_ + "a_" + std::to_string(s) + "_" + std::to_string(t));
    Terms row = a.vars;
    for (auto& term : row) term.second = -1.0;
    row.emplace_back(v, 1.0);
    p_.addEq(std::move(row), 0.0);
  }
  arrivalVars_.emplace(key, v);
  return v;
}

void FreshnessTerms::addCost(const Affine& e, double w) {
  p_.objectiveOffset += w * e.constant;
  for (const auto& [j, a] : e.terms) p_.objective[j] += w * a;
}

void FreshnessTerms::addStalenessCost(int t, std::span<const double> E, double weight) {
  const int tau = std::min(D_, t + 1);
  if (static_cast<int>(E.size()) != tau + 1) {
    throw InternalError("FreshnessTerms: staleness cost vector has the wrong length");
  }
  if (weight == 0.0) return;
  switch (encoding_) {
    case FreshnessEncoding::Product: addProduct(t, E, weight); break;
    case FreshnessEncoding::Dominance: addDominance(t, E, weight); break;
    case FreshnessEncoding::Cumulative: addCumulative(t, E, weight); break;
  }
}

void FreshnessTerms::addProduct(int t, std::span<const double> E, double weight) {
  const int tau = static_cast<int>(E.size()) - 1;
  Affine sum;  // sum_j b_j, must equal 1
  for (int j = 0; j <= tau; ++j) {
    // b_j = prod_{j'<j} (1 - arr(t-j')) * arr(t-j); the j = t+1 entry has no
    // "arrived" factor because the prior is always at hand.
    std::vector<ProductFactor> factors;
    bool zero = false;
    for (int jp = 0; jp < j && !zero; ++jp) {
      const Arrival a = arrival(t - jp, t);
      if (a.constant) {
        zero = a.value;
      } else {
        factors.push_back({arrivalVar(t - jp, t), true});
      }
    }
    if (!zero && j <= t) {
      const Arrival a = arrival(t - j, t);
      if (a.constant) {
        zero = !a.value;
      } else {
        factors.push_back({arrivalVar(t - j, t), false});
      }
    }
    if (zero) continue;
    Affine b;
    if (factors.empty()) {
      b.constant = 1.0;
    } else if (factors.size() == 1) {
      if (factors[0].complemented) {
        b.constant = 1.0;
        b.terms.emplace_back(factors[0].var, -1.0);
      } else {
        b.terms.emplace_back(factors[0].var, 1.0);
      }
    } else {
      const int z = p_.addVar(0.0, label_ + "b_" + std::to_string(j) + "_" + std::to_string(t));
      for (auto& row : linearize_binary_product(z, factors)) {
        p_.addLe(std::move(row.terms), row.rhs);
      }
      b.terms.emplace_back(z, 1.0);
    }
    addCost(b, weight * E[j]);
    sum.constant += b.constant;
    sum.terms.insert(sum.terms.end(), b.terms.begin(), b.terms.end());
    if (factors.empty()) break;  // later selectors all contain 1 - (this arrival)
  }
  if (!sum.terms.empty()) p_.addEq(std::move(sum.terms), 1.0 - sum.constant);
}

void FreshnessTerms::addDominance(int t, std::span<const double> E, double weight) {
  const int tau = static_cast<int>(E.size()) - 1;
  Terms sum;
  for (int j = 0; j <= tau; ++j) {
    const Arrival a = j <= t ? arrival(t - j, t) : Arrival{true, true, {}};
    if (a.constant && !a.value) continue;
    if (a.constant && sum.empty()) {
      // Always available and nothing fresher can be: a constant selector.
      p_.objectiveOffset += weight * E[j];
      return;
    }
    const int b = p_.addVar(weight * E[j], label_ + "b_" + std::to_string(j) + "_" + std::to_string(t));
    sum.emplace_back(b, 1.0);
    if (a.constant) break;  // staler selectors can never be cheaper
    Terms row = a.vars;
    for (auto& term : row) term.second = -1.0;
    row.emplace_back(b, 1.0);
    p_.addLe(std::move(row), 0.0);
  }
  if (sum.empty()) throw InternalError("FreshnessTerms: no sample can be fresh at time t");
  p_.addEq(std::move(sum), 1.0);
}

void FreshnessTerms::addCumulative(int t, std::span<const double> E, double weight) {
  const int tau = static_cast<int>(E.size()) - 1;
  Terms arrived;  // arrivals of samples t, t-1, ..., t-j+1
  for (int j = 1; j <= tau; ++j) {
    const Arrival a = arrival(t - (j - 1), t);
    if (a.constant && a.value) return;  // staleness never reaches j
    arrived.insert(arrived.end(), a.vars.begin(), a.vars.end());
    const double increment = E[j] - E[j - 1];
    if (increment <= 0.0) continue;
    if (arrived.empty()) {
      p_.objectiveOffset += weight * increment;
      continue;
    }
    const int y = p_.addVar(weight * increment,
                            label_ + "y_" + std::to_string(j) + "_" + std::to_string(t));
    Terms row = arrived;
    for (auto& term : row) term.second = -1.0;
    row.emplace_back(y, -1.0);
    p_.addLe(std::move(row), -1.0);  // y >= 1 - sum arrived
  }
}

}  // namespace ncs
