#pragma once

#include "ncs/milp.hpp"

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ncs {

/// Ways to express "cost of the freshest delivered sample" with binaries.
///
/// Product: one selector b_{j,t} per staleness j, equal to the product of "not
/// arrived" factors for fresher samples and "arrived" for sample t-j,
/// linearized exactly. Dominance: b_{j,t} <= arrived(t-j) and sum_j b = 1,
/// exact at the optimum because staleness cost never decreases in j.
/// Cumulative: y_{j,t} >= 1 - sum of arrivals of the j freshest samples, priced
/// at the increment E_t(j) - E_t(j-1); smallest and tightest of the three.
enum class FreshnessEncoding { Product, Dominance, Cumulative };

std::string to_string(FreshnessEncoding e);
FreshnessEncoding parse_freshness_encoding(const std::string& s);

/// How the link of sample s is decided inside a program: either already fixed
/// (history), or by binaries vars[d] (-1 where link d is not allowed).
struct SampleLink {
  int fixedLink = -1;
  std::vector<int> vars;

  static SampleLink fixed(int d) { return {d, {}}; }
  bool isFixed() const { return fixedLink >= 0; }
};

/// Adds staleness costs of one loop to a program. samples[s] describes sample
/// s for s = 0..T-1; samples before time 0 were never sent.
class FreshnessTerms {
 public:
  FreshnessTerms(MilpProblem& program, int D, FreshnessEncoding encoding,
                 std::vector<SampleLink> samples, std::string label = {});

  /// Adds weight * E[j*] to the objective, where j* is the staleness of the
  /// freshest sample held at t and E = staleness_costs(t) (size min(D,t+1)+1).
  void addStalenessCost(int t, std::span<const double> E, double weight);

 private:
  struct Arrival {
    bool constant = false;
    bool value = false;
    Terms vars;  // sum of selection binaries, 0 or 1 under one-hot rows
  };
  // Affine 0/1 expression c + sum terms.
  struct Affine {
    double constant = 0.0;
    Terms terms;
  };

  Arrival arrival(int s, int t) const;
  int arrivalVar(int s, int t);
  void addCost(const Affine& e, double w);
  void addProduct(int t, std::span<const double> E, double weight);
  void addDominance(int t, std::span<const double> E, double weight);
  void addCumulative(int t, std::span<const double> E, double weight);

  MilpProblem& p_;
  int D_;
  FreshnessEncoding encoding_;
  std::vector<SampleLink> samples_;
  std::string label_;
  std::map<std::pair<int, int>, int> arrivalVars_;
};

}  // namespace ncs
