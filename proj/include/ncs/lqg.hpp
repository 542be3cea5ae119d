#pragma once

#include "ncs/lti_core.hpp"

#include <vector>

namespace ncs {

/// Backward pass of the finite-horizon Riccati recursion for one sub-system.
///
/// P[t] for t = 0..T (P[T] = Q2), gains L[t] and estimation-error weights
/// Ptilde[t] = Q1 + A^T P[t+1] A - P[t] for t = 0..T-1. The cost of an
/// estimation error e at time t under certainty-equivalent control is
/// e^T Ptilde[t] e.
struct RiccatiSolution {
  int horizon = 0;
  std::vector<Matrix> P;
  std::vector<Matrix> Ptilde;
  std::vector<Matrix> L;
  // sum_{t=1}^{T} Tr(P_t SigmaW), the part of the optimal cost no policy can avoid.
  double noiseFloor = 0.0;
};

RiccatiSolution riccati_backward(const PlantModel& model, int T);

/// u = -L_k * xhat.
Vector control_input(const Matrix& gain, const Vector& xhat);

/// Cost contribution of the disturbance injected l steps before t that the
/// controller has not observed yet: Tr(Ptilde_t A^{l-1} S A^{l-1}^T), with S the
/// initial-state covariance when t - l < 0 and SigmaW otherwise. l = 0 is not a
/// valid lag (a fresh sample carries no error) and is rejected.
double error_cost_term(const PlantModel& model, const RiccatiSolution& sol, int t, int l);

/// Expected error cost at t when the freshest usable sample is j steps old:
/// out[j] = sum_{l=1}^{j} error_cost_term(t, l), for j = 0..min(D, t+1). The
/// entry j = t+1 is the "nothing delivered yet" case where the prior mean is used.
std::vector<double> staleness_costs(const PlantModel& model, const RiccatiSolution& sol, int t,
                                    int D);

/// Table of staleness_costs for every t in [0, T).
std::vector<std::vector<double>> staleness_cost_table(const PlantModel& model,
                                                      const RiccatiSolution& sol, int D);

/// Expected value of the state-dependent part of the cost under the optimal
/// controller with full knowledge of x_0 distribution: E[x_0^T P_0 x_0] + noiseFloor.
double baseline_cost(const PlantModel& model, const RiccatiSolution& sol);

}  // namespace ncs
