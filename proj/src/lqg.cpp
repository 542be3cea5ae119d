#include "ncs/lqg.hpp"

#include "ncs/errors.hpp"

#include <algorithm>
#include <string>

namespace ncs {

RiccatiSolution riccati_backward(const PlantModel& model, int T) {
  if (T < 1) throw ConfigError("riccati_backward: horizon must be >= 1");
  validate(model);

  const Matrix& A = model.A;
  const Matrix& B = model.B;
  RiccatiSolution sol;
  sol.horizon = T;
  sol.P.resize(static_cast<std::size_t>(T) + 1);
  sol.Ptilde.resize(static_cast<std::size_t>(T));
  sol.L.resize(static_cast<std::size_t>(T));

  sol.P[T] = model.Q2;
  for (int t = T - 1; t >= 0; --t) {
    const Matrix& next = sol.P[t + 1];
    const Matrix BtP = B.transpose() * next;
    const Matrix gram = model.R + BtP * B;
    // R is PD, so gram is PD and the Cholesky solve is well posed.
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) {
      throw InternalError("riccati_backward: R + B^T P B not positive definite at t=" +
                          std::to_string(t));
    }
    Matrix gain = llt.solve(BtP * A);
    const Matrix AtPA = A.transpose() * next * A;
    Matrix P = model.Q1 + AtPA - A.transpose() * next * B * gain;
    P = 0.5 * (P + P.transpose());
    Matrix Pt = model.Q1 + AtPA - P;
    Pt = 0.5 * (Pt + Pt.transpose());
    sol.P[t] = std::move(P);
    sol.Ptilde[t] = std::move(Pt);
    sol.L[t] = std::move(gain);
  }

  sol.noiseFloor = 0.0;
  for (int t = 1; t <= T; ++t) sol.noiseFloor += (sol.P[t] * model.SigmaW).trace();
  return sol;
}

Vector control_input(const Matrix& gain, const Vector& xhat) {
  if (gain.cols() != xhat.size()) throw ConfigError("control_input: dimension mismatch");
  return -(gain * xhat);
}

double error_cost_term(const PlantModel& model, const RiccatiSolution& sol, int t, int l) {
  if (t < 0 || t >= sol.horizon) throw ConfigError("error_cost_term: t out of range");
  if (l < 1 || l > t + 1) {
    throw ConfigError("error_cost_term: lag must lie in [1, t+1], got " + std::to_string(l));
  }
  Matrix Apow = Matrix::Identity(model.A.rows(), model.A.cols());
  for (int i = 1; i < l; ++i) Apow = model.A * Apow;
  const Matrix& S = (t - l < 0) ? model.SigmaX0 : model.SigmaW;
  return (sol.Ptilde[t] * Apow * S * Apow.transpose()).trace();
}

std::vector<double> staleness_costs(const PlantModel& model, const RiccatiSolution& sol, int t,
                                    int D) {
  const int tau = std::min(D, t + 1);
  std::vector<double> out(static_cast<std::size_t>(tau) + 1, 0.0);
  for (int j = 1; j <= tau; ++j) out[j] = out[j - 1] + error_cost_term(model, sol, t, j);
  return out;
}

std::vector<std::vector<double>> staleness_cost_table(const PlantModel& model,
                                                      const RiccatiSolution& sol, int D) {
  std::vector<std::vector<double>> table;
  table.reserve(static_cast<std::size_t>(sol.horizon));
  for (int t = 0; t < sol.horizon; ++t) table.push_back(staleness_costs(model, sol, t, D));
  return table;
}

double baseline_cost(const PlantModel& model, const RiccatiSolution& sol) {
  const Vector& m = model.meanX0;
  return m.dot(sol.P[0] * m) + (sol.P[0] * model.SigmaX0).trace() + sol.noiseFloor;
}

}  // namespace ncs
