#include "ncs/lti_core.hpp"

#include "ncs/errors.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace ncs {

namespace {

void requireSquare(const Matrix& m, int n, const char* name) {
  if (m.rows() != n || m.cols() != n) {
    throw ConfigError(std::string(name) + " must be " + std::to_string(n) + "x" +
                      std::to_string(n));
  }
}

void requirePsd(const Matrix& m, const char* name, bool strict) {
  if (!isSymmetric(m)) throw ConfigError(std::string(name) + " must be symmetric");
  const double lo = minEigenvalue(m);
  if (strict ? lo <= 0.0 : lo < -1e-10) {
    throw ConfigError(std::string(name) + (strict ? " must be positive definite"
                                                  : " must be positive semidefinite"));
  }
}

}  // namespace

std::vector<int> NetworkModel::delayVec() const {
  std::vector<int> v(static_cast<std::size_t>(D + 1));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

bool isSymmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

double minEigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

void validate(const PlantModel& model) {
  const int n = model.stateDim();
  if (n <= 0) throw ConfigError("plant state dimension must be positive");
  requireSquare(model.A, n, "A");
  if (model.B.rows() != n || model.B.cols() <= 0) {
    throw ConfigError("B must have " + std::to_string(n) + " rows and at least one column");
  }
  const int m = model.inputDim();
  requireSquare(model.Q1, n, "Q1");
  requireSquare(model.Q2, n, "Q2");
  requireSquare(model.R, m, "R");
  requireSquare(model.SigmaW, n, "SigmaW");
  requireSquare(model.SigmaX0, n, "SigmaX0");
  if (model.meanX0.size() != n) throw ConfigError("meanX0 must have length " + std::to_string(n));
  requirePsd(model.Q1, "Q1", false);
  requirePsd(model.Q2, "Q2", false);
  requirePsd(model.R, "R", true);
  requirePsd(model.SigmaW, "SigmaW", true);
  requirePsd(model.SigmaX0, "SigmaX0", true);
  if (model.alpha < 0 || model.beta < 0) throw ConfigError("delay tolerances must be >= 0");
}

void validate(const NetworkModel& net) {
  if (net.D < 0) throw ConfigError("maximum delay D must be >= 0");
  const auto links = static_cast<std::size_t>(net.numLinks());
  if (net.prices.size() != links || net.capacities.size() != links) {
    throw ConfigError("prices and capacities must have D+1 entries");
  }
  for (std::size_t d = 0; d < links; ++d) {
    if (!(net.prices[d] >= 0.0) || !std::isfinite(net.prices[d])) {
      throw ConfigError("link prices must be finite and nonnegative");
    }
    if (d > 0 && !(net.prices[d] < net.prices[d - 1])) {
      throw ConfigError("link prices must be strictly decreasing in delay");
    }
    if (net.capacities[d] < 0) throw ConfigError("link capacities must be >= 0");
  }
}

void validate(const PlantModel& model, const NetworkModel& net) {
  validate(model);
  if (model.alpha > net.D || model.beta > net.D) {
    throw ConfigError("delay tolerances of sub-system " + std::to_string(model.index) +
                      " exceed D");
  }
}

void validateTotalCapacity(const NetworkModel& net, int numPlants) {
  const long total = std::accumulate(net.capacities.begin(), net.capacities.end(), 0L);
  if (total < numPlants) {
    throw ConfigError("total link capacity " + std::to_string(total) +
                      " cannot serve " + std::to_string(numPlants) + " sub-systems");
  }
}

PlantModel withDefaultPrior(PlantModel model) {
  const auto n = model.A.rows();
  if (model.meanX0.size() == 0) model.meanX0 = Vector::Zero(n);
  if (model.SigmaX0.size() == 0) model.SigmaX0 = model.SigmaW;
  return model;
}

Vector step_plant(const Vector& x, const Vector& u, const Vector& w, const PlantModel& model) {
  if (x.size() != model.A.cols() || w.size() != model.A.rows() || u.size() != model.B.cols() ||
      model.B.rows() != model.A.rows()) {
    throw ConfigError("step_plant: dimension mismatch");
  }
  return model.A * x + model.B * u + w;
}

// SplitMix64 finalizer; used both to derive keys and as the counter hash.
std::uint64_t Rng::mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng Rng::stream(std::uint64_t seed, std::uint64_t replication, std::uint64_t subsystem) {
  Rng r(seed);
  r.key_ = mix(mix(r.key_ ^ mix(replication + 0x632be59bd9b4e019ULL)) ^
               mix(subsystem + 0x85157af5ULL));
  return r;
}

std::uint64_t Rng::nextU64() {
  const std::uint64_t c = counter_++;
  return mix(key_ + c * 0xd1b54a32d192ed03ULL);
}

double Rng::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(nextU64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::standardNormal() {
  if (hasSpare_) {
    hasSpare_ = false;
    return spare_;
  }
  // Box-Muller: std::normal_distribution is implementation-defined, this is not.
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * M_PI * u2;
  spare_ = r * std::sin(phi);
  hasSpare_ = true;
  return r * std::cos(phi);
}

Matrix covariance_sqrt(const Matrix& cov) {
  if (cov.rows() != cov.cols()) throw ConfigError("covariance must be square");
  if (!isSymmetric(cov)) throw ConfigError("covariance must be symmetric");
  const Matrix sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  Vector lambda = eig.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < -1e-10) throw ConfigError("covariance is not positive semidefinite");
    lambda[i] = lambda[i] < 0.0 ? 0.0 : std::sqrt(lambda[i]);
  }
  const Matrix& V = eig.eigenvectors();
  return V * lambda.asDiagonal() * V.transpose();
}

Vector sample_gaussian_factored(Rng& rng, const Vector& mean, const Matrix& sqrtCov) {
  if (sqrtCov.rows() != mean.size() || sqrtCov.cols() != mean.size()) {
    throw ConfigError("sample_gaussian: dimension mismatch");
  }
  Vector z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.standardNormal();
  return mean + sqrtCov * z;
}

Vector sample_gaussian(Rng& rng, const Vector& mean, const Matrix& cov) {
  return sample_gaussian_factored(rng, mean, covariance_sqrt(cov));
}

}  // namespace ncs
