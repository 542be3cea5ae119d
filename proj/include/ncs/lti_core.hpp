#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace ncs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Constants of one sub-system: x_{k+1} = A x_k + B u_k + w_k with quadratic
/// stage/terminal weights, Gaussian disturbance, initial-state prior, and the
/// backward/forward delay tolerances the network manager must respect.
struct PlantModel {
  int index = 0;
  Matrix A;
  Matrix B;
  Matrix Q1;  // stage state weight
  Matrix Q2;  // terminal state weight
  Matrix R;
  Matrix SigmaW;
  Matrix SigmaX0;
  Vector meanX0;
  int alpha = 0;  // backward (faster link) tolerance
  int beta = 0;   // forward (slower link) tolerance

  int stateDim() const { return static_cast<int>(A.rows()); }
  int inputDim() const { return static_cast<int>(B.cols()); }
};

/// Latency-tiered links l_0..l_D. Link d delivers exactly d steps after sending.
struct NetworkModel {
  int D = 0;
  std::vector<double> prices;  // strictly decreasing in d
  std::vector<int> capacities;

  int numLinks() const { return D + 1; }
  // The delay vector [0, 1, ..., D].
  std::vector<int> delayVec() const;
};

/// Throws ConfigError on dimension mismatch, asymmetric or indefinite weights.
void validate(const PlantModel& model);
/// Throws ConfigError unless prices strictly decrease and sizes match D.
void validate(const NetworkModel& net);
/// Pairwise checks: tolerances within [0, D] and total capacity covers numPlants.
void validate(const PlantModel& model, const NetworkModel& net);
void validateTotalCapacity(const NetworkModel& net, int numPlants);

/// The defaults used when a config omits the initial-state prior: zero mean and
/// the disturbance covariance.
PlantModel withDefaultPrior(PlantModel model);

Vector step_plant(const Vector& x, const Vector& u, const Vector& w, const PlantModel& model);

/// Counter-based generator. The n-th output is a pure function of (key, n), so a
/// stream can be replayed or forked without shared state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed)) {}

  /// Independent stream for one (replication, sub-system) owner.
  static Rng stream(std::uint64_t seed, std::uint64_t replication, std::uint64_t subsystem);

  std::uint64_t nextU64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double standardNormal();

  std::uint64_t counter() const { return counter_; }
  std::uint64_t key() const { return key_; }

 private:
  static std::uint64_t mix(std::uint64_t z);

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool hasSpare_ = false;
  double spare_ = 0.0;
};

/// Symmetric square root S with S S^T = cov. Eigenvalues in [-1e-10, 0) are
/// clamped to zero; anything more negative is a ConfigError.
Matrix covariance_sqrt(const Matrix& cov);

Vector sample_gaussian(Rng& rng, const Vector& mean, const Matrix& cov);
/// Same as sample_gaussian with a precomputed factor from covariance_sqrt.
Vector sample_gaussian_factored(Rng& rng, const Vector& mean, const Matrix& sqrtCov);

bool isSymmetric(const Matrix& m, double tol = 1e-9);
/// Smallest eigenvalue of the symmetric part.
double minEigenvalue(const Matrix& m);

}  // namespace ncs
