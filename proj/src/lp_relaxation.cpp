#include "ncs/lp_relaxation.hpp"

#include "ncs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ncs::lp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kFeasTol = 1e-7;
// Consecutive degenerate pivots before switching to smallest-index rules.
constexpr int kDegenerateSwitch = 50;

}  // namespace

BoundedSimplex::BoundedSimplex(int numStructural, std::vector<Row> rows, std::vector<double> cost)
    : nStruct_(numStructural),
      m_(static_cast<int>(rows.size())),
      cols_(numStructural + 2 * static_cast<int>(rows.size())),
      rows_(std::move(rows)) {
  if (static_cast<int>(cost.size()) != nStruct_) throw InternalError("lp: cost size mismatch");
  cost_.assign(static_cast<std::size_t>(cols_), 0.0);
  std::copy(cost.begin(), cost.end(), cost_.begin());
  lb_.assign(static_cast<std::size_t>(cols_), 0.0);
  ub_.assign(static_cast<std::size_t>(cols_), 0.0);
  for (int j = 0; j < nStruct_; ++j) ub_[j] = 1.0;
  for (int i = 0; i < m_; ++i) ub_[nStruct_ + i] = rows_[i].isEquality ? 0.0 : kInf;
  x_.assign(static_cast<std::size_t>(cols_), 0.0);
  status_.assign(static_cast<std::size_t>(cols_), Status::AtLower);
  dj_.assign(static_cast<std::size_t>(cols_), 0.0);
}

void BoundedSimplex::checkDeadline(long iter) const {
  if (deadline_ && iter % 32 == 0 && Clock::now() > *deadline_) throw DeadlineReached();
}

double BoundedSimplex::valueOf(int j) const {
  return status_[j] == Status::AtUpper ? ub_[j] : lb_[j];
}

void BoundedSimplex::setBounds(int j, double lb, double ub) {
  if (j < 0 || j >= nStruct_) throw InternalError("lp: setBounds on non-structural column");
  lb_[j] = lb;
  ub_[j] = ub;
  if (!haveBasis_ || status_[j] == Status::Basic) return;
  // Keep the nonbasic variable at the bound its reduced cost prefers, so the
  // basis stays dual feasible; shift the basic values accordingly.
  Status next = (lb == ub) ? Status::AtLower : (dj_[j] < 0.0 ? Status::AtUpper : Status::AtLower);
  const double old = x_[j];
  status_[j] = next;
  x_[j] = valueOf(j);
  const double delta = x_[j] - old;
  if (delta != 0.0) {
    for (int i = 0; i < m_; ++i) beta_[i] -= at(i, j) * delta;
  }
}

void BoundedSimplex::resetTableau() {
  tab_.assign(static_cast<std::size_t>(m_) * cols_, 0.0);
  rhs_.assign(static_cast<std::size_t>(m_), 0.0);
  basic_.assign(static_cast<std::size_t>(m_), -1);
  beta_.assign(static_cast<std::size_t>(m_), 0.0);

  // Nonbasic structurals sit at a bound; slacks and artificials start at zero.
  for (int j = 0; j < cols_; ++j) {
    if (j >= nStruct_) {
      lb_[j] = 0.0;
      if (j >= nStruct_ + m_) ub_[j] = kInf;
    }
    status_[j] = (j < nStruct_ && lb_[j] != ub_[j] && cost_[j] < 0.0) ? Status::AtUpper
                                                                        : Status::AtLower;
    x_[j] = valueOf(j);
  }

  for (int i = 0; i < m_; ++i) {
    const Row& row = rows_[i];
    double residual = row.rhs;
    for (const auto& [j, a] : row.terms) {
      at(i, j) += a;
      residual -= a * x_[j];
    }
    const int slack = nStruct_ + i;
    const int art = nStruct_ + m_ + i;
    if (!row.isEquality) at(i, slack) = 1.0;
    rhs_[i] = row.rhs;
    if (!row.isEquality && residual >= 0.0) {
      basic_[i] = slack;
      status_[slack] = Status::Basic;
      beta_[i] = residual;
      ub_[art] = 0.0;
    } else {
      if (residual < 0.0) {
        double* r = &tab_[static_cast<std::size_t>(i) * cols_];
        for (int j = 0; j < cols_; ++j) r[j] = -r[j];
        rhs_[i] = -rhs_[i];
        residual = -residual;
      }
      at(i, art) = 1.0;
      basic_[i] = art;
      status_[art] = Status::Basic;
      beta_[i] = residual;
    }
  }
}

void BoundedSimplex::computeReducedCosts(const std::vector<double>& c) {
  dj_ = c;
  for (int i = 0; i < m_; ++i) {
    const double cb = c[basic_[i]];
    if (cb == 0.0) continue;
    const double* r = &tab_[static_cast<std::size_t>(i) * cols_];
    for (int j = 0; j < cols_; ++j) dj_[j] -= cb * r[j];
  }
  for (int i = 0; i < m_; ++i) dj_[basic_[i]] = 0.0;
}

void BoundedSimplex::recomputeBasicValues() {
  for (int i = 0; i < m_; ++i) {
    double v = rhs_[i];
    const double* r = &tab_[static_cast<std::size_t>(i) * cols_];
    for (int j = 0; j < cols_; ++j) {
      if (status_[j] != Status::Basic && x_[j] != 0.0) v -= r[j] * x_[j];
    }
    beta_[i] = v;
  }
}

void BoundedSimplex::pivot(int r, int j) {
  ++pivots_;
  double* pr = &tab_[static_cast<std::size_t>(r) * cols_];
  const double inv = 1.0 / pr[j];
  std::vector<int> nz;
  nz.reserve(64);
  for (int k = 0; k < cols_; ++k) {
    if (pr[k] != 0.0) {
      pr[k] *= inv;
      nz.push_back(k);
    }
  }
  pr[j] = 1.0;
  rhs_[r] *= inv;
  for (int i = 0; i < m_; ++i) {
    if (i == r) continue;
    double* pi = &tab_[static_cast<std::size_t>(i) * cols_];
    const double f = pi[j];
    if (f == 0.0) continue;
    for (int k : nz) pi[k] -= f * pr[k];
    pi[j] = 0.0;
    rhs_[i] -= f * rhs_[r];
  }
  const double fd = dj_[j];
  if (fd != 0.0) {
    for (int k : nz) dj_[k] -= fd * pr[k];
    dj_[j] = 0.0;
  }
  basic_[r] = j;
  status_[j] = Status::Basic;
}

bool BoundedSimplex::primalSimplex(const std::vector<double>& c, long iterationCap) {
  computeReducedCosts(c);
  int degenerate = 0;
  for (long iter = 0; iter < iterationCap; ++iter) {
    checkDeadline(iter);
    const bool bland = degenerate > kDegenerateSwitch;
    int enter = -1;
    double best = 0.0;
    for (int j = 0; j < cols_; ++j) {
      if (status_[j] == Status::Basic || lb_[j] == ub_[j]) continue;
      const double d = dj_[j];
      const bool improving = (status_[j] == Status::AtLower && d < -kDualTol) ||
                             (status_[j] == Status::AtUpper && d > kDualTol);
      if (!improving) continue;
      if (bland) {
        enter = j;
        break;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        enter = j;
      }
    }
    if (enter < 0) return true;

    const double dir = status_[enter] == Status::AtLower ? 1.0 : -1.0;
    double step = ub_[enter] - lb_[enter];
    int leaveRow = -1;
    bool leaveAtLower = true;
    double leaveAlpha = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double alpha = dir * at(i, enter);
      const int b = basic_[i];
      double limit;
      bool toLower;
      if (alpha > kPivotTol) {
        limit = (beta_[i] - lb_[b]) / alpha;
        toLower = true;
      } else if (alpha < -kPivotTol && ub_[b] < kInf) {
        limit = (ub_[b] - beta_[i]) / -alpha;
        toLower = false;
      } else {
        continue;
      }
      if (limit < 0.0) limit = 0.0;
      const bool better =
          limit < step - 1e-12 ||
          (limit <= step + 1e-12 && leaveRow >= 0 &&
           (bland ? basic_[i] < basic_[leaveRow] : std::abs(alpha) > std::abs(leaveAlpha)));
      if (better || (leaveRow < 0 && limit <= step)) {
        step = limit;
        leaveRow = i;
        leaveAtLower = toLower;
        leaveAlpha = alpha;
      }
    }
    if (step == kInf) throw InternalError("lp: unbounded relaxation");
    degenerate = step <= 1e-12 ? degenerate + 1 : 0;

    for (int i = 0; i < m_; ++i) beta_[i] -= dir * at(i, enter) * step;
    if (leaveRow < 0) {
      status_[enter] = status_[enter] == Status::AtLower ? Status::AtUpper : Status::AtLower;
      x_[enter] = valueOf(enter);
      continue;
    }
    const double enteringValue = x_[enter] + dir * step;
    const int leaving = basic_[leaveRow];
    status_[leaving] = leaveAtLower ? Status::AtLower : Status::AtUpper;
    x_[leaving] = valueOf(leaving);
    pivot(leaveRow, enter);
    beta_[leaveRow] = enteringValue;
    x_[enter] = 0.0;
  }
  return false;
}

BoundedSimplex::DualResult BoundedSimplex::dualSimplex(long iterationCap) {
  int degenerate = 0;
  for (long iter = 0; iter < iterationCap; ++iter) {
    checkDeadline(iter);
    const bool bland = degenerate > kDegenerateSwitch;
    int r = -1;
    double worst = kFeasTol;
    for (int i = 0; i < m_; ++i) {
      const int b = basic_[i];
      const double v = std::max(lb_[b] - beta_[i], beta_[i] - ub_[b]);
      if (v > worst) {
        if (bland) {
          if (r < 0 || b < basic_[r]) r = i;
          continue;
        }
        worst = v;
        r = i;
      }
    }
    if (r < 0) return DualResult::Optimal;

    const int leaving = basic_[r];
    const bool below = beta_[r] < lb_[leaving];
    const double target = below ? lb_[leaving] : ub_[leaving];
    int enter = -1;
    double bestRatio = kInf;
    double bestAlpha = 0.0;
    const double* pr = &tab_[static_cast<std::size_t>(r) * cols_];
    for (int j = 0; j < cols_; ++j) {
      if (status_[j] == Status::Basic || lb_[j] == ub_[j]) continue;
      const double a = pr[j];
      if (std::abs(a) <= kPivotTol) continue;
      const bool canUp = status_[j] == Status::AtLower;
      // Basic value moves by -a * dx_j; pick the sign that pushes it toward target.
      const bool ok = below ? ((a < 0.0 && canUp) || (a > 0.0 && !canUp))
                            : ((a > 0.0 && canUp) || (a < 0.0 && !canUp));
      if (!ok) continue;
      const double ratio = std::abs(dj_[j]) / std::abs(a);
      const bool better =
          ratio < bestRatio - 1e-12 ||
          (ratio <= bestRatio + 1e-12 &&
           (bland ? (enter < 0 || j < enter) : std::abs(a) > std::abs(bestAlpha)));
      if (better) {
        bestRatio = ratio;
        enter = j;
        bestAlpha = a;
      }
    }
    if (enter < 0) return DualResult::Infeasible;
    degenerate = bestRatio <= 1e-12 ? degenerate + 1 : 0;

    const double dx = (beta_[r] - target) / pr[enter];
    for (int i = 0; i < m_; ++i) beta_[i] -= at(i, enter) * dx;
    const double enteringValue = x_[enter] + dx;
    status_[leaving] = below ? Status::AtLower : Status::AtUpper;
    x_[leaving] = target;
    pivot(r, enter);
    beta_[r] = enteringValue;
    x_[enter] = 0.0;
  }
  return DualResult::Stalled;
}

LpStatus BoundedSimplex::solve() {
  resetTableau();
  haveBasis_ = true;
  const long cap = 200L * (m_ + cols_) + 1000;

  std::vector<double> phase1(static_cast<std::size_t>(cols_), 0.0);
  bool needPhase1 = false;
  for (int i = 0; i < m_; ++i) {
    if (basic_[i] >= nStruct_ + m_) {
      phase1[basic_[i]] = 1.0;
      needPhase1 = true;
    }
  }
  if (needPhase1) {
    if (!primalSimplex(phase1, cap)) throw InternalError("lp: phase 1 iteration limit");
    double infeas = 0.0;
    double scale = 1.0;
    for (int i = 0; i < m_; ++i) {
      scale = std::max(scale, std::abs(rows_[i].rhs));
      if (basic_[i] >= nStruct_ + m_) infeas += beta_[i];
    }
    if (infeas > kFeasTol * scale) return LpStatus::Infeasible;
  }
  // Artificials never re-enter.
  for (int a = nStruct_ + m_; a < cols_; ++a) {
    ub_[a] = 0.0;
    if (status_[a] != Status::Basic) {
      status_[a] = Status::AtLower;
      x_[a] = 0.0;
    }
  }
  recomputeBasicValues();
  if (!primalSimplex(cost_, cap)) throw InternalError("lp: phase 2 iteration limit");
  return LpStatus::Optimal;
}

LpStatus BoundedSimplex::reoptimize() {
  if (!haveBasis_) return solve();
  const long cap = 20L * (m_ + cols_) + 1000;
  switch (dualSimplex(cap)) {
    case DualResult::Optimal:
      if (residual() > 1e-6) return solve();
      return LpStatus::Optimal;
    case DualResult::Infeasible:
      return LpStatus::Infeasible;
    case DualResult::Stalled:
      break;
  }
  return solve();
}

double BoundedSimplex::objective() const {
  double z = 0.0;
  const auto x = primal();
  for (int j = 0; j < nStruct_; ++j) z += cost_[j] * x[j];
  return z;
}

std::vector<double> BoundedSimplex::primal() const {
  std::vector<double> out(static_cast<std::size_t>(nStruct_));
  for (int j = 0; j < nStruct_; ++j) out[j] = status_[j] == Status::Basic ? 0.0 : x_[j];
  for (int i = 0; i < m_; ++i) {
    if (basic_[i] < nStruct_) out[basic_[i]] = beta_[i];
  }
  return out;
}

double BoundedSimplex::residual() const {
  const auto x = primal();
  double worst = 0.0;
  for (const Row& row : rows_) {
    double lhs = 0.0;
    for (const auto& [j, a] : row.terms) lhs += a * x[j];
    const double v = row.isEquality ? std::abs(lhs - row.rhs) : std::max(0.0, lhs - row.rhs);
    worst = std::max(worst, v);
  }
  for (int j = 0; j < nStruct_; ++j) {
    worst = std::max({worst, lb_[j] - x[j], x[j] - ub_[j]});
  }
  return worst;
}

}  // namespace ncs::lp
