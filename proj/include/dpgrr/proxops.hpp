#ifndef DPGRR_PROXOPS_HPP
#define DPGRR_PROXOPS_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "dpgrr/error.hpp"

namespace dpgrr {

using vec = Eigen::VectorXd;

/// Non-smooth part of the objective. The set of kinds is closed so that the
/// prox and the subgradient bound stay in closed form.
class regularizer {
 public:
  enum class kind { zero, l1, squared_l2 };

  static regularizer zero() { return regularizer(kind::zero, 0.0); }
  static regularizer l1(double lambda) { return regularizer(kind::l1, lambda); }
  static regularizer squared_l2(double lambda) { return regularizer(kind::squared_l2, lambda); }

  kind type() const noexcept { return kind_; }
  double lambda() const noexcept { return lambda_; }

  std::string name() const {
    switch (kind_) {
      case kind::zero: return "zero";
      case kind::l1: return "l1";
      case kind::squared_l2: return "squared_l2";
    }
    return "?";
  }

  double value(const vec& x) const {
    switch (kind_) {
      case kind::zero: return 0.0;
      case kind::l1: return lambda_ * x.lpNorm<1>();
      case kind::squared_l2: return 0.5 * lambda_ * x.squaredNorm();
    }
    return 0.0;
  }

  // Bound on the norm of subgradients in dimension d. Only L1 and zero have
  // a global one; squared L2 grows with ||x|| and reports infinity.
  double subgradient_bound(std::size_t d) const {
    switch (kind_) {
      case kind::zero: return 0.0;
      case kind::l1: return lambda_ * std::sqrt(static_cast<double>(d));
      case kind::squared_l2: return lambda_ == 0.0 ? 0.0 : HUGE_VAL;
    }
    return 0.0;
  }

 private:
  regularizer(kind k, double lambda) : kind_(k), lambda_(lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw invalid_argument("regularizer weight must be finite and >= 0");
  }

  kind kind_;
  double lambda_;
};

/// argmin_z reg(z) + ||z - x||^2 / (2 step).
inline vec prox(const regularizer& reg, double step, const vec& x) {
  if (!(step > 0.0)) throw non_positive_step("prox: step must be > 0");
  switch (reg.type()) {
    case regularizer::kind::zero: return x;
    case regularizer::kind::l1: {
      const double thr = step * reg.lambda();
      return x.unaryExpr([thr](double v) { return std::copysign(std::max(std::abs(v) - thr, 0.0), v) + 0.0; });
    }
    case regularizer::kind::squared_l2: return x / (1.0 + step * reg.lambda());
  }
  return x;
}

/// How far `candidate` is from minimizing the prox subproblem, in objective
/// value. Zero for the exact prox.
inline double inexact_prox_error(const regularizer& reg, double step, const vec& x, const vec& candidate) {
  if (!(step > 0.0)) throw non_positive_step("inexact_prox_error: step must be > 0");
  if (candidate.size() != x.size()) throw dimension_mismatch("inexact_prox_error: dimension mismatch");
  const vec exact = prox(reg, step, x);
  const double at_candidate = reg.value(candidate) + (candidate - x).squaredNorm() / (2.0 * step);
  const double at_exact = reg.value(exact) + (exact - x).squaredNorm() / (2.0 * step);
  // Mathematically nonnegative; rounding can push it slightly below.
  return std::max(at_candidate - at_exact, 0.0);
}

// One element of the subdifferential; 0 at the L1 kinks.
inline vec subgradient(const regularizer& reg, const vec& x) {
  switch (reg.type()) {
    case regularizer::kind::zero: return vec::Zero(x.size());
    case regularizer::kind::l1: {
      const double lam = reg.lambda();
      return x.unaryExpr([lam](double v) { return v > 0.0 ? lam : (v < 0.0 ? -lam : 0.0); });
    }
    case regularizer::kind::squared_l2: return reg.lambda() * x;
  }
  return vec::Zero(x.size());
}

}  // namespace dpgrr

#endif  // DPGRR_PROXOPS_HPP
