#ifndef DPGRR_REFERENCE_HPP
#define DPGRR_REFERENCE_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "dpgrr/error.hpp"
#include "dpgrr/objectives.hpp"
#include "dpgrr/proxops.hpp"
#include "dpgrr/sampling.hpp"

// Centralized oracles. These deliberately avoid the distributed engine and
// use only the loss and prox primitives.

namespace dpgrr {

struct reference_solution {
  vec x_star;
  double f_star = 0.0;
  double mapping_norm = 0.0;  // ||(x - prox(x - s grad f(x))) / s|| at x_star
  std::uint64_t iterations = 0;
  bool converged = false;
};

/// Full-batch proximal gradient on F = (1/m) sum_j sum_i f_{j,i} + phi with
/// step 1/(n L). Stops once the gradient-mapping norm drops to `tol`; if
/// max_iters runs out first, returns the best iterate seen with
/// converged = false.
inline reference_solution solve_centralized(const partitioned_data& data, const regularizer& reg, loss_kind loss,
                                            double tol = 1e-10, std::uint64_t max_iters = 2'000'000) {
  if (!(tol > 0.0)) throw invalid_argument("solve_centralized: tol must be > 0");
  data.check();
  const double step = 1.0 / (static_cast<double>(data.n()) * lipschitz_constant(data, loss));

  reference_solution best;
  best.mapping_norm = HUGE_VAL;
  vec x = vec::Zero(static_cast<Eigen::Index>(data.dim));
  for (std::uint64_t it = 0;; ++it) {
    const vec next = prox(reg, step, x - step * smooth_gradient(data, loss, x));
    const double norm = (x - next).norm() / step;
    if (norm < best.mapping_norm) {
      best.x_star = x;
      best.mapping_norm = norm;
      best.iterations = it;
    }
    if (norm <= tol) {
      best.converged = true;
      break;
    }
    if (it >= max_iters) break;
    x = next;
  }
  best.f_star = full_objective(data, reg, loss, best.x_star);
  return best;
}

/// Centralized proximal gradient with random reshuffling: per epoch, one
/// pass of single-sample gradient steps over `samples` in the order given by
/// `order`, then one prox. Returns the iterate after every epoch, starting
/// with x0.
inline std::vector<vec> centralized_prox_rr(const std::vector<sample>& samples, std::size_t dim,
                                            const regularizer& reg, loss_kind loss, double step, std::uint64_t epochs,
                                            const sampling_schedule& order, const vec& x0) {
  if (!(step > 0.0)) throw non_positive_step("centralized_prox_rr: step must be > 0");
  if (order.n() != samples.size()) throw dimension_mismatch("centralized_prox_rr: schedule size != sample count");
  if (static_cast<std::size_t>(x0.size()) != dim) throw dimension_mismatch("centralized_prox_rr: x0 has wrong size");

  std::vector<vec> trace{x0};
  vec x = x0;
  for (std::uint64_t t = 0; t < epochs; ++t) {
    for (std::size_t idx : order.epoch_indices(t)) {
      const auto [value, grad] = sample_value_grad(loss, samples[idx], x);
      x = x - step * grad;
    }
    x = prox(reg, step, x);
    if (!x.allFinite()) throw non_finite_iterate("centralized_prox_rr: non-finite iterate at epoch " + std::to_string(t));
    trace.push_back(x);
  }
  return trace;
}

}  // namespace dpgrr

#endif  // DPGRR_REFERENCE_HPP
