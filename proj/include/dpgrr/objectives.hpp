#ifndef DPGRR_OBJECTIVES_HPP
#define DPGRR_OBJECTIVES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dpgrr/error.hpp"
#include "dpgrr/proxops.hpp"

namespace dpgrr {

/// Sparse feature vector with strictly ascending indices.
struct sparse_vector {
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  std::size_t nnz() const noexcept { return index.size(); }

  // One past the largest index, i.e. the smallest dimension that holds it.
  std::size_t min_dim() const noexcept { return index.empty() ? 0 : static_cast<std::size_t>(index.back()) + 1; }

  double squared_norm() const {
    long double acc = 0.0L;
    for (double v : value) acc += static_cast<long double>(v) * v;
    return static_cast<double>(acc);
  }

  // Accumulated in extended precision, ascending index order.
  double dot(const vec& x) const {
    long double acc = 0.0L;
    for (std::size_t k = 0; k < index.size(); ++k)
      acc += static_cast<long double>(value[k]) * x[static_cast<Eigen::Index>(index[k])];
    return static_cast<double>(acc);
  }

  // y += alpha * this
  void axpy_into(double alpha, vec& y) const {
    for (std::size_t k = 0; k < index.size(); ++k) y[static_cast<Eigen::Index>(index[k])] += alpha * value[k];
  }

  vec to_dense(std::size_t d) const {
    vec out = vec::Zero(static_cast<Eigen::Index>(d));
    axpy_into(1.0, out);
    return out;
  }

  friend bool operator==(const sparse_vector&, const sparse_vector&) = default;
};

struct sample {
  sparse_vector features;
  double label = 0.0;

  friend bool operator==(const sample&, const sample&) = default;
};

struct local_dataset {
  std::size_t agent = 0;
  std::vector<sample> samples;
};

/// Training data split over m agents with n samples each.
struct partitioned_data {
  std::size_t dim = 0;
  std::vector<local_dataset> agents;

  std::size_t m() const noexcept { return agents.size(); }
  std::size_t n() const noexcept { return agents.empty() ? 0 : agents.front().samples.size(); }
  std::size_t total() const noexcept {
    std::size_t out = 0;
    for (const auto& a : agents) out += a.samples.size();
    return out;
  }

  void check() const {
    if (agents.empty()) throw empty_data("dataset has no agents");
    for (const auto& a : agents) {
      if (a.samples.size() != n()) throw invalid_argument("agents must hold equally many samples");
      for (const auto& s : a.samples)
        if (s.features.min_dim() > dim) throw dimension_mismatch("sample feature index exceeds dimension");
    }
  }
};

enum class loss_kind { logistic, least_squares };

inline std::string to_string(loss_kind k) { return k == loss_kind::logistic ? "logistic" : "least_squares"; }

// log(1 + exp(u)) without overflow.
inline double softplus(double u) noexcept { return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

// 1 / (1 + exp(-u)) without overflow.
inline double sigmoid(double u) noexcept {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

/// Loss value and the scalar c with grad = c * a.
struct loss_eval {
  double value;
  double slope;
};

inline loss_eval evaluate_loss(loss_kind kind, const sample& s, const vec& x) {
  const double margin = s.features.dot(x);
  if (kind == loss_kind::logistic) {
    const double z = -s.label * margin;
    return {softplus(z), -s.label * sigmoid(z)};
  }
  const double r = margin - s.label;
  return {0.5 * r * r, r};
}

inline std::pair<double, vec> sample_value_grad(loss_kind kind, const sample& s, const vec& x) {
  if (s.features.min_dim() > static_cast<std::size_t>(x.size()))
    throw dimension_mismatch("sample_value_grad: feature index beyond dim(x)");
  const auto e = evaluate_loss(kind, s, x);
  vec g = vec::Zero(x.size());
  s.features.axpy_into(e.slope, g);
  return {e.value, g};
}

// Sum over agents and samples, scaled by 1/m (not 1/(mn)).
inline double smooth_objective(const partitioned_data& data, loss_kind kind, const vec& x) {
  if (static_cast<std::size_t>(x.size()) != data.dim) throw dimension_mismatch("objective: dim(x) != data dim");
  long double total = 0.0L;
  for (const auto& agent : data.agents)
    for (const auto& s : agent.samples) total += evaluate_loss(kind, s, x).value;
  return static_cast<double>(total / static_cast<long double>(data.m()));
}

inline double full_objective(const partitioned_data& data, const regularizer& reg, loss_kind kind, const vec& x) {
  return smooth_objective(data, kind, x) + reg.value(x);
}

// Gradient of the smooth part, same 1/m scaling.
inline vec smooth_gradient(const partitioned_data& data, loss_kind kind, const vec& x) {
  if (static_cast<std::size_t>(x.size()) != data.dim) throw dimension_mismatch("gradient: dim(x) != data dim");
  vec g = vec::Zero(x.size());
  for (const auto& agent : data.agents)
    for (const auto& s : agent.samples) s.features.axpy_into(evaluate_loss(kind, s, x).slope, g);
  return g / static_cast<double>(data.m());
}

/// Per-sample gradient Lipschitz constant L.
inline double lipschitz_constant(const partitioned_data& data, loss_kind kind) {
  if (data.total() == 0) throw empty_data("lipschitz_constant: no samples");
  double worst = 0.0;
  for (const auto& agent : data.agents)
    for (const auto& s : agent.samples) worst = std::max(worst, s.features.squared_norm());
  return kind == loss_kind::logistic ? worst / 4.0 : worst;
}

/// Per-sample gradient norm bound G_f. Global for logistic; for least
/// squares only on the ball ||x|| <= radius.
inline double gradient_bound(const partitioned_data& data, loss_kind kind, double radius) {
  if (data.total() == 0) throw empty_data("gradient_bound: no samples");
  if (!(radius >= 0.0)) throw invalid_argument("gradient_bound: radius must be >= 0");
  double worst = 0.0;
  for (const auto& agent : data.agents)
    for (const auto& s : agent.samples) {
      const double norm = std::sqrt(s.features.squared_norm());
      const double g = kind == loss_kind::logistic ? norm : norm * (norm * radius + std::abs(s.label));
      worst = std::max(worst, g);
    }
  return worst;
}

}  // namespace dpgrr

#endif  // DPGRR_OBJECTIVES_HPP
