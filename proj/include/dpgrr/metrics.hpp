#ifndef DPGRR_METRICS_HPP
#define DPGRR_METRICS_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dpgrr/error.hpp"
#include "dpgrr/netgraph.hpp"
#include "dpgrr/objectives.hpp"

namespace dpgrr {

/// Network average (1/m) sum_j x_j. Summed in extended precision so that m
/// identical vectors average back to exactly that vector.
inline vec network_average(const std::vector<vec>& xs) {
  if (xs.empty()) throw empty_data("network_average: no vectors");
  const auto d = xs.front().size();
  vec out(d);
  const auto m = static_cast<long double>(xs.size());
  for (Eigen::Index k = 0; k < d; ++k) {
    long double acc = 0.0L;
    for (const auto& x : xs) acc += x[k];
    out[k] = static_cast<double>(acc / m);
  }
  return out;
}

/// D(x) = sum_i x_i' sum_j a_ij (x_i - x_j). The Laplacian quadratic form of
/// the weight graph; zero iff all x_i agree (for connected support).
inline double consensus_quantity(const std::vector<vec>& xs, const mixing_matrix& a) {
  if (xs.size() != a.size()) throw dimension_mismatch("consensus_quantity: agent count != matrix size");
  for (const auto& x : xs)
    if (x.size() != xs.front().size()) throw dimension_mismatch("consensus_quantity: vector sizes differ");
  long double total = 0.0L;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const double w = a(i, j);
      if (w == 0.0 || i == j) continue;
      total += static_cast<long double>(w) * xs[i].dot(xs[i] - xs[j]);
    }
  return static_cast<double>(total);
}

inline double max_consensus_distance(const std::vector<vec>& xs, const vec& avg) {
  double worst = 0.0;
  for (const auto& x : xs) worst = std::max(worst, (x - avg).norm());
  return worst;
}

/// sigma*^2 = (1/n) sum_i ||g_i - g_bar||^2 with g_i = (1/m) sum_j grad f_{j,i}(x),
/// evaluated at the reference optimum.
inline double shuffling_variance(const partitioned_data& data, loss_kind kind, const vec& x_star) {
  data.check();
  const std::size_t n = data.n();
  const auto d = x_star.size();
  std::vector<vec> g(n, vec::Zero(d));
  for (const auto& agent : data.agents)
    for (std::size_t i = 0; i < n; ++i) {
      const auto e = evaluate_loss(kind, agent.samples[i], x_star);
      agent.samples[i].features.axpy_into(e.slope, g[i]);
    }
  vec mean = vec::Zero(d);
  for (auto& gi : g) {
    gi /= static_cast<double>(data.m());
    mean += gi;
  }
  mean /= static_cast<double>(n);
  long double acc = 0.0L;
  for (const auto& gi : g) acc += (gi - mean).squaredNorm();
  return static_cast<double>(acc / static_cast<long double>(n));
}

/// V_t = sum_{i<n} ||x_bar_t^i - x_bar_{t+1}||^2.
inline double forward_deviation(const std::vector<vec>& inner_averages, const vec& next_average) {
  if (inner_averages.empty()) throw missing_inner_trace("forward_deviation: inner averages were not recorded");
  long double acc = 0.0L;
  for (const auto& xi : inner_averages) {
    if (xi.size() != next_average.size()) throw dimension_mismatch("forward_deviation: size mismatch");
    acc += (xi - next_average).squaredNorm();
  }
  return static_cast<double>(acc);
}

struct epoch_metrics {
  std::uint64_t epoch = 0;
  double f_bar = 0.0;  // F(x_bar_t)
  double f_hat = 0.0;  // F(x_hat_t)
  std::optional<double> subopt;
  double consensus = 0.0;  // D(x_t)
  double max_consensus_dist = 0.0;
  std::optional<double> sigma_star_sq;
  std::optional<double> forward_dev;  // V_{t-1}
};

inline constexpr const char* metrics_csv_header = "epoch,F_bar,F_hat,subopt,D,max_consensus_dist,sigma_star_sq,V_t";

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv_row(const epoch_metrics& e) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; };
  std::string row = std::to_string(e.epoch);
  row += ',' + format_double(e.f_bar);
  row += ',' + format_double(e.f_hat);
  row += ',' + opt(e.subopt);
  row += ',' + format_double(e.consensus);
  row += ',' + format_double(e.max_consensus_dist);
  row += ',' + opt(e.sigma_star_sq);
  row += ',' + opt(e.forward_dev);
  return row;
}

inline void write_metrics_csv(std::ostream& os, const std::vector<epoch_metrics>& rows) {
  os << metrics_csv_header << '\n';
  for (const auto& r : rows) os << to_csv_row(r) << '\n';
}

}  // namespace dpgrr

#endif  // DPGRR_METRICS_HPP
