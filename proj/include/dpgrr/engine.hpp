#ifndef DPGRR_ENGINE_HPP
#define DPGRR_ENGINE_HPP

#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "dpgrr/error.hpp"
#include "dpgrr/metrics.hpp"
#include "dpgrr/netgraph.hpp"
#include "dpgrr/objectives.hpp"
#include "dpgrr/proxops.hpp"
#include "dpgrr/sampling.hpp"

namespace dpgrr {

/// DPG-RR and its sampler swaps share one engine; DGM is the subgradient
/// baseline with a single mixing round per epoch.
enum class algorithm { dpg_rr, dpg_sg, dpg_ig, dgm };

inline std::string to_string(algorithm a) {
  switch (a) {
    case algorithm::dpg_rr: return "DPG-RR";
    case algorithm::dpg_sg: return "DPG-SG";
    case algorithm::dpg_ig: return "DPG-IG";
    case algorithm::dgm: return "DGM";
  }
  return "?";
}

inline algorithm parse_algorithm(const std::string& name) {
  if (name == "DPG-RR") return algorithm::dpg_rr;
  if (name == "DPG-SG") return algorithm::dpg_sg;
  if (name == "DPG-IG") return algorithm::dpg_ig;
  if (name == "DGM") return algorithm::dgm;
  throw config_error("unknown algorithm '" + name + "' (expected DPG-RR, DPG-SG, DPG-IG or DGM)");
}

inline sampling_mode sampler_for(algorithm a) {
  switch (a) {
    case algorithm::dpg_sg: return sampling_mode::sg;
    case algorithm::dpg_ig: return sampling_mode::ig;
    default: return sampling_mode::rr;
  }
}

/// Largest admissible M in gamma = M / sqrt(T): sqrt(6) / (6 L n).
inline double theorem_step_bound(double lipschitz, std::size_t n) {
  return std::sqrt(6.0) / (6.0 * lipschitz * static_cast<double>(n));
}

struct step_rule {
  enum class kind { constant, theorem };
  kind rule = kind::constant;
  double gamma = 0.1;            // constant rule; DGM uses it as gamma_0
  std::optional<double> scale;  // theorem rule M; defaults to the bound

  static step_rule constant(double gamma) { return {kind::constant, gamma, std::nullopt}; }
  static step_rule theorem(std::optional<double> m = std::nullopt) { return {kind::theorem, 0.0, m}; }
};

struct agent_state {
  vec x;        // x_{j,t}
  vec x_inner;  // x_{j,t}^i, ends the epoch at x_{j,t}^n
  vec v;        // post-consensus v_{j,t}
};

/// Everything an algorithm run needs besides its own configuration.
struct problem {
  partitioned_data data;
  loss_kind loss = loss_kind::logistic;
  regularizer reg = regularizer::zero();
  graph_schedule graph;
  std::optional<double> f_star;
  std::optional<vec> x_star;
};

struct run_config {
  algorithm algo = algorithm::dpg_rr;
  std::uint64_t epochs = 100;
  step_rule step = step_rule::theorem();
  steps_mode comm = steps_mode::growing();
  std::uint64_t seed = 0;
  std::uint64_t snapshot_every = 0;  // 0 picks the default cadence
  bool keep_agent_iterates = false;
  bool enforce_step_bound = true;
  bool record_forward_deviation = false;
  bool record_shuffling_variance = false;
  std::optional<vec> x0;
  unsigned threads = 1;
};

struct epoch_record {
  vec x_bar;
  vec x_hat;
  std::vector<vec> agents;  // only with keep_agent_iterates
  epoch_metrics metrics;
};

struct run_trace {
  algorithm algo = algorithm::dpg_rr;
  double step = 0.0;
  double lipschitz = 0.0;
  double step_bound = 0.0;  // sqrt(6)/(6Ln)
  bool step_bound_ok = true;
  std::vector<epoch_record> records;
  std::vector<vec> final_agents;

  std::vector<epoch_metrics> metrics() const {
    std::vector<epoch_metrics> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.metrics);
    return out;
  }
};

inline std::uint64_t default_snapshot_cadence(std::uint64_t epochs) {
  return epochs <= 2000 ? 1 : (epochs + 1999) / 2000;
}

namespace detail {

// Runs fn(j) for every agent, split over up to `threads` workers. Agents
// never share mutable state, so the result is independent of the split.
inline void for_each_agent(std::size_t m, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || m <= 1) {
    for (std::size_t j = 0; j < m; ++j) fn(j);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, m);
  std::vector<std::exception_ptr> failures(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t j = w; j < m; j += workers) fn(j);
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
}

[[noreturn]] inline void report_non_finite(std::size_t agent, std::uint64_t epoch, const std::string& where) {
  std::ostringstream msg;
  msg << "non-finite iterate at agent " << agent << ", epoch " << epoch << ", " << where;
  throw non_finite_iterate(msg.str());
}

}  // namespace detail

/// One DPG-RR epoch over all agents: n local gradient steps along each
/// agent's index sequence, multi-round mixing of the results, then a prox.
/// `inner_averages`, when given, receives the n network averages
/// x_bar_t^0 .. x_bar_t^{n-1}.
inline void run_epoch_dpgrr(std::vector<agent_state>& states, const partitioned_data& data, loss_kind loss,
                            const regularizer& reg, double step, consensus_cursor& cursor,
                            const std::vector<sampling_schedule>& samplers, std::uint64_t epoch,
                            std::vector<vec>* inner_averages = nullptr, unsigned threads = 1) {
  if (!(step > 0.0)) throw non_positive_step("run_epoch_dpgrr: step must be > 0");
  const std::size_t m = data.m();
  if (states.size() != m || samplers.size() != m) throw dimension_mismatch("run_epoch_dpgrr: agent count mismatch");

  const bool trace = inner_averages != nullptr;
  std::vector<std::vector<vec>> inner(trace ? m : 0);

  detail::for_each_agent(m, threads, [&](std::size_t j) {
    auto& st = states[j];
    const auto& local = data.agents[j].samples;
    const auto order = samplers[j].epoch_indices(epoch);
    st.x_inner = st.x;
    if (trace) inner[j].reserve(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (trace) inner[j].push_back(st.x_inner);
      const auto& s = local[order[i]];
      const auto e = evaluate_loss(loss, s, st.x_inner);
      s.features.axpy_into(-step * e.slope, st.x_inner);
      if (!st.x_inner.allFinite()) detail::report_non_finite(j, epoch, "inner step " + std::to_string(i));
    }
  });

  if (trace) {
    const std::size_t n = data.n();
    inner_averages->assign(n, vec());
    std::vector<vec> column(m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) column[j] = inner[j][i];
      (*inner_averages)[i] = network_average(column);
    }
  }

  const auto weights = cursor.advance();
  for (std::size_t j = 0; j < m; ++j) {
    vec v = vec::Zero(states[j].x.size());
    for (std::size_t l = 0; l < m; ++l) {
      const double w = weights.lambda(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l));
      if (w != 0.0) v += w * states[l].x_inner;
    }
    states[j].v = std::move(v);
  }

  detail::for_each_agent(m, threads, [&](std::size_t j) {
    states[j].x = prox(reg, step, states[j].v);
    if (!states[j].x.allFinite()) detail::report_non_finite(j, epoch, "prox step");
  });
}

/// One DGM epoch: a single mixing round with the matrix at the cursor, then
/// a subgradient step on sum_i f_{j,i} + phi at the mixed point.
inline void run_epoch_dgm(std::vector<agent_state>& states, const partitioned_data& data, loss_kind loss,
                          const regularizer& reg, double step, consensus_cursor& cursor, std::uint64_t epoch,
                          unsigned threads = 1) {
  if (!(step > 0.0)) throw non_positive_step("run_epoch_dgm: step must be > 0");
  const std::size_t m = data.m();
  if (states.size() != m) throw dimension_mismatch("run_epoch_dgm: agent count mismatch");

  const auto weights = cursor.advance();
  for (std::size_t j = 0; j < m; ++j) {
    vec v = vec::Zero(states[j].x.size());
    for (std::size_t l = 0; l < m; ++l) {
      const double w = weights.lambda(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l));
      if (w != 0.0) v += w * states[l].x;
    }
    states[j].v = std::move(v);
  }

  detail::for_each_agent(m, threads, [&](std::size_t j) {
    auto& st = states[j];
    vec g = subgradient(reg, st.v);
    for (const auto& s : data.agents[j].samples) s.features.axpy_into(evaluate_loss(loss, s, st.v).slope, g);
    st.x = st.v - step * g;
    st.x_inner = st.x;
    if (!st.x.allFinite()) detail::report_non_finite(j, epoch, "subgradient step");
  });
}

/// Step size actually used, with the bound check of the theorem rule.
struct resolved_step {
  double gamma = 0.0;
  double lipschitz = 0.0;
  double bound = 0.0;
  bool within_bound = true;
};

inline resolved_step resolve_step(const step_rule& rule, const partitioned_data& data, loss_kind loss,
                                  std::uint64_t epochs) {
  resolved_step out;
  out.lipschitz = lipschitz_constant(data, loss);
  out.bound = theorem_step_bound(out.lipschitz, data.n());
  if (rule.rule == step_rule::kind::constant) {
    out.gamma = rule.gamma;
  } else {
    const double scale = rule.scale.value_or(out.bound);
    out.within_bound = scale <= out.bound * (1.0 + 1e-12);
    out.gamma = scale / std::sqrt(static_cast<double>(std::max<std::uint64_t>(epochs, 1)));
  }
  if (!(out.gamma > 0.0) || !std::isfinite(out.gamma)) throw non_positive_step("step size must be finite and > 0");
  return out;
}

/// Runs the configured algorithm for cfg.epochs epochs, recording metrics at
/// epoch 0, every snapshot_every epochs, and at the last epoch.
inline run_trace run(const run_config& cfg, const problem& p) {
  p.data.check();
  const std::size_t m = p.data.m();
  const std::size_t d = p.data.dim;
  if (p.graph.agents() != m) throw dimension_mismatch("run: graph size differs from agent count");
  if (cfg.x0 && static_cast<std::size_t>(cfg.x0->size()) != d) throw dimension_mismatch("run: x0 has wrong size");
  if (cfg.record_shuffling_variance && !p.x_star)
    throw invalid_argument("run: shuffling variance needs a reference solution");

  const auto step = resolve_step(cfg.step, p.data, p.loss, cfg.epochs);
  if (cfg.step.rule == step_rule::kind::theorem && !step.within_bound && cfg.enforce_step_bound)
    throw config_error("step-size bound violated: M exceeds sqrt(6)/(6Ln)");

  run_trace trace;
  trace.algo = cfg.algo;
  trace.step = step.gamma;
  trace.lipschitz = step.lipschitz;
  trace.step_bound = step.bound;
  trace.step_bound_ok = step.within_bound;

  const vec start = cfg.x0.value_or(vec::Zero(static_cast<Eigen::Index>(d)));
  std::vector<agent_state> states(m, agent_state{start, start, start});
  std::vector<sampling_schedule> samplers;
  samplers.reserve(m);
  for (std::size_t j = 0; j < m; ++j)
    samplers.push_back(sampling_schedule::for_agent(sampler_for(cfg.algo), p.data.n(), cfg.seed, j));

  const bool dgm = cfg.algo == algorithm::dgm;
  consensus_cursor cursor(p.graph, dgm ? steps_mode::fixed(1) : cfg.comm);
  const auto& probe = p.graph.slots().front();
  const std::optional<double> sigma =
      cfg.record_shuffling_variance ? std::optional<double>(shuffling_variance(p.data, p.loss, *p.x_star))
                                    : std::nullopt;
  const std::uint64_t cadence = cfg.snapshot_every ? cfg.snapshot_every : default_snapshot_cadence(cfg.epochs);
  const bool want_v = cfg.record_forward_deviation && !dgm;

  vec hat_sum = vec::Zero(static_cast<Eigen::Index>(d));
  std::vector<vec> xs(m);
  std::vector<vec> inner_avgs;

  auto record = [&](std::uint64_t t, const std::optional<double>& v_prev) {
    for (std::size_t j = 0; j < m; ++j) xs[j] = states[j].x;
    epoch_record rec;
    rec.x_bar = network_average(xs);
    rec.x_hat = t == 0 ? rec.x_bar : vec(hat_sum / static_cast<double>(t));
    if (cfg.keep_agent_iterates) rec.agents = xs;
    auto& e = rec.metrics;
    e.epoch = t;
    e.f_bar = full_objective(p.data, p.reg, p.loss, rec.x_bar);
    e.f_hat = t == 0 ? e.f_bar : full_objective(p.data, p.reg, p.loss, rec.x_hat);
    if (p.f_star) e.subopt = e.f_hat - *p.f_star;
    e.consensus = consensus_quantity(xs, probe);
    e.max_consensus_dist = max_consensus_distance(xs, rec.x_bar);
    e.sigma_star_sq = sigma;
    e.forward_dev = v_prev;
    trace.records.push_back(std::move(rec));
  };

  record(0, std::nullopt);
  for (std::uint64_t t = 0; t < cfg.epochs; ++t) {
    try {
      if (dgm)
        run_epoch_dgm(states, p.data, p.loss, p.reg, step.gamma / std::sqrt(static_cast<double>(t + 1)), cursor, t,
                      cfg.threads);
      else
        run_epoch_dpgrr(states, p.data, p.loss, p.reg, step.gamma, cursor, samplers, t,
                        want_v ? &inner_avgs : nullptr, cfg.threads);
    } catch (const non_finite_iterate& ex) {
      throw non_finite_iterate(to_string(cfg.algo) + ": " + ex.what());
    }

    for (std::size_t j = 0; j < m; ++j) xs[j] = states[j].x;
    const vec avg = network_average(xs);
    hat_sum += avg;

    const std::uint64_t done = t + 1;
    if (done % cadence == 0 || done == cfg.epochs) {
      std::optional<double> v_prev;
      if (want_v) v_prev = forward_deviation(inner_avgs, avg);
      record(done, v_prev);
    }
  }
  for (const auto& st : states) trace.final_agents.push_back(st.x);
  return trace;
}

}  // namespace dpgrr

#endif  // DPGRR_ENGINE_HPP
