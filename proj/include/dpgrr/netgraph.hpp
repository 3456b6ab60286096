#ifndef DPGRR_NETGRAPH_HPP
#define DPGRR_NETGRAPH_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dpgrr/error.hpp"
#include "dpgrr/rng.hpp"

namespace dpgrr {

using edge = std::pair<std::size_t, std::size_t>;
using edge_list = std::vector<edge>;

/// Dense m x m weight matrix of one communication round.
class mixing_matrix {
 public:
  mixing_matrix() = default;
  explicit mixing_matrix(Eigen::MatrixXd weights) : w_(std::move(weights)) {
    if (w_.rows() != w_.cols()) throw dimension_mismatch("mixing matrix must be square");
  }

  static mixing_matrix identity(std::size_t m) {
    const auto n = static_cast<Eigen::Index>(m);
    return mixing_matrix(Eigen::MatrixXd::Identity(n, n));
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(w_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return w_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Eigen::MatrixXd& weights() const noexcept { return w_; }

  bool is_doubly_stochastic(double tol = 1e-12) const {
    if ((w_.array() < 0.0).any()) return false;
    const Eigen::VectorXd rows = w_.rowwise().sum();
    const Eigen::VectorXd cols = w_.colwise().sum().transpose();
    return (rows.array() - 1.0).abs().maxCoeff() <= tol && (cols.array() - 1.0).abs().maxCoeff() <= tol;
  }

  bool is_symmetric(double tol = 0.0) const { return (w_ - w_.transpose()).cwiseAbs().maxCoeff() <= tol; }

  // Diagonal and every positive off-diagonal entry at least eta.
  bool is_eta_bounded(double eta) const {
    for (Eigen::Index i = 0; i < w_.rows(); ++i)
      for (Eigen::Index j = 0; j < w_.cols(); ++j) {
        const double a = w_(i, j);
        if ((i == j || a > 0.0) && a < eta) return false;
      }
    return true;
  }

  // Undirected edges carried by the matrix (i < j with a nonzero weight either way).
  edge_list support() const {
    edge_list out;
    for (Eigen::Index i = 0; i < w_.rows(); ++i)
      for (Eigen::Index j = i + 1; j < w_.cols(); ++j)
        if (w_(i, j) != 0.0 || w_(j, i) != 0.0)
          out.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    return out;
  }

 private:
  Eigen::MatrixXd w_;
};

inline edge_list complete_edges(std::size_t m) {
  edge_list out;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) out.emplace_back(i, j);
  return out;
}

inline edge_list path_edges(std::size_t m) {
  edge_list out;
  for (std::size_t i = 0; i + 1 < m; ++i) out.emplace_back(i, i + 1);
  return out;
}

inline edge_list ring_edges(std::size_t m) {
  edge_list out = path_edges(m);
  if (m > 2) out.emplace_back(m - 1, 0);
  return out;
}

/// Metropolis-Hastings weights: a_ij = 1 / (1 + max(deg_i, deg_j)) on edges,
/// the diagonal takes the remainder of each row. Symmetric and doubly
/// stochastic for any undirected graph. Every positive entry is at least
/// 1/m, so an eta above that can be violated and is checked afterwards.
inline mixing_matrix metropolis_weights(const edge_list& edges, std::size_t m, double eta) {
  if (m == 0) throw empty_graph("metropolis_weights: graph has no agents");
  if (!(eta > 0.0) || !(eta < 1.0)) throw invalid_argument("metropolis_weights: eta must lie in (0, 1)");

  std::set<edge> unique;
  for (auto [i, j] : edges) {
    if (i >= m || j >= m) throw invalid_argument("metropolis_weights: edge endpoint out of range");
    if (i == j) throw invalid_argument("metropolis_weights: self-loop in edge list");
    unique.emplace(std::min(i, j), std::max(i, j));
  }

  std::vector<std::size_t> degree(m, 0);
  for (auto [i, j] : unique) {
    ++degree[i];
    ++degree[j];
  }

  const auto n = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (auto [i, j] : unique) {
    const double a = 1.0 / (1.0 + static_cast<double>(std::max(degree[i], degree[j])));
    w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a;
    w(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = a;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) off += w(i, j);
    w(i, i) = 1.0 - off;
  }

  mixing_matrix out(std::move(w));
  if (!out.is_eta_bounded(eta)) {
    std::ostringstream msg;
    msg << "metropolis_weights: a positive weight falls below eta=" << eta;
    throw eta_violation(msg.str());
  }
  return out;
}

// True when the union of the given edge sets connects all m agents.
inline bool union_connected(std::size_t m, const std::vector<edge_list>& edge_sets) {
  if (m <= 1) return true;
  std::vector<std::vector<std::size_t>> adj(m);
  for (const auto& es : edge_sets)
    for (auto [i, j] : es) {
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
  std::vector<char> seen(m, 0);
  std::vector<std::size_t> frontier{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const auto u = frontier.back();
    frontier.pop_back();
    for (auto v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        frontier.push_back(v);
      }
  }
  return reached == m;
}

/// Periodic sequence of mixing matrices. Communication step k uses
/// slot k mod P.
class graph_schedule {
 public:
  graph_schedule() = default;
  graph_schedule(std::vector<mixing_matrix> slots, std::size_t window, double eta)
      : slots_(std::move(slots)), window_(window), eta_(eta) {
    if (slots_.empty()) throw empty_graph("graph_schedule: no mixing matrices");
    for (const auto& s : slots_)
      if (s.size() != slots_.front().size()) throw dimension_mismatch("graph_schedule: slot sizes differ");
    if (window_ == 0) throw invalid_argument("graph_schedule: connectivity window B must be >= 1");
  }

  // Builds every slot from an edge list with Metropolis weights.
  static graph_schedule from_edges(std::size_t m, const std::vector<edge_list>& slots, std::size_t window,
                                   double eta) {
    std::vector<mixing_matrix> mats;
    mats.reserve(slots.size());
    for (const auto& es : slots) mats.push_back(metropolis_weights(es, m, eta));
    return graph_schedule(std::move(mats), window, eta);
  }

  std::size_t agents() const noexcept { return slots_.empty() ? 0 : slots_.front().size(); }
  std::size_t period() const noexcept { return slots_.size(); }
  std::size_t window() const noexcept { return window_; }
  double eta() const noexcept { return eta_; }
  const std::vector<mixing_matrix>& slots() const noexcept { return slots_; }
  const mixing_matrix& at(std::uint64_t step) const { return slots_[static_cast<std::size_t>(step % slots_.size())]; }

 private:
  std::vector<mixing_matrix> slots_;
  std::size_t window_ = 1;
  double eta_ = 0.0;
};

/// Seeded edge-dropout schedule: each slot keeps every edge of the complete
/// graph with probability keep_prob, and slot k always carries the path edges
/// congruent to k mod P so the union over any P consecutive slots is connected.
inline graph_schedule edge_dropout_schedule(std::size_t m, std::size_t period, double keep_prob, double eta,
                                            std::uint64_t seed) {
  if (period == 0) throw invalid_argument("edge_dropout_schedule: period must be >= 1");
  std::vector<edge_list> slots(period);
  keyed_stream rng{seed, 0xd40bULL};
  const auto path = path_edges(m);
  for (std::size_t k = 0; k < period; ++k) {
    std::set<edge> es;
    for (std::size_t p = k; p < path.size(); p += period) es.insert(path[p]);
    for (const auto& e : complete_edges(m))
      if (rng.uniform() < keep_prob) es.insert(e);
    slots[k].assign(es.begin(), es.end());
  }
  return graph_schedule::from_edges(m, slots, period, eta);
}

struct window_check {
  std::size_t first_slot = 0;
  bool connected = false;
};

struct matrix_check {
  std::size_t slot = 0;
  bool doubly_stochastic = false;
  bool symmetric = false;
  bool eta_bounded = false;
  bool ok() const noexcept { return doubly_stochastic && symmetric && eta_bounded; }
};

struct validation_report {
  std::size_t agents = 0;
  std::size_t window = 0;
  double eta = 0.0;
  std::vector<matrix_check> matrices;
  std::vector<window_check> windows;

  bool matrices_ok() const {
    return std::all_of(matrices.begin(), matrices.end(), [](const auto& c) { return c.ok(); });
  }
  bool connectivity_ok() const {
    return std::all_of(windows.begin(), windows.end(), [](const auto& w) { return w.connected; });
  }
  bool passed() const { return matrices_ok() && connectivity_ok(); }

  // Name of the first violated assumption, empty when everything passes.
  std::string first_failure() const {
    for (const auto& c : matrices) {
      if (!c.doubly_stochastic) return "doubly stochastic (slot " + std::to_string(c.slot) + ")";
      if (!c.symmetric) return "symmetric weights (slot " + std::to_string(c.slot) + ")";
      if (!c.eta_bounded) return "eta lower bound (slot " + std::to_string(c.slot) + ")";
    }
    for (const auto& w : windows)
      if (!w.connected) return "uniform connectivity (window starting at slot " + std::to_string(w.first_slot) + ")";
    return {};
  }

  std::string to_text() const {
    std::ostringstream os;
    os << "graph schedule: m=" << agents << " period=" << matrices.size() << " B=" << window << " eta=" << eta
       << "\n";
    for (const auto& c : matrices)
      os << "  slot " << c.slot << ": doubly_stochastic=" << (c.doubly_stochastic ? "yes" : "NO")
         << " symmetric=" << (c.symmetric ? "yes" : "NO") << " eta_bounded=" << (c.eta_bounded ? "yes" : "NO")
         << "\n";
    for (const auto& w : windows)
      os << "  window [" << w.first_slot << ", +" << window << "): union "
         << (w.connected ? "connected" : "DISCONNECTED") << "\n";
    os << "schedule: " << (passed() ? "PASS" : "FAIL: " + first_failure()) << "\n";
    return os.str();
  }
};

/// Checks every slot and every cyclic window of B consecutive slots. Since
/// the schedule is periodic, windows starting at slots 0..P-1 cover all
/// windows of the infinite sequence.
inline validation_report validate_schedule(const graph_schedule& s) {
  validation_report r;
  r.agents = s.agents();
  r.window = s.window();
  r.eta = s.eta();
  for (std::size_t k = 0; k < s.period(); ++k) {
    const auto& a = s.slots()[k];
    r.matrices.push_back({k, a.is_doubly_stochastic(1e-12), a.is_symmetric(1e-15), a.is_eta_bounded(s.eta())});
  }
  for (std::size_t k = 0; k < s.period(); ++k) {
    std::vector<edge_list> sets;
    for (std::size_t q = 0; q < s.window(); ++q) sets.push_back(s.at(k + q).support());
    r.windows.push_back({k, union_connected(s.agents(), sets)});
  }
  return r;
}

/// How many communication rounds an epoch performs. Growing: epoch t uses
/// t + 1 matrices. Fixed: every epoch uses K matrices.
struct steps_mode {
  enum class kind { growing, fixed };
  kind mode = kind::growing;
  std::size_t fixed_rounds = 1;

  static steps_mode growing() { return {kind::growing, 1}; }
  static steps_mode fixed(std::size_t k) {
    if (k == 0) throw invalid_argument("fixed communication mode needs K >= 1");
    return {kind::fixed, k};
  }

  std::uint64_t rounds(std::uint64_t epoch) const noexcept {
    return mode == kind::growing ? epoch + 1 : fixed_rounds;
  }
};

/// Mixing coefficients lambda_{jl} for one epoch.
struct consensus_weights {
  Eigen::MatrixXd lambda;
  std::uint64_t first_step = 0;  // communication-step counter before the epoch
  std::uint64_t rounds = 0;      // number of matrix factors
};

/// Walks the schedule epoch by epoch, keeping the running count of
/// communication steps performed so far.
class consensus_cursor {
 public:
  consensus_cursor(const graph_schedule& s, steps_mode mode) : schedule_(&s), mode_(mode) {}

  std::uint64_t steps_taken() const noexcept { return steps_; }
  std::uint64_t next_epoch() const noexcept { return epoch_; }

  // Product A(T+c) ... A(T+1) A(T) for the next epoch, then advances.
  consensus_weights advance() {
    consensus_weights out;
    out.first_step = steps_;
    out.rounds = mode_.rounds(epoch_);
    const auto m = static_cast<Eigen::Index>(schedule_->agents());
    out.lambda = Eigen::MatrixXd::Identity(m, m);
    for (std::uint64_t r = 0; r < out.rounds; ++r) out.lambda = schedule_->at(steps_ + r).weights() * out.lambda;
    steps_ += out.rounds;
    ++epoch_;
    return out;
  }

  // Skips an epoch's product without forming it.
  void skip() noexcept {
    steps_ += mode_.rounds(epoch_);
    ++epoch_;
  }

 private:
  const graph_schedule* schedule_;
  steps_mode mode_;
  std::uint64_t steps_ = 0;
  std::uint64_t epoch_ = 0;
};

inline consensus_weights consensus_weights_for_epoch(const graph_schedule& s, std::uint64_t epoch, steps_mode mode) {
  consensus_cursor cursor(s, mode);
  for (std::uint64_t t = 0; t < epoch; ++t) cursor.skip();
  return cursor.advance();
}

}  // namespace dpgrr

#endif  // DPGRR_NETGRAPH_HPP
