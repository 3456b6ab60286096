#ifndef DPGRR_SAMPLING_HPP
#define DPGRR_SAMPLING_HPP

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dpgrr/error.hpp"
#include "dpgrr/rng.hpp"

namespace dpgrr {

/// RR draws a fresh permutation every epoch, IG reuses one permutation for
/// all epochs, SG draws n indices with replacement.
enum class sampling_mode { rr, ig, sg };

inline std::string to_string(sampling_mode m) {
  switch (m) {
    case sampling_mode::rr: return "RR";
    case sampling_mode::ig: return "IG";
    case sampling_mode::sg: return "SG";
  }
  return "?";
}

inline void fisher_yates(std::vector<std::size_t>& idx, keyed_stream& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
}

/// Index schedule of one agent. Sequences are keyed by (seed, epoch) so any
/// epoch can be regenerated without replaying earlier ones.
class sampling_schedule {
 public:
  sampling_schedule(sampling_mode mode, std::size_t n, std::uint64_t seed) : mode_(mode), n_(n), seed_(seed) {
    if (mode_ == sampling_mode::ig) {
      fixed_.resize(n_);
      std::iota(fixed_.begin(), fixed_.end(), std::size_t{0});
      keyed_stream rng{seed_, 0x16ULL};
      fisher_yates(fixed_, rng);
    }
  }

  // Per-agent schedule derived from an experiment-wide seed.
  static sampling_schedule for_agent(sampling_mode mode, std::size_t n, std::uint64_t master_seed, std::size_t agent) {
    return sampling_schedule(mode, n, derive_key({master_seed, static_cast<std::uint64_t>(agent)}));
  }

  sampling_mode mode() const noexcept { return mode_; }
  std::size_t n() const noexcept { return n_; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::vector<std::size_t> epoch_indices(std::uint64_t epoch) const {
    std::vector<std::size_t> out;
    epoch_indices(epoch, out);
    return out;
  }

  void epoch_indices(std::uint64_t epoch, std::vector<std::size_t>& out) const {
    switch (mode_) {
      case sampling_mode::ig: out = fixed_; return;
      case sampling_mode::rr: {
        out.resize(n_);
        std::iota(out.begin(), out.end(), std::size_t{0});
        keyed_stream rng{seed_, 0x22ULL, epoch};
        fisher_yates(out, rng);
        return;
      }
      case sampling_mode::sg: {
        out.resize(n_);
        keyed_stream rng{seed_, 0x56ULL, epoch};
        for (auto& i : out) i = static_cast<std::size_t>(rng.below(n_));
        return;
      }
    }
  }

 private:
  sampling_mode mode_;
  std::size_t n_;
  std::uint64_t seed_;
  std::vector<std::size_t> fixed_;
};

struct prefix_stats {
  Eigen::VectorXd mean_of_prefix_average;  // E[X_bar_pi]
  double mean_squared_deviation = 0.0;     // E[||X_bar_pi - X_bar||^2]
  Eigen::VectorXd population_mean;         // X_bar
  double population_variance = 0.0;        // sigma^2 = (1/n) sum ||X_i - X_bar||^2
  std::uint64_t draws = 0;
  bool exhaustive = false;

  // Closed form for sampling without replacement: (n-k)/(k(n-1)) sigma^2.
  double predicted_deviation(std::size_t n, std::size_t k) const {
    return static_cast<double>(n - k) / (static_cast<double>(k) * static_cast<double>(n - 1)) * population_variance;
  }
};

/// Statistics of the average of the first k of n vectors drawn without
/// replacement. Enumerates all n!/(n-k)! ordered prefixes when n <= 6 (or
/// trials == 0), otherwise averages over `trials` random permutations.
inline prefix_stats prefix_average_stats(const std::vector<Eigen::VectorXd>& values, std::size_t k,
                                         std::uint64_t trials = 0, std::uint64_t seed = 0) {
  const std::size_t n = values.size();
  if (n < 2) throw invalid_argument("prefix_average_stats: need at least two values");
  if (k < 1 || k > n) throw bad_k("prefix_average_stats: k must lie in [1, n]");
  const auto d = values.front().size();
  for (const auto& v : values)
    if (v.size() != d) throw dimension_mismatch("prefix_average_stats: vectors differ in size");

  prefix_stats st;
  Eigen::VectorXd total = Eigen::VectorXd::Zero(d);
  for (const auto& v : values) total += v;
  st.population_mean = total / static_cast<double>(n);
  for (const auto& v : values) st.population_variance += (v - st.population_mean).squaredNorm();
  st.population_variance /= static_cast<double>(n);

  // Sums of prefixes are accumulated before any division so that integer
  // inputs give exact means.
  Eigen::VectorXd sum_of_prefix_sums = Eigen::VectorXd::Zero(d);
  long double sq_dev = 0.0L;
  auto account = [&](const Eigen::VectorXd& prefix_sum) {
    sum_of_prefix_sums += prefix_sum;
    sq_dev += (prefix_sum / static_cast<double>(k) - st.population_mean).squaredNorm();
    ++st.draws;
  };

  if (trials == 0 || n <= 6) {
    st.exhaustive = true;
    std::vector<char> used(n, 0);
    Eigen::VectorXd prefix = Eigen::VectorXd::Zero(d);
    auto recurse = [&](auto&& self, std::size_t depth) -> void {
      if (depth == k) {
        account(prefix);
        return;
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (used[i]) continue;
        used[i] = 1;
        const Eigen::VectorXd saved = prefix;
        prefix += values[i];
        self(self, depth + 1);
        prefix = saved;
        used[i] = 0;
      }
    };
    recurse(recurse, 0);
  } else {
    std::vector<std::size_t> perm(n);
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      keyed_stream rng{seed, trial};
      fisher_yates(perm, rng);
      Eigen::VectorXd prefix = Eigen::VectorXd::Zero(d);
      for (std::size_t i = 0; i < k; ++i) prefix += values[perm[i]];
      account(prefix);
    }
  }

  st.mean_of_prefix_average = sum_of_prefix_sums / (static_cast<double>(st.draws) * static_cast<double>(k));
  st.mean_squared_deviation = static_cast<double>(sq_dev / static_cast<long double>(st.draws));
  return st;
}

}  // namespace dpgrr

#endif  // DPGRR_SAMPLING_HPP
