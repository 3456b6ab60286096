#ifndef DPGRR_DATAIO_HPP
#define DPGRR_DATAIO_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dpgrr/error.hpp"
#include "dpgrr/metrics.hpp"
#include "dpgrr/objectives.hpp"
#include "dpgrr/rng.hpp"
#include "dpgrr/sampling.hpp"

namespace dpgrr {

struct libsvm_data {
  std::vector<sample> samples;
  std::size_t dim = 0;  // largest 1-based index seen
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_number(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc{} && ptr == end && std::isfinite(out);
}

}  // namespace detail

/// Reads LIBSVM/SVMlight text: "label idx:val idx:val ...", 1-based
/// indices. Blank lines and anything after '#' are ignored. With
/// `classification` set, labels must be +1 or -1.
inline libsvm_data parse_libsvm(std::istream& in, bool classification = true) {
  libsvm_data out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view body(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = detail::trim(body);
    if (body.empty()) continue;

    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < body.size()) {
      const auto start = body.find_first_not_of(" \t", pos);
      if (start == std::string_view::npos) break;
      auto stop = body.find_first_of(" \t", start);
      if (stop == std::string_view::npos) stop = body.size();
      tokens.push_back(body.substr(start, stop - start));
      pos = stop;
    }

    sample s;
    if (!detail::parse_number(tokens.front(), s.label))
      throw parse_error(lineno, "malformed label '" + std::string(tokens.front()) + "'");
    if (classification && s.label != 1.0 && s.label != -1.0)
      throw label_error("line " + std::to_string(lineno) + ": label '" + std::string(tokens.front()) +
                        "' is not +1 or -1");

    std::vector<std::pair<std::uint32_t, double>> entries;
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      const auto tok = tokens[k];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) throw parse_error(lineno, "expected idx:val, got '" + std::string(tok) + "'");
      std::uint64_t idx = 0;
      const auto idx_tok = tok.substr(0, colon);
      auto [ptr, ec] = std::from_chars(idx_tok.data(), idx_tok.data() + idx_tok.size(), idx);
      if (ec != std::errc{} || ptr != idx_tok.data() + idx_tok.size() || idx == 0 ||
          idx > std::numeric_limits<std::uint32_t>::max())
        throw parse_error(lineno, "bad feature index in '" + std::string(tok) + "'");
      double val = 0.0;
      if (!detail::parse_number(tok.substr(colon + 1), val))
        throw parse_error(lineno, "bad feature value in '" + std::string(tok) + "'");
      entries.emplace_back(static_cast<std::uint32_t>(idx - 1), val);
    }
    std::sort(entries.begin(), entries.end());
    for (std::size_t k = 1; k < entries.size(); ++k)
      if (entries[k].first == entries[k - 1].first)
        throw parse_error(lineno, "duplicate feature index " + std::to_string(entries[k].first + 1));
    for (auto [i, v] : entries) {
      s.features.index.push_back(i);
      s.features.value.push_back(v);
    }
    out.dim = std::max(out.dim, s.features.min_dim());
    out.samples.push_back(std::move(s));
  }
  return out;
}

inline void write_libsvm(std::ostream& os, const std::vector<sample>& samples, bool classification = true) {
  for (const auto& s : samples) {
    if (classification)
      os << (s.label > 0 ? "+1" : "-1");
    else
      os << format_double(s.label);
    for (std::size_t k = 0; k < s.features.nnz(); ++k)
      os << ' ' << (s.features.index[k] + 1) << ':' << format_double(s.features.value[k]);
    os << '\n';
  }
}

enum class partition_strategy { round_robin, contiguous };

struct partition_options {
  partition_strategy strategy = partition_strategy::round_robin;
  bool pre_shuffle = true;
  std::uint64_t seed = 0;
};

struct partition_result {
  partitioned_data data;
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t dropped = 0;
  // Position in the input of every sample an agent received.
  std::vector<std::vector<std::size_t>> source;
};

/// Equal split: n = floor(N / m) samples per agent, the remainder dropped.
inline partition_result partition(const std::vector<sample>& samples, std::size_t dim, std::size_t m,
                                  const partition_options& opt = {}) {
  if (m == 0) throw invalid_argument("partition: m must be >= 1");
  if (samples.size() < m) throw too_few_samples("partition: fewer samples than agents");

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (opt.pre_shuffle) {
    keyed_stream rng{opt.seed, 0x9a27ULL};
    fisher_yates(order, rng);
  }

  partition_result r;
  r.m = m;
  r.n = samples.size() / m;
  r.dropped = samples.size() - r.m * r.n;
  r.source.assign(m, {});
  r.data.dim = dim;
  r.data.agents.resize(m);
  for (std::size_t j = 0; j < m; ++j) r.data.agents[j].agent = j;

  for (std::size_t k = 0; k < r.m * r.n; ++k) {
    const std::size_t j = opt.strategy == partition_strategy::round_robin ? k % m : k / r.n;
    r.source[j].push_back(order[k]);
    r.data.agents[j].samples.push_back(samples[order[k]]);
  }
  return r;
}

struct synthetic_problem {
  partitioned_data data;
  vec true_weight;
};

/// Seeded binary classification data. Features are uniform on the unit
/// sphere, the true weight w is a unit vector, and labels are
/// sign(<a, w> + noise) with noise standard deviation 1 / (sqrt(d) * separation),
/// i.e. `separation` is the ratio of margin spread to noise spread. An
/// infinite separation gives noise-free, linearly separable labels.
inline synthetic_problem synthesize_classification(std::size_t m, std::size_t n, std::size_t d, double separation,
                                                   std::uint64_t seed) {
  if (m == 0 || n == 0 || d == 0) throw invalid_argument("synthesize_classification: counts must be >= 1");
  if (!(separation > 0.0)) throw invalid_argument("synthesize_classification: separation must be > 0");

  synthetic_problem p;
  const auto dd = static_cast<Eigen::Index>(d);
  auto unit_gaussian = [dd](keyed_stream& rng) {
    vec g(dd);
    do {
      for (Eigen::Index k = 0; k < dd; ++k) g[k] = rng.normal();
    } while (g.norm() == 0.0);
    return vec(g / g.norm());
  };
  keyed_stream wgen{seed, 0x77ULL};
  p.true_weight = unit_gaussian(wgen);

  const double noise_sd = std::isinf(separation) ? 0.0 : 1.0 / (std::sqrt(static_cast<double>(d)) * separation);
  p.data.dim = d;
  p.data.agents.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    p.data.agents[j].agent = j;
    for (std::size_t i = 0; i < n; ++i) {
      keyed_stream rng{seed, 0xa9ULL, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(i)};
      const vec a = unit_gaussian(rng);
      const double noise = noise_sd > 0.0 ? noise_sd * rng.normal() : 0.0;
      sample s;
      s.label = a.dot(p.true_weight) + noise >= 0.0 ? 1.0 : -1.0;
      for (Eigen::Index k = 0; k < dd; ++k) {
        s.features.index.push_back(static_cast<std::uint32_t>(k));
        s.features.value.push_back(a[k]);
      }
      p.data.agents[j].samples.push_back(std::move(s));
    }
  }
  return p;
}

}  // namespace dpgrr

#endif  // DPGRR_DATAIO_HPP
