// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: acceptance [output-dir] [--only N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dpgrr/experiment.hpp"

namespace fs = std::filesystem;
using namespace dpgrr;

namespace {

struct outcome {
  bool pass = false;
  std::string detail;
};

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

vec random_vec(keyed_stream& rng, Eigen::Index d, double scale = 1.0) {
  vec v(d);
  for (Eigen::Index k = 0; k < d; ++k) v[k] = scale * rng.normal();
  return v;
}

// 1. Prefix averages of a uniform permutation.
outcome criterion_sampling() {
  const auto t0 = clock_type::now();
  keyed_stream rng{0xacc1};
  std::size_t cases = 0;
  double worst_mean = 0, worst_dev = 0;
  bool integer_exact = true;
  for (std::size_t n = 2; n <= 6; ++n)
    for (int set = 0; set < 20; ++set) {
      const bool integral = set % 2 == 0;
      std::vector<vec> xs;
      for (std::size_t i = 0; i < n; ++i) {
        vec v = random_vec(rng, 3, 5.0);
        if (integral) v = v.array().round();
        xs.push_back(v);
      }
      for (std::size_t k = 1; k <= n; ++k) {
        const auto st = prefix_average_stats(xs, k);
        ++cases;
        const double scale = std::max(1.0, st.population_mean.cwiseAbs().maxCoeff());
        const double mean_err = (st.mean_of_prefix_average - st.population_mean).cwiseAbs().maxCoeff();
        if (integral && mean_err != 0.0) integer_exact = false;
        worst_mean = std::max(worst_mean, mean_err / scale);
        worst_dev = std::max(worst_dev, std::abs(st.mean_squared_deviation - st.predicted_deviation(n, k)) /
                                            std::max(1.0, st.population_variance));
      }
    }
  const double secs = seconds_since(t0);
  const bool pass = integer_exact && worst_mean <= 1e-12 && worst_dev <= 1e-12 && secs < 10.0;
  return {pass, std::to_string(cases) + " exhaustive cases, integer means exact=" + (integer_exact ? "yes" : "no") +
                    ", max mean err " + fmt("%.2e", worst_mean) + ", max deviation err " + fmt("%.2e", worst_dev) +
                    ", " + fmt("%.2f", secs) + " s"};
}

// Minimizer of lam|z| + (z - x)^2 / (2 step) by bisection on the sign of the
// right derivative.
double l1_scalar_minimizer(double x, double step, double lam) {
  auto right_derivative = [&](double z) { return (z - x) / step + (z >= 0 ? lam : -lam); };
  double lo = -std::abs(x) - step * lam - 1.0, hi = std::abs(x) + step * lam + 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (right_derivative(mid) > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// 2. Soft-thresholding and nonexpansiveness.
outcome criterion_prox() {
  const auto t0 = clock_type::now();
  keyed_stream rng{0xacc2};
  double worst = 0;
  for (int c = 0; c < 1000; ++c) {
    const vec x = random_vec(rng, 5, 3.0);
    const double step = std::exp(rng.normal()), lam = std::exp(rng.normal() - 1.0);
    const vec z = prox(regularizer::l1(lam), step, x);
    for (Eigen::Index k = 0; k < x.size(); ++k)
      worst = std::max(worst, std::abs(z[k] - l1_scalar_minimizer(x[k], step, lam)));
  }
  std::size_t violations = 0;
  for (int c = 0; c < 1000; ++c) {
    const double step = std::exp(rng.normal()), lam = std::exp(rng.normal() - 1.0);
    const vec x = random_vec(rng, 5, 3.0), y = random_vec(rng, 5, 3.0);
    for (const auto& reg : {regularizer::l1(lam), regularizer::squared_l2(lam), regularizer::zero()})
      if ((prox(reg, step, x) - prox(reg, step, y)).norm() > (x - y).norm() * (1 + 1e-15)) ++violations;
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && violations == 0 && secs < 5.0,
          "max |prox - 1-D minimizer| " + fmt("%.2e", worst) + " over 1000 cases, nonexpansive violations " +
              std::to_string(violations) + "/3000, " + fmt("%.2f", secs) + " s"};
}

// 3. Mixing products stay doubly stochastic; a connected static graph averages.
outcome criterion_mixing() {
  keyed_stream rng{0xacc3};
  std::size_t products = 0, bad = 0;
  for (int s = 0; s < 100; ++s) {
    const std::size_t m = 2 + rng.below(9), period = 1 + rng.below(4);
    const auto sched = edge_dropout_schedule(m, period, 0.3 * rng.uniform(), 0.05, static_cast<std::uint64_t>(s));
    if (!validate_schedule(sched).passed()) {
      ++bad;
      continue;
    }
    for (const auto mode : {steps_mode::growing(), steps_mode::fixed(1 + rng.below(3))}) {
      consensus_cursor cursor(sched, mode);
      for (int t = 0; t < 12; ++t) {
        const auto w = cursor.advance();
        ++products;
        if (!mixing_matrix(w.lambda).is_doubly_stochastic(1e-10)) ++bad;
      }
    }
  }
  std::size_t static_fail = 0, static_cases = 0, worst_factors = 0;
  for (std::size_t m = 2; m <= 10; ++m)
    for (const auto& edges : {ring_edges(m), complete_edges(m)}) {
      ++static_cases;
      const graph_schedule sched({metropolis_weights(edges, m, 0.05)}, 1, 0.05);
      consensus_cursor cursor(sched, steps_mode::fixed(1));
      Eigen::MatrixXd lambda = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
      std::size_t factors = 0;
      while (factors < 200 && (lambda.array() - 1.0 / static_cast<double>(m)).abs().maxCoeff() >= 1e-6) {
        lambda = cursor.advance().lambda * lambda;
        ++factors;
      }
      if ((lambda.array() - 1.0 / static_cast<double>(m)).abs().maxCoeff() >= 1e-6) ++static_fail;
      worst_factors = std::max(worst_factors, factors);
    }
  return {bad == 0 && static_fail == 0,
          std::to_string(products) + " products over 100 schedules, " + std::to_string(bad) +
              " not doubly stochastic; static ring/complete m=2..10: " + std::to_string(static_cases - static_fail) +
              "/" + std::to_string(static_cases) + " reach 1e-6, worst " + std::to_string(worst_factors) +
              " factors"};
}

// Loss values recomputed in long double for the difference quotient.
long double reference_loss(loss_kind kind, const sample& s, const vec& x) {
  long double margin = 0;
  for (std::size_t k = 0; k < s.features.nnz(); ++k)
    margin += static_cast<long double>(s.features.value[k]) * x[s.features.index[k]];
  if (kind == loss_kind::logistic) {
    const long double z = -s.label * margin;
    return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }
  const long double r = margin - s.label;
  return 0.5L * r * r;
}

// 4. Per-sample gradients against central differences.
outcome criterion_gradients() {
  keyed_stream rng{0xacc4};
  const double h = 1e-6;
  double worst = 0;
  std::size_t failures = 0;
  for (int c = 0; c < 500; ++c) {
    const auto dd = static_cast<Eigen::Index>(1 + rng.below(12));
    const vec a = random_vec(rng, dd, 1.0 / std::sqrt(static_cast<double>(dd)));
    sample s;
    for (Eigen::Index k = 0; k < dd; ++k) {
      s.features.index.push_back(static_cast<std::uint32_t>(k));
      s.features.value.push_back(a[k]);
    }
    const vec x = random_vec(rng, dd, 2.0);
    for (const auto kind : {loss_kind::logistic, loss_kind::least_squares}) {
      s.label = kind == loss_kind::logistic ? (rng.uniform() < 0.5 ? 1.0 : -1.0) : rng.normal();
      const vec g = sample_value_grad(kind, s, x).second;
      vec fd(dd);
      for (Eigen::Index k = 0; k < dd; ++k) {
        vec xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        fd[k] = static_cast<double>((reference_loss(kind, s, xp) - reference_loss(kind, s, xm)) / (2 * h));
      }
      const double rel = (g - fd).norm() / std::max(g.norm(), 1e-6);
      worst = std::max(worst, rel);
      if (rel > 1e-5) ++failures;
    }
  }
  return {failures == 0, "1000 gradient checks (500 points x 2 losses), max relative error " + fmt("%.2e", worst)};
}

struct canonical_setup {
  experiment_config cfg;
  problem prob;
};

canonical_setup load_canonical(const fs::path& configs) {
  canonical_setup s;
  s.cfg = load_config(configs / "canonical.json");
  s.prob = build_problem(s.cfg).prob;
  const auto sol = solve_centralized(s.prob.data, s.prob.reg, s.prob.loss, 1e-10);
  if (!sol.converged) throw error("canonical oracle did not converge");
  s.prob.f_star = sol.f_star;
  s.prob.x_star = sol.x_star;
  return s;
}

run_trace run_canonical(const canonical_setup& s, std::uint64_t seed, std::uint64_t epochs) {
  auto rc = make_run_config(s.cfg, s.cfg.algorithms.front(), seed, s.prob.data.dim);
  rc.epochs = epochs;
  rc.record_forward_deviation = false;
  rc.record_shuffling_variance = false;
  return run(rc, s.prob);
}

// 5 and 6 share the canonical runs.
std::pair<outcome, outcome> criteria_consensus_and_rate(const fs::path& configs) {
  const auto s = load_canonical(configs);
  auto t0 = clock_type::now();
  const auto short_run = run_canonical(s, 1, 100);
  const auto long_run = run_canonical(s, 1, 1600);
  const double secs5 = seconds_since(t0);
  const auto& a = short_run.records.back().metrics;
  const auto& b = long_run.records.back().metrics;
  const bool dist_ok = b.max_consensus_dist <= 0.1 * a.max_consensus_dist;
  const bool d_ok = b.consensus <= 0.01 * a.consensus;
  outcome c5{dist_ok && d_ok && secs5 < 120.0,
             "max_j ||x_j - x_bar||: T=100 " + fmt("%.3e", a.max_consensus_dist) + ", T=1600 " +
                 fmt("%.3e", b.max_consensus_dist) + "; D: T=100 " + fmt("%.3e", a.consensus) + ", T=1600 " +
                 fmt("%.3e", b.consensus) + "; " + fmt("%.1f", secs5) + " s"};

  std::vector<double> early{*a.subopt}, late{*b.subopt};
  for (std::uint64_t seed = 2; seed <= 10; ++seed) {
    early.push_back(*run_canonical(s, seed, 100).records.back().metrics.subopt);
    late.push_back(*run_canonical(s, seed, 1600).records.back().metrics.subopt);
  }
  const double me = median(early), ml = median(late);
  outcome c6{ml <= 0.5 * me, "median F(x_hat_T)-F*: T=100 " + fmt("%.4e", me) + ", T=1600 " + fmt("%.4e", ml) +
                                 ", ratio " + fmt("%.3f", ml / me) + " (F* " + fmt("%.10f", *s.prob.f_star) + ")"};
  return {c5, c6};
}

// 7. Sampler comparison on the replica config.
outcome criterion_samplers(const fs::path& configs) {
  const auto cfg = load_config(configs / "ring10_samplers.json");
  auto p = build_problem(cfg).prob;
  const auto sol = solve_centralized(p.data, p.reg, p.loss, 1e-10);
  p.f_star = sol.f_star;
  p.x_star = sol.x_star;
  std::map<algorithm, std::vector<double>> finals;
  for (const auto& a : cfg.algorithms)
    for (auto seed : cfg.seeds)
      finals[a.algo].push_back(*run(make_run_config(cfg, a, seed, p.data.dim), p).records.back().metrics.subopt);
  const auto& rr = finals[algorithm::dpg_rr];
  const auto& sg = finals[algorithm::dpg_sg];
  const auto& ig = finals[algorithm::dpg_ig];
  std::size_t wins = 0;
  for (std::size_t i = 0; i < rr.size(); ++i) wins += rr[i] <= sg[i];
  const double ratio = median(ig) / median(rr);
  const bool pass = wins >= 7 && ratio <= 2.0 && ratio >= 0.5;
  std::string detail = "RR <= SG in " + std::to_string(wins) + "/" + std::to_string(rr.size()) +
                       " seeds, median IG/RR " + fmt("%.3f", ratio);
  if (!pass) {
    detail += "\n    seed  DPG-RR  DPG-SG  DPG-IG";
    for (std::size_t i = 0; i < rr.size(); ++i)
      detail += "\n    " + std::to_string(cfg.seeds[i]) + "  " + fmt("%.4e", rr[i]) + "  " + fmt("%.4e", sg[i]) +
                "  " + fmt("%.4e", ig[i]);
  }
  return {pass, detail};
}

double single_agent_gap(const problem& p, double gamma, std::uint64_t epochs, std::uint64_t seed, const vec& x0) {
  run_config rc;
  rc.algo = algorithm::dpg_rr;
  rc.step = step_rule::constant(gamma);
  rc.epochs = epochs;
  rc.seed = seed;
  rc.snapshot_every = 1;
  rc.keep_agent_iterates = true;
  rc.enforce_step_bound = false;
  rc.x0 = x0;
  const auto tr = run(rc, p);
  const auto& samples = p.data.agents[0].samples;
  const auto oracle =
      centralized_prox_rr(samples, p.data.dim, p.reg, p.loss, gamma, epochs,
                          sampling_schedule::for_agent(sampling_mode::rr, samples.size(), seed, 0), x0);
  if (oracle.size() != tr.records.size()) return HUGE_VAL;
  double worst = 0;
  for (std::size_t t = 0; t < oracle.size(); ++t)
    worst = std::max(worst, (oracle[t] - tr.records[t].agents[0]).cwiseAbs().maxCoeff());
  return worst;
}

// 8. One agent reduces to centralized proximal random reshuffling.
outcome criterion_single_agent(const fs::path& configs) {
  const auto toy_cfg = load_config(configs / "toy_least_squares.json");
  const auto toy = build_problem(toy_cfg).prob;
  const double toy_gap = single_agent_gap(toy, 0.5, 50, 0, vec::Zero(static_cast<Eigen::Index>(toy.data.dim)));

  problem syn;
  syn.data = synthesize_classification(1, 30, 6, 0.5, 8).data;
  syn.loss = loss_kind::logistic;
  syn.reg = regularizer::l1(0.05);
  syn.graph = graph_schedule({mixing_matrix::identity(1)}, 1, 0.5);
  keyed_stream rng{0xacc8};
  const double syn_gap = single_agent_gap(syn, 0.2, 50, 13, random_vec(rng, 6));
  return {toy_gap <= 1e-12 && syn_gap <= 1e-12, "max per-epoch |x_engine - x_centralized|: toy " +
                                                    fmt("%.2e", toy_gap) + ", 30-sample logistic+L1 " +
                                                    fmt("%.2e", syn_gap) + " over 50 epochs"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 9. Every runnable shipped config, run twice.
outcome criterion_determinism(const fs::path& configs, const fs::path& out) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(configs))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::size_t runnable = 0, csvs = 0;
  std::vector<std::string> mismatched, skipped;
  for (const auto& f : files) {
    std::ostringstream sink;
    if (cmd_validate(f, sink) != 0) {
      skipped.push_back(f.stem().string());
      continue;
    }
    ++runnable;
    command_options first, second;
    first.verbosity = second.verbosity = 0;
    first.output_dir = out / f.stem() / "first";
    second.output_dir = out / f.stem() / "second";
    fs::remove_all(out / f.stem());
    if (cmd_run(f, sink, first) != 0 || cmd_run(f, sink, second) != 0) {
      mismatched.push_back(f.stem().string() + " (run failed: " + sink.str() + ")");
      continue;
    }
    for (const auto& e : fs::directory_iterator(*first.output_dir)) {
      if (e.path().extension() != ".csv") continue;
      ++csvs;
      if (slurp(e.path()) != slurp(*second.output_dir / e.path().filename()))
        mismatched.push_back(f.stem().string() + "/" + e.path().filename().string());
    }
  }
  std::string detail = std::to_string(runnable) + " configs, " + std::to_string(csvs) + " CSVs compared";
  if (!skipped.empty()) {
    detail += "; invalid by design:";
    for (const auto& s : skipped) detail += " " + s;
  }
  for (const auto& m : mismatched) detail += "; differs: " + m;
  return {runnable > 0 && csvs > 0 && mismatched.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path configs = fs::path(DPGRR_SOURCE_DIR) / "configs";
  fs::path out = fs::temp_directory_path() / "dpgrr_acceptance";
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc)
      only = std::stoi(argv[++i]);
    else
      out = arg;
  }
  if (only < 0 || only > 9) {
    std::cerr << "--only expects a criterion number 1..9\n";
    return 2;
  }
  fs::create_directories(out);

  int failed = 0;
  auto report = [&](int id, const std::string& title, const std::function<outcome()>& body) {
    if (only != 0 && only != id) return;
    outcome o;
    try {
      o = body();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << ": " << title << " -- " << o.detail << std::endl;
  };

  report(1, "prefix averages without replacement", criterion_sampling);
  report(2, "prox correctness", criterion_prox);
  report(3, "mixing algebra", criterion_mixing);
  report(4, "gradient checks", criterion_gradients);
  std::pair<outcome, outcome> canonical;
  if (only == 0 || only == 5 || only == 6) {
    try {
      canonical = criteria_consensus_and_rate(configs);
    } catch (const std::exception& ex) {
      canonical = {{false, ex.what()}, {false, ex.what()}};
    }
  }
  report(5, "consensus", [&] { return canonical.first; });
  report(6, "rate", [&] { return canonical.second; });
  report(7, "sampler ordering", [&] { return criterion_samplers(configs); });
  report(8, "single-agent equivalence", [&] { return criterion_single_agent(configs); });
  report(9, "determinism", [&] { return criterion_determinism(configs, out); });

  if (only == 0)
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
