#ifndef DPGRR_EXPERIMENT_HPP
#define DPGRR_EXPERIMENT_HPP

// Experiment configuration and the run / validate / oracle commands behind
// the command-line tool. Configs are JSON files; see configs/ for examples.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpgrr/dataio.hpp"
#include "dpgrr/engine.hpp"
#include "dpgrr/error.hpp"
#include "dpgrr/metrics.hpp"
#include "dpgrr/netgraph.hpp"
#include "dpgrr/objectives.hpp"
#include "dpgrr/proxops.hpp"
#include "dpgrr/reference.hpp"

namespace dpgrr {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

struct dataset_spec {
  enum class source { synthetic, libsvm };
  source kind = source::synthetic;
  std::size_t m = 5;
  // synthetic
  std::size_t n = 20;
  std::size_t d = 10;
  double separation = 2.0;
  // libsvm
  std::string path;
  std::size_t min_dim = 0;
  partition_options split;
  std::uint64_t seed = 42;
};

struct algorithm_spec {
  algorithm algo = algorithm::dpg_rr;
  std::string label;  // file stem; defaults to the algorithm name
  step_rule step = step_rule::theorem();
};

struct experiment_config {
  std::string name = "experiment";
  fs::path base_dir;  // directory of the config file; relative paths resolve here
  dataset_spec dataset;
  loss_kind loss = loss_kind::logistic;
  regularizer reg = regularizer::zero();
  std::vector<edge_list> slots;
  std::vector<std::string> slot_text;  // slots as written, for the normalized form
  double eta = 0.1;
  std::size_t window = 1;
  steps_mode comm = steps_mode::growing();
  std::vector<algorithm_spec> algorithms;
  std::uint64_t epochs = 100;
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t snapshot_every = 0;
  bool keep_agent_iterates = false;
  bool record_forward_deviation = false;
  bool record_shuffling_variance = false;
  bool enforce_step_bound = true;
  double gradient_radius = 10.0;
  std::optional<std::vector<double>> x0;
  double oracle_tol = 1e-10;
  std::uint64_t oracle_max_iters = 2'000'000;
  std::string fixtures = "fixtures/oracle_fixtures.txt";
  std::string output_dir = "out";
  unsigned threads = 1;

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
};

namespace detail {

inline std::string step_mode_text(const steps_mode& s) {
  return s.mode == steps_mode::kind::growing ? "growing" : "fixed:" + std::to_string(s.fixed_rounds);
}

inline edge_list slot_edges(const json& slot, std::size_t m) {
  if (slot.is_string()) {
    const auto name = slot.get<std::string>();
    if (name == "complete") return complete_edges(m);
    if (name == "ring") return ring_edges(m);
    if (name == "path") return path_edges(m);
    if (name == "none") return {};
    throw config_error("graph slot '" + name + "' is not one of complete, ring, path, none");
  }
  if (!slot.is_array()) throw config_error("graph slot must be a name or a list of [i, j] edges");
  edge_list out;
  for (const auto& e : slot) {
    if (!e.is_array() || e.size() != 2) throw config_error("graph edge must be a pair [i, j]");
    out.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
  }
  return out;
}

inline step_rule parse_step(const json& j) {
  const auto rule = j.value("rule", std::string("theorem"));
  if (rule == "constant") {
    if (!j.contains("gamma")) throw config_error("constant step rule needs 'gamma'");
    return step_rule::constant(j.at("gamma").get<double>());
  }
  if (rule == "theorem") {
    if (j.contains("M") && !j.at("M").is_null()) return step_rule::theorem(j.at("M").get<double>());
    return step_rule::theorem();
  }
  throw config_error("step rule '" + rule + "' is not constant or theorem");
}

inline json step_to_json(const step_rule& s) {
  if (s.rule == step_rule::kind::constant) return {{"rule", "constant"}, {"gamma", s.gamma}};
  json out = {{"rule", "theorem"}};
  out["M"] = s.scale ? json(*s.scale) : json(nullptr);
  return out;
}

}  // namespace detail

inline experiment_config parse_config(const json& j, const fs::path& base_dir = {}) {
  experiment_config c;
  c.base_dir = base_dir;
  try {
    c.name = j.value("name", c.name);

    const auto& ds = j.at("dataset");
    const auto src = ds.value("source", std::string("synthetic"));
    c.dataset.m = ds.at("m").get<std::size_t>();
    c.dataset.seed = ds.value("seed", c.dataset.seed);
    if (src == "synthetic") {
      c.dataset.kind = dataset_spec::source::synthetic;
      c.dataset.n = ds.value("n", c.dataset.n);
      c.dataset.d = ds.value("d", c.dataset.d);
      if (ds.contains("separation") && ds.at("separation").is_string() &&
          ds.at("separation").get<std::string>() == "inf")
        c.dataset.separation = HUGE_VAL;
      else
        c.dataset.separation = ds.value("separation", c.dataset.separation);
    } else if (src == "libsvm") {
      c.dataset.kind = dataset_spec::source::libsvm;
      c.dataset.path = ds.at("path").get<std::string>();
      c.dataset.min_dim = ds.value("min_dim", std::size_t{0});
      const auto strat = ds.value("strategy", std::string("round-robin"));
      if (strat == "round-robin")
        c.dataset.split.strategy = partition_strategy::round_robin;
      else if (strat == "contiguous")
        c.dataset.split.strategy = partition_strategy::contiguous;
      else
        throw config_error("partition strategy '" + strat + "' is not round-robin or contiguous");
      c.dataset.split.pre_shuffle = ds.value("pre_shuffle", true);
      c.dataset.split.seed = c.dataset.seed;
    } else {
      throw config_error("dataset source '" + src + "' is not synthetic or libsvm");
    }

    const auto loss = j.value("loss", std::string("logistic"));
    if (loss == "logistic")
      c.loss = loss_kind::logistic;
    else if (loss == "least_squares")
      c.loss = loss_kind::least_squares;
    else
      throw config_error("loss '" + loss + "' is not logistic or least_squares");

    if (j.contains("regularizer")) {
      const auto& r = j.at("regularizer");
      const auto kind = r.value("kind", std::string("zero"));
      const double lam = r.value("lambda", 0.0);
      if (kind == "zero")
        c.reg = regularizer::zero();
      else if (kind == "l1")
        c.reg = regularizer::l1(lam);
      else if (kind == "squared_l2")
        c.reg = regularizer::squared_l2(lam);
      else
        throw config_error("regularizer kind '" + kind + "' is not zero, l1 or squared_l2");
    }

    const auto& g = j.at("graph");
    c.eta = g.value("eta", c.eta);
    c.window = g.value("B", c.window);
    if (g.contains("steps")) {
      const auto& s = g.at("steps");
      if (s.is_string() && s.get<std::string>() == "growing")
        c.comm = steps_mode::growing();
      else if (s.is_object() && s.contains("fixed"))
        c.comm = steps_mode::fixed(s.at("fixed").get<std::size_t>());
      else
        throw config_error("graph.steps must be \"growing\" or {\"fixed\": K}");
    }
    for (const auto& slot : g.at("slots")) {
      c.slots.push_back(detail::slot_edges(slot, c.dataset.m));
      c.slot_text.push_back(slot.dump());
    }
    if (c.slots.empty()) throw config_error("graph.slots is empty");

    for (const auto& a : j.at("algorithms")) {
      algorithm_spec spec;
      spec.algo = parse_algorithm(a.at("name").get<std::string>());
      spec.label = a.value("label", to_string(spec.algo));
      if (a.contains("step")) spec.step = detail::parse_step(a.at("step"));
      c.algorithms.push_back(spec);
    }
    if (c.algorithms.empty()) throw config_error("no algorithms listed");

    c.epochs = j.value("epochs", c.epochs);
    if (j.contains("seeds"))
      c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    else if (j.contains("seed"))
      c.seeds = {j.at("seed").get<std::uint64_t>()};
    if (c.seeds.empty()) throw config_error("seed list is empty");
    c.snapshot_every = j.value("snapshot_every", c.snapshot_every);
    c.keep_agent_iterates = j.value("keep_agent_iterates", c.keep_agent_iterates);
    if (j.contains("diagnostics")) {
      const auto& dg = j.at("diagnostics");
      c.record_forward_deviation = dg.value("forward_deviation", false);
      c.record_shuffling_variance = dg.value("shuffling_variance", false);
    }
    c.enforce_step_bound = j.value("enforce_step_bound", c.enforce_step_bound);
    c.gradient_radius = j.value("gradient_radius", c.gradient_radius);
    if (j.contains("x0")) {
      const auto& x0 = j.at("x0");
      c.x0 = x0.is_number() ? std::vector<double>{x0.get<double>()} : x0.get<std::vector<double>>();
    }
    if (j.contains("oracle")) {
      const auto& o = j.at("oracle");
      c.oracle_tol = o.value("tol", c.oracle_tol);
      c.oracle_max_iters = o.value("max_iters", c.oracle_max_iters);
      c.fixtures = o.value("fixtures", c.fixtures);
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& ex) {
    throw config_error(std::string("config: ") + ex.what());
  }
  return c;
}

inline experiment_config load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& ex) {
    throw config_error(path.string() + ": " + ex.what());
  }
  return parse_config(j, path.parent_path());
}

inline std::string file_digest(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw config_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a(ss.str()));
}

/// Fields that determine the optimization problem (and therefore F*).
inline json problem_json(const experiment_config& c) {
  json ds = {{"m", c.dataset.m}, {"seed", c.dataset.seed}};
  if (c.dataset.kind == dataset_spec::source::synthetic) {
    ds["source"] = "synthetic";
    ds["n"] = c.dataset.n;
    ds["d"] = c.dataset.d;
    ds["separation"] = std::isinf(c.dataset.separation) ? json("inf") : json(c.dataset.separation);
  } else {
    ds["source"] = "libsvm";
    ds["content"] = file_digest(c.resolve(c.dataset.path));
    ds["min_dim"] = c.dataset.min_dim;
    ds["strategy"] = c.dataset.split.strategy == partition_strategy::round_robin ? "round-robin" : "contiguous";
    ds["pre_shuffle"] = c.dataset.split.pre_shuffle;
  }
  return {{"dataset", ds},
          {"loss", to_string(c.loss)},
          {"regularizer", {{"kind", c.reg.name()}, {"lambda", c.reg.lambda()}}}};
}

/// Every semantic field with defaults filled in. Output locations and the
/// thread count are excluded since they do not change results.
inline json normalized_config(const experiment_config& c) {
  json j = problem_json(c);
  json slots = json::array();
  for (const auto& s : c.slot_text) slots.push_back(json::parse(s));
  j["graph"] = {{"eta", c.eta}, {"B", c.window}, {"steps", detail::step_mode_text(c.comm)}, {"slots", slots}};
  json algs = json::array();
  for (const auto& a : c.algorithms)
    algs.push_back({{"name", to_string(a.algo)}, {"label", a.label}, {"step", detail::step_to_json(a.step)}});
  j["algorithms"] = algs;
  j["epochs"] = c.epochs;
  j["seeds"] = c.seeds;
  j["snapshot_every"] = c.snapshot_every;
  j["keep_agent_iterates"] = c.keep_agent_iterates;
  j["diagnostics"] = {{"forward_deviation", c.record_forward_deviation},
                      {"shuffling_variance", c.record_shuffling_variance}};
  j["enforce_step_bound"] = c.enforce_step_bound;
  j["gradient_radius"] = c.gradient_radius;
  j["x0"] = c.x0 ? json(*c.x0) : json(nullptr);
  j["oracle"] = {{"tol", c.oracle_tol}, {"max_iters", c.oracle_max_iters}};
  j["name"] = c.name;
  return j;
}

inline std::string config_hash(const experiment_config& c) { return hex64(fnv1a(normalized_config(c).dump())); }
inline std::string problem_hash(const experiment_config& c) { return hex64(fnv1a(problem_json(c).dump())); }

struct built_problem {
  problem prob;
  std::size_t dropped = 0;
};

inline built_problem build_problem(const experiment_config& c) {
  built_problem out;
  auto& p = out.prob;
  p.loss = c.loss;
  p.reg = c.reg;
  if (c.dataset.kind == dataset_spec::source::synthetic) {
    p.data = synthesize_classification(c.dataset.m, c.dataset.n, c.dataset.d, c.dataset.separation, c.dataset.seed).data;
  } else {
    const auto path = c.resolve(c.dataset.path);
    std::ifstream in(path);
    if (!in) throw config_error("cannot read dataset " + path.string());
    auto raw = parse_libsvm(in, c.loss == loss_kind::logistic);
    auto part = partition(raw.samples, std::max(raw.dim, c.dataset.min_dim), c.dataset.m, c.dataset.split);
    p.data = std::move(part.data);
    out.dropped = part.dropped;
  }
  p.graph = graph_schedule::from_edges(c.dataset.m, c.slots, c.window, c.eta);
  return out;
}

inline vec initial_point(const experiment_config& c, std::size_t d) {
  if (!c.x0) return vec::Zero(static_cast<Eigen::Index>(d));
  if (c.x0->size() == 1) return vec::Constant(static_cast<Eigen::Index>(d), c.x0->front());
  if (c.x0->size() != d) throw config_error("x0 has " + std::to_string(c.x0->size()) + " entries, expected " +
                                            std::to_string(d));
  return Eigen::Map<const vec>(c.x0->data(), static_cast<Eigen::Index>(d));
}

inline run_config make_run_config(const experiment_config& c, const algorithm_spec& a, std::uint64_t seed,
                                  std::size_t d) {
  run_config rc;
  rc.algo = a.algo;
  rc.epochs = c.epochs;
  rc.step = a.step;
  rc.comm = c.comm;
  rc.seed = seed;
  rc.snapshot_every = c.snapshot_every;
  rc.keep_agent_iterates = c.keep_agent_iterates;
  rc.enforce_step_bound = c.enforce_step_bound;
  rc.record_forward_deviation = c.record_forward_deviation;
  rc.record_shuffling_variance = c.record_shuffling_variance;
  rc.x0 = initial_point(c, d);
  rc.threads = c.threads;
  return rc;
}

// ---------------------------------------------------------------------------
// Oracle fixtures: one line per problem,
//   <problem-hash> <F*> <tol> <mapping-norm> <iterations> <x*-file>
// with x* stored one coordinate per line next to the fixtures file.

struct fixture_entry {
  std::string hash;
  double f_star = 0.0;
  double tol = 0.0;
  double mapping_norm = 0.0;
  std::uint64_t iterations = 0;
  std::string xstar_file;
};

class fixture_store {
 public:
  explicit fixture_store(fs::path file) : file_(std::move(file)) {
    std::ifstream in(file_);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line.front() == '#') continue;
      std::istringstream ls(line);
      fixture_entry e;
      if (ls >> e.hash >> e.f_star >> e.tol >> e.mapping_norm >> e.iterations >> e.xstar_file) entries_[e.hash] = e;
    }
  }

  const fs::path& file() const noexcept { return file_; }

  std::optional<fixture_entry> find(const std::string& hash) const {
    if (auto it = entries_.find(hash); it != entries_.end()) return it->second;
    return std::nullopt;
  }

  vec load_xstar(const fixture_entry& e) const {
    std::ifstream in(file_.parent_path() / e.xstar_file);
    if (!in) throw config_error("missing x* file " + e.xstar_file);
    std::vector<double> vals;
    double v;
    while (in >> v) vals.push_back(v);
    return Eigen::Map<vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  }

  void put(const fixture_entry& e, const vec& x_star) {
    entries_[e.hash] = e;
    fs::create_directories(file_.parent_path().empty() ? fs::path(".") : file_.parent_path());
    {
      std::ofstream out(file_.parent_path() / e.xstar_file);
      for (Eigen::Index k = 0; k < x_star.size(); ++k) out << format_double(x_star[k]) << '\n';
    }
    std::ofstream out(file_);
    out << "# problem-hash F* tol mapping-norm iterations x*-file\n";
    for (const auto& [h, f] : entries_)
      out << f.hash << ' ' << format_double(f.f_star) << ' ' << format_double(f.tol) << ' '
          << format_double(f.mapping_norm) << ' ' << f.iterations << ' ' << f.xstar_file << '\n';
  }

 private:
  fs::path file_;
  std::map<std::string, fixture_entry> entries_;
};

struct command_options {
  std::optional<fs::path> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> oracle_tol;
  int verbosity = 1;
};

namespace detail {

struct oracle_value {
  double f_star = 0.0;
  vec x_star;
  std::string source;
  double tol = 0.0;
  double mapping_norm = 0.0;
};

inline oracle_value obtain_oracle(const experiment_config& c, const problem& p, std::ostream& log, int verbosity) {
  fixture_store store(c.resolve(c.fixtures));
  const auto hash = problem_hash(c);
  if (auto e = store.find(hash); e && e->tol <= c.oracle_tol) {
    return {e->f_star, store.load_xstar(*e), "fixture", e->tol, e->mapping_norm};
  }
  if (verbosity > 0) log << "no oracle fixture for problem " << hash << ", solving (tol " << c.oracle_tol << ")\n";
  const auto sol = solve_centralized(p.data, p.reg, p.loss, c.oracle_tol, c.oracle_max_iters);
  if (!sol.converged)
    log << "warning: reference solver stopped at mapping norm " << sol.mapping_norm << " > tol " << c.oracle_tol
        << "\n";
  return {sol.f_star, sol.x_star, sol.converged ? "computed" : "computed-unconverged", c.oracle_tol,
          sol.mapping_norm};
}

struct check_outcome {
  bool passed = true;
  std::string first_failure;
};

inline check_outcome check_assumptions(const experiment_config& c, const problem& p, std::ostream& out,
                                       bool enforce_only) {
  check_outcome res;
  const auto report = validate_schedule(p.graph);
  out << report.to_text();
  if (!report.passed()) {
    res.passed = false;
    res.first_failure = report.first_failure();
  }
  const double lip = lipschitz_constant(p.data, p.loss);
  const double bound = theorem_step_bound(lip, p.data.n());
  out << "data: m=" << p.data.m() << " n=" << p.data.n() << " d=" << p.data.dim << " L=" << format_double(lip)
      << " M_max=" << format_double(bound) << "\n";
  for (const auto& a : c.algorithms) {
    if (a.step.rule != step_rule::kind::theorem || a.algo == algorithm::dgm) continue;
    const double scale = a.step.scale.value_or(bound);
    const bool ok = scale <= bound * (1.0 + 1e-12);
    out << "  " << a.label << ": theorem step M=" << format_double(scale) << (ok ? " within" : " EXCEEDS")
        << " bound\n";
    if (!ok && (!enforce_only || c.enforce_step_bound) && res.passed) {
      res.passed = false;
      res.first_failure = "step-size bound (" + a.label + ": M exceeds sqrt(6)/(6Ln))";
    }
  }
  return res;
}

}  // namespace detail

/// Validates the config's graph schedule and step-size rules. Returns 0 when
/// every check passes, 1 otherwise.
inline int cmd_validate(const fs::path& config_path, std::ostream& out, const command_options& = {}) {
  try {
    const auto c = load_config(config_path);
    const auto built = build_problem(c);
    const auto res = detail::check_assumptions(c, built.prob, out, false);
    if (!res.passed) {
      out << "FAIL: " << res.first_failure << "\n";
      return 1;
    }
    out << "PASS\n";
    return 0;
  } catch (const error& ex) {
    out << "FAIL: " << ex.what() << "\n";
    return 1;
  }
}

/// Solves the centralized problem and records F* and x* in the fixture
/// store. A no-op when a fixture at least as tight already exists.
inline int cmd_oracle(const fs::path& config_path, std::ostream& out, const command_options& opt = {}) {
  try {
    auto c = load_config(config_path);
    if (opt.oracle_tol) c.oracle_tol = *opt.oracle_tol;
    const auto built = build_problem(c);
    fixture_store store(c.resolve(c.fixtures));
    const auto hash = problem_hash(c);
    if (auto e = store.find(hash); e && e->tol <= c.oracle_tol) {
      out << "fixture " << hash << " up to date: F*=" << format_double(e->f_star) << " (tol " << e->tol << ")\n";
      return 0;
    }
    const auto& p = built.prob;
    const auto sol = solve_centralized(p.data, p.reg, p.loss, c.oracle_tol, c.oracle_max_iters);
    if (!sol.converged) {
      out << "no convergence: best F*=" << format_double(sol.f_star) << " with mapping norm "
          << format_double(sol.mapping_norm) << " > tol " << c.oracle_tol << " (not recorded)\n";
      return 1;
    }
    store.put({hash, sol.f_star, c.oracle_tol, sol.mapping_norm, sol.iterations, hash + ".xstar"}, sol.x_star);
    out << "fixture " << hash << " written: F*=" << format_double(sol.f_star) << " after " << sol.iterations
        << " iterations\n";
    return 0;
  } catch (const error& ex) {
    out << "error: " << ex.what() << "\n";
    return 1;
  }
}

inline std::string run_file_stem(const std::string& label, std::uint64_t seed, bool multi_seed) {
  return multi_seed ? label + "_seed" + std::to_string(seed) : label;
}

/// Agent iterates at every recorded epoch: "epoch,agent,x0,...,x{d-1}".
inline void write_snapshots_csv(std::ostream& os, const run_trace& trace) {
  if (trace.records.empty()) return;
  const auto d = trace.records.front().x_bar.size();
  os << "epoch,agent";
  for (Eigen::Index k = 0; k < d; ++k) os << ",x" << k;
  os << '\n';
  for (const auto& r : trace.records)
    for (std::size_t j = 0; j < r.agents.size(); ++j) {
      os << r.metrics.epoch << ',' << j;
      for (Eigen::Index k = 0; k < d; ++k) os << ',' << format_double(r.agents[j][k]);
      os << '\n';
    }
}

/// Runs every configured algorithm for every seed and writes one metrics CSV
/// per run plus manifest.json into the output directory.
inline int cmd_run(const fs::path& config_path, std::ostream& out, const command_options& opt = {}) {
  try {
    auto c = load_config(config_path);
    if (opt.seed) c.seeds = {*opt.seed};
    const fs::path out_dir = opt.output_dir ? *opt.output_dir : c.resolve(c.output_dir);
    const auto built = build_problem(c);
    problem p = built.prob;

    std::ostringstream checks;
    const auto res = detail::check_assumptions(c, p, checks, true);
    if (opt.verbosity > 1) out << checks.str();
    if (!res.passed) {
      out << "FAIL: " << res.first_failure << "\n";
      return 1;
    }
    if (built.dropped > 0)
      out << "warning: dropped " << built.dropped << " samples to give every agent the same count\n";

    const auto oracle = detail::obtain_oracle(c, p, out, opt.verbosity);
    p.f_star = oracle.f_star;
    p.x_star = oracle.x_star;

    fs::create_directories(out_dir);
    const bool multi = c.seeds.size() > 1;
    json files = json::array();
    json steps = json::object();
    for (const auto& a : c.algorithms) {
      for (auto seed : c.seeds) {
        const auto rc = make_run_config(c, a, seed, p.data.dim);
        const auto trace = run(rc, p);
        steps[a.label] = trace.step;
        const auto stem = run_file_stem(a.label, seed, multi);
        const auto name = stem + "_metrics.csv";
        std::ofstream csv(out_dir / name);
        write_metrics_csv(csv, trace.metrics());
        if (!csv) throw error("failed writing " + (out_dir / name).string());
        files.push_back(name);
        if (c.keep_agent_iterates) {
          std::ofstream snap(out_dir / (stem + "_snapshots.csv"));
          write_snapshots_csv(snap, trace);
          files.push_back(stem + "_snapshots.csv");
        }
        if (opt.verbosity > 0) {
          const auto& last = trace.records.back().metrics;
          out << a.label << " seed " << seed << ": epochs=" << c.epochs << " step=" << format_double(trace.step)
              << " subopt=" << format_double(last.subopt.value_or(0.0)) << " -> " << name << "\n";
        }
      }
    }

    json manifest;
    manifest["name"] = c.name;
    manifest["config_hash"] = config_hash(c);
    manifest["problem_hash"] = problem_hash(c);
    manifest["seeds"] = c.seeds;
    manifest["epochs"] = c.epochs;
    manifest["agents"] = p.data.m();
    manifest["samples_per_agent"] = p.data.n();
    manifest["dim"] = p.data.dim;
    manifest["dropped_samples"] = built.dropped;
    manifest["L"] = lipschitz_constant(p.data, p.loss);
    manifest["G_f"] = gradient_bound(p.data, p.loss, c.gradient_radius);
    manifest["G_phi"] = p.reg.subgradient_bound(p.data.dim);
    manifest["M_max"] = theorem_step_bound(lipschitz_constant(p.data, p.loss), p.data.n());
    manifest["step_sizes"] = steps;
    manifest["F_star"] = oracle.f_star;
    manifest["F_star_source"] = oracle.source;
    manifest["oracle_tol"] = oracle.tol;
    manifest["oracle_mapping_norm"] = oracle.mapping_norm;
    manifest["files"] = files;
    manifest["config"] = normalized_config(c);
    std::ofstream mf(out_dir / "manifest.json");
    mf << manifest.dump(2) << '\n';
    return 0;
  } catch (const error& ex) {
    out << "error: " << ex.what() << "\n";
    return 1;
  }
}

}  // namespace dpgrr

#endif  // DPGRR_EXPERIMENT_HPP
