#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gssl/core.hpp"
#include "gssl/csv.hpp"
#include "gssl/domain.hpp"
#include "gssl/fit.hpp"
#include "gssl/graph.hpp"
#include "gssl/label_function.hpp"
#include "gssl/labels.hpp"
#include "gssl/point_cloud.hpp"
#include "gssl/rng.hpp"
#include "gssl/solve.hpp"
#include "gssl/walk.hpp"

namespace gssl {

using ordered_json = nlohmann::ordered_json;

enum class SweepModel { model1, model2, spike_demo, lattice, mnist };

inline const char* name(SweepModel m) {
  switch (m) {
    case SweepModel::model1:
      return "model1";
    case SweepModel::model2:
      return "model2";
    case SweepModel::spike_demo:
      return "spike-demo";
    case SweepModel::lattice:
      return "lattice";
    case SweepModel::mnist:
      return "mnist";
  }
  return "?";
}

inline SweepModel parse_sweep_model(const std::string& s) {
  if (s == "model1") return SweepModel::model1;
  if (s == "model2") return SweepModel::model2;
  if (s == "spike-demo") return SweepModel::spike_demo;
  if (s == "lattice") return SweepModel::lattice;
  if (s == "mnist") return SweepModel::mnist;
  fail_usage("unknown model: " + s);
}

struct RateRule {
  enum class Kind { none, constant, eps_power } kind = Kind::none;
  double value = 0.0;  // the constant, or the exponent a in eps^a

  double at(double eps) const {
    switch (kind) {
      case Kind::constant:
        return value;
      case Kind::eps_power:
        return std::pow(eps, value);
      case Kind::none:
        break;
    }
    fail_usage("rate rule is unset");
  }
};

/// Declarative description of one experiment run, parsed from strict JSON
/// (unknown keys rejected). model1/model2 sweep a grid of sample counts n;
/// lattice sweeps the sublattice stride m; mnist sweeps labels per class m.
struct SweepConfig {
  SweepModel model = SweepModel::model2;
  int dimension = 2;
  std::vector<u64> n_grid;
  RateRule beta_rule{RateRule::Kind::constant, 1.0};
  RateRule delta_rule;                      // model2 only
  bool eps_wide = false;                    // (log n / n)^{1/(d+4)} instead of 1/(d+2)
  u64 trials = 1;
  u64 seed = 1;

  u64 spike_n = 100000;                     // spike-demo
  std::vector<u64> labels_grid{10, 100, 1000};
  double epsilon = 0.0;                     // spike-demo override / lattice spacing
  std::vector<u64> m_grid;                  // lattice / mnist
  std::string data_dir;                     // mnist
  int knn_k = 10;
  u64 subsample = 0;                        // mnist; 0 = full data
  std::string fetch_url;                    // mnist; empty = no network
  std::vector<std::pair<std::string, std::string>> sha256;  // mnist archive checksums

  double epsilon_for(u64 n) const {
    require(n >= 2, errc::usage, "grid entries must be >= 2");
    double inv = 1.0 / double(dimension + (eps_wide ? 4 : 2));
    return std::pow(std::log(double(n)) / double(n), inv);
  }
  double spike_epsilon() const {
    if (epsilon > 0.0) return epsilon;
    return 2.0 * std::pow(std::log(double(spike_n)) / double(spike_n), 1.0 / double(dimension));
  }

  static SweepConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

namespace detail {

inline void check_keys(const ordered_json& j, const std::vector<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed) ok = ok || it.key() == k;
    require(ok, errc::usage, "unknown config key: " + it.key());
  }
}

inline double json_number(const ordered_json& j, const std::string& key) {
  require(j.contains(key), errc::usage, "missing config key: " + key);
  require(j.at(key).is_number(), errc::usage, "config key must be a number: " + key);
  return j.at(key).get<double>();
}

inline u64 json_count(const ordered_json& j, const std::string& key) {
  require(j.contains(key), errc::usage, "missing config key: " + key);
  const auto& v = j.at(key);
  require(v.is_number_integer() && v.get<i64>() >= 0, errc::usage,
          "config key must be a non-negative integer: " + key);
  return v.get<u64>();
}

inline std::vector<u64> json_grid(const ordered_json& j, const std::string& key) {
  require(j.contains(key), errc::usage, "missing config key: " + key);
  const auto& v = j.at(key);
  require(v.is_array() && !v.empty(), errc::usage, "config key must be a non-empty list: " + key);
  std::vector<u64> grid;
  for (const auto& e : v) {
    require(e.is_number_integer() && e.get<i64>() > 0, errc::usage,
            "grid entries must be positive integers: " + key);
    grid.push_back(e.get<u64>());
    if (grid.size() > 1)
      require(grid[grid.size() - 2] < grid.back(), errc::usage,
              key + " must be strictly increasing");
  }
  return grid;
}

inline RateRule json_rule(const ordered_json& j, const std::string& key, bool allow_none) {
  if (!j.contains(key)) {
    require(allow_none, errc::usage, "missing config key: " + key);
    return RateRule{};
  }
  const auto& v = j.at(key);
  require(v.is_object(), errc::usage, key + " must be an object with a \"kind\"");
  check_keys(v, {"kind", "value", "exponent"});
  require(v.contains("kind") && v.at("kind").is_string(), errc::usage,
          key + " needs a string \"kind\"");
  std::string kind = v.at("kind").get<std::string>();
  if (kind == "none") {
    require(allow_none, errc::usage, key + " cannot be \"none\" here");
    require(v.size() == 1, errc::usage, key + ": \"none\" takes no parameters");
    return RateRule{};
  }
  if (kind == "constant") {
    require(v.contains("value"), errc::usage, key + ": constant rule needs \"value\"");
    return RateRule{RateRule::Kind::constant, json_number(v, "value")};
  }
  if (kind == "eps-power") {
    require(v.contains("exponent"), errc::usage, key + ": eps-power rule needs \"exponent\"");
    return RateRule{RateRule::Kind::eps_power, json_number(v, "exponent")};
  }
  fail_usage(key + ": unknown rule kind \"" + kind + "\"");
}

inline ordered_json rule_to_json(const RateRule& r) {
  switch (r.kind) {
    case RateRule::Kind::none:
      return {{"kind", "none"}};
    case RateRule::Kind::constant:
      return {{"kind", "constant"}, {"value", r.value}};
    case RateRule::Kind::eps_power:
      return {{"kind", "eps-power"}, {"exponent", r.value}};
  }
  return {};
}

}  // namespace detail

inline SweepConfig SweepConfig::from_json_text(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail_usage(std::string("config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), errc::usage, "config must be a JSON object");
  require(j.contains("model") && j.at("model").is_string(), errc::usage,
          "config needs a string \"model\"");

  SweepConfig cfg;
  cfg.model = parse_sweep_model(j.at("model").get<std::string>());

  auto eps_rule = [&]() {
    if (!j.contains("eps-rule")) return false;
    require(j.at("eps-rule").is_string(), errc::usage, "eps-rule must be a string id");
    std::string id = j.at("eps-rule").get<std::string>();
    if (id == "default") return false;
    if (id == "wide") return true;
    fail_usage("unknown eps-rule: " + id);
  };

  switch (cfg.model) {
    case SweepModel::model1:
    case SweepModel::model2: {
      detail::check_keys(j, {"model", "dimension", "n-grid", "beta-rule", "delta-rule",
                             "eps-rule", "trials", "seed"});
      cfg.dimension = int(detail::json_count(j, "dimension"));
      require(cfg.dimension >= 2, errc::usage, "dimension must be >= 2");
      if (cfg.model == SweepModel::model1)
        require(cfg.dimension <= 3, errc::usage, "model1 label function exists for d = 2, 3");
      cfg.n_grid = detail::json_grid(j, "n-grid");
      cfg.beta_rule = detail::json_rule(j, "beta-rule", false);
      cfg.delta_rule = detail::json_rule(j, "delta-rule", true);
      require((cfg.model == SweepModel::model2) == (cfg.delta_rule.kind != RateRule::Kind::none),
              errc::usage, "delta-rule is required for model2 and must be none for model1");
      cfg.eps_wide = eps_rule();
      cfg.trials = j.contains("trials") ? detail::json_count(j, "trials") : 1;
      require(cfg.trials >= 1, errc::usage, "trials must be >= 1");
      cfg.seed = j.contains("seed") ? detail::json_count(j, "seed") : 1;
      break;
    }
    case SweepModel::spike_demo: {
      detail::check_keys(j, {"model", "dimension", "n", "labels-grid", "epsilon", "seed"});
      if (j.contains("dimension")) cfg.dimension = int(detail::json_count(j, "dimension"));
      require(cfg.dimension >= 2, errc::usage, "dimension must be >= 2");
      if (j.contains("n")) cfg.spike_n = detail::json_count(j, "n");
      require(cfg.spike_n >= 2, errc::usage, "n must be >= 2");
      if (j.contains("labels-grid")) cfg.labels_grid = detail::json_grid(j, "labels-grid");
      for (u64 c : cfg.labels_grid)
        require(c <= cfg.spike_n, errc::usage, "labels-grid entries cannot exceed n");
      if (j.contains("epsilon")) {
        cfg.epsilon = detail::json_number(j, "epsilon");
        require(cfg.epsilon > 0.0, errc::usage, "epsilon must be positive");
      }
      cfg.seed = j.contains("seed") ? detail::json_count(j, "seed") : 1;
      break;
    }
    case SweepModel::lattice: {
      detail::check_keys(j, {"model", "dimension", "m-grid", "epsilon", "trials", "seed"});
      if (j.contains("dimension")) cfg.dimension = int(detail::json_count(j, "dimension"));
      require(cfg.dimension >= 1 && cfg.dimension <= 8, errc::usage,
              "lattice dimension must lie in [1, 8]");
      cfg.m_grid = detail::json_grid(j, "m-grid");
      cfg.epsilon = j.contains("epsilon") ? detail::json_number(j, "epsilon") : 0.01;
      require(cfg.epsilon > 0.0, errc::usage, "epsilon must be positive");
      cfg.trials = j.contains("trials") ? detail::json_count(j, "trials") : 10000;
      require(cfg.trials >= 1, errc::usage, "trials must be >= 1");
      cfg.seed = j.contains("seed") ? detail::json_count(j, "seed") : 1;
      break;
    }
    case SweepModel::mnist: {
      detail::check_keys(j, {"model", "data-dir", "k", "m-grid", "trials", "seed", "subsample",
                             "fetch-url", "sha256"});
      require(j.contains("data-dir") && j.at("data-dir").is_string(), errc::usage,
              "mnist config needs a string \"data-dir\"");
      cfg.data_dir = j.at("data-dir").get<std::string>();
      cfg.knn_k = j.contains("k") ? int(detail::json_count(j, "k")) : 10;
      require(cfg.knn_k >= 1, errc::usage, "k must be >= 1");
      cfg.m_grid = detail::json_grid(j, "m-grid");
      cfg.trials = j.contains("trials") ? detail::json_count(j, "trials") : 1;
      require(cfg.trials >= 1, errc::usage, "trials must be >= 1");
      cfg.seed = j.contains("seed") ? detail::json_count(j, "seed") : 1;
      cfg.subsample = j.contains("subsample") ? detail::json_count(j, "subsample") : 0;
      if (j.contains("fetch-url")) {
        require(j.at("fetch-url").is_string(), errc::usage, "fetch-url must be a string");
        cfg.fetch_url = j.at("fetch-url").get<std::string>();
      }
      if (j.contains("sha256")) {
        const auto& s = j.at("sha256");
        require(s.is_object(), errc::usage, "sha256 must map archive names to hex digests");
        for (auto it = s.begin(); it != s.end(); ++it) {
          require(it.value().is_string(), errc::usage, "sha256 digests must be strings");
          cfg.sha256.emplace_back(it.key(), it.value().get<std::string>());
        }
      }
      break;
    }
  }
  return cfg;
}

inline std::string SweepConfig::to_json_text() const {
  ordered_json j;
  j["model"] = name(model);
  switch (model) {
    case SweepModel::model1:
    case SweepModel::model2:
      j["dimension"] = dimension;
      j["n-grid"] = n_grid;
      j["beta-rule"] = detail::rule_to_json(beta_rule);
      if (model == SweepModel::model2) j["delta-rule"] = detail::rule_to_json(delta_rule);
      j["eps-rule"] = eps_wide ? "wide" : "default";
      j["trials"] = trials;
      j["seed"] = seed;
      break;
    case SweepModel::spike_demo:
      j["dimension"] = dimension;
      j["n"] = spike_n;
      j["labels-grid"] = labels_grid;
      j["epsilon"] = spike_epsilon();
      j["seed"] = seed;
      break;
    case SweepModel::lattice:
      j["dimension"] = dimension;
      j["m-grid"] = m_grid;
      j["epsilon"] = epsilon;
      j["trials"] = trials;
      j["seed"] = seed;
      break;
    case SweepModel::mnist:
      j["data-dir"] = data_dir;
      j["k"] = knn_k;
      j["m-grid"] = m_grid;
      j["trials"] = trials;
      j["seed"] = seed;
      j["subsample"] = subsample;
      if (!fetch_url.empty()) j["fetch-url"] = fetch_url;
      if (!sha256.empty()) {
        ordered_json s;
        for (const auto& [k, v] : sha256) s[k] = v;
        j["sha256"] = s;
      }
      break;
  }
  return j.dump(2) + "\n";
}

struct ExperimentRecord {
  u64 n = 0;
  double eps = 0.0;
  double beta = 0.0;
  double delta = 0.0;  // 0 when the model has no band
  u64 trial = 0;
  u64 trial_seed = 0;
  double max_error = 0.0;
  double wall_time = 0.0;  // seconds; kept out of csv outputs (determinism)
  double degeneracy_index = 0.0;
  u32 redraws = 0;
  bool failed = false;
};

struct SweepCell {
  u64 n = 0;
  double eps = 0.0;
  double mean_error = 0.0;
  double mean_index = 0.0;
  u64 trials_used = 0;
};

struct SweepResult {
  std::vector<ExperimentRecord> records;  // sorted by (n, trial)
  std::vector<SweepCell> cells;
  u64 failures = 0;
  bool fitted = false;
  RateFit fit;  // mean error against epsilon; positive alpha = convergence
};

namespace detail {

inline double graph_bytes_estimate(u64 n, int dim, double trunc, const DomainSpec& domain) {
  double frac = std::min(1.0, unit_ball_volume(dim) * std::pow(trunc, dim) / domain.volume());
  double nnz = double(n) * double(n) * frac;
  return nnz * 12.0 + double(n) * 24.0;
}

constexpr u64 kRedrawTag = 0x7264726177ull;  // label redraw stream

}  // namespace detail

/// Per-cell sweep: sample a cloud, build the calibrated-scale graph, draw
/// labels, solve with hard constraints and record the sup-error against the
/// closed-form target. Instances whose labels miss a connected component are
/// redrawn up to five times, then counted as failed and excluded from means.
inline SweepResult run_sweep(const SweepConfig& cfg) {
  require(cfg.model == SweepModel::model1 || cfg.model == SweepModel::model2, errc::usage,
          "run_sweep handles model1 and model2 configs");
  const DomainSpec domain = DomainSpec::ball(cfg.dimension);
  const SmoothFn g = label_function(
      cfg.model == SweepModel::model1 ? LabelModel::model1 : LabelModel::model2, cfg.dimension);

  {
    const u64 top = cfg.n_grid.back();
    double eps_top = cfg.epsilon_for(top);
    double bytes = detail::graph_bytes_estimate(top, cfg.dimension,
                                                KernelSpec::gaussian(eps_top).truncation(), domain);
    require(bytes < 4.0e9, errc::usage,
            "estimated graph memory " + format_double(bytes / 1.0e9) +
                " GB exceeds the 4 GB guard; shrink the n-grid");
  }

  SweepResult out;
  for (u64 n : cfg.n_grid) {
    const double eps = cfg.epsilon_for(n);
    const double beta = cfg.beta_rule.at(eps);
    require(beta > 0.0 && beta <= 1.0, errc::usage,
            "beta rule must produce a rate in (0, 1] at every grid point");
    const double delta =
        cfg.model == SweepModel::model2 ? cfg.delta_rule.at(eps) : 0.0;
    const LabelModelSpec spec = cfg.model == SweepModel::model1
                                    ? LabelModelSpec::subset(beta)
                                    : LabelModelSpec::band(beta, delta);

    SweepCell cell{n, eps, 0.0, 0.0, 0};
    for (u64 trial = 0; trial < cfg.trials; ++trial) {
      const u64 trial_seed = Rng::key(cfg.seed, n, trial);
      ExperimentRecord rec;
      rec.n = n;
      rec.eps = eps;
      rec.beta = beta;
      rec.delta = delta;
      rec.trial = trial;
      rec.trial_seed = trial_seed;

      auto t0 = std::chrono::steady_clock::now();
      PointCloud cloud = sample_points(domain, std::size_t(n), trial_seed);
      SparseGraph graph = build_eps_graph(cloud, KernelSpec::gaussian(eps));
      std::vector<double> target(cloud.n);
      parallel_for(cloud.n, [&](std::size_t i) { target[i] = g(cloud.point(i)); });

      bool solved = false;
      for (u32 attempt = 0; attempt <= 5 && !solved; ++attempt) {
        u64 label_seed =
            attempt == 0 ? trial_seed : Rng::key(trial_seed, detail::kRedrawTag, attempt);
        rec.redraws = attempt;
        try {
          LabelSet labels = select_labels(cloud, spec, g, label_seed);
          SolveResult sol = solve_hard(graph, labels);
          double max_err = 0.0;
          for (std::size_t i = 0; i < cloud.n; ++i)
            max_err = std::max(max_err, std::abs(sol.u[i] - target[i]));
          rec.max_error = max_err;
          rec.degeneracy_index = degeneracy_report(graph, labels, sol.u, target).index;
          solved = true;
        } catch (const error& e) {
          if (e.code() != errc::data) throw;  // only label/connectivity draws are retried
        }
      }
      rec.failed = !solved;
      rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (!rec.failed) {
        cell.mean_error += rec.max_error;
        cell.mean_index += rec.degeneracy_index;
        ++cell.trials_used;
      } else {
        ++out.failures;
      }
      out.records.push_back(std::move(rec));
    }
    require(cell.trials_used > 0, errc::data,
            "all trials failed at n = " + format_u64(n) + " (labels kept missing a component)");
    cell.mean_error /= double(cell.trials_used);
    cell.mean_index /= double(cell.trials_used);
    out.cells.push_back(cell);
  }

  // fit mean error against epsilon, dropping the smallest n once the grid has
  // five or more points (transient regime)
  std::vector<double> xs, es;
  std::size_t first = out.cells.size() >= 5 ? 1 : 0;
  for (std::size_t c = first; c < out.cells.size(); ++c) {
    xs.push_back(out.cells[c].eps);
    es.push_back(out.cells[c].mean_error);
  }
  if (xs.size() >= 3) {  // eps is strictly decreasing along the grid
    out.fit = fit_power_law(xs, es);
    out.fitted = true;
  }
  return out;
}

struct SpikeCase {
  u64 labels_requested = 0;
  LabelSet labels;
  SolveResult solution;
  DegeneracyReport report;
};

struct SpikeDemo {
  PointCloud cloud;
  SparseGraph graph;
  std::vector<double> target;
  std::vector<SpikeCase> cases;
};

/// Low-label-rate demonstration: one cloud on the unit square, one graph, and
/// a solve per labeled-subset size. The degeneracy index rises with the label
/// count as the solution escapes the near-constant regime.
inline SpikeDemo spike_demo(const SweepConfig& cfg) {
  require(cfg.model == SweepModel::spike_demo, errc::usage, "spike_demo needs a spike-demo config");
  SpikeDemo demo;
  const DomainSpec domain = DomainSpec::cube(cfg.dimension);
  const SmoothFn g = cosine_label(cfg.dimension);
  const double eps = cfg.spike_epsilon();
  demo.cloud = sample_points(domain, std::size_t(cfg.spike_n), cfg.seed);
  demo.graph = build_eps_graph(demo.cloud, KernelSpec::gaussian(eps));
  demo.target.resize(demo.cloud.n);
  parallel_for(demo.cloud.n, [&](std::size_t i) { demo.target[i] = g(demo.cloud.point(i)); });

  for (std::size_t c = 0; c < cfg.labels_grid.size(); ++c) {
    SpikeCase sc;
    sc.labels_requested = cfg.labels_grid[c];
    auto idx = sample_indices(demo.cloud.n, std::size_t(sc.labels_requested),
                              Rng::key(cfg.seed, 0x7370696B65ull, c));
    sc.labels = labels_at(demo.cloud, std::move(idx), g);
    sc.solution = solve_hard(demo.graph, sc.labels);
    sc.report = degeneracy_report(demo.graph, sc.labels, sc.solution.u, demo.target);
    demo.cases.push_back(std::move(sc));
  }
  return demo;
}

struct IllposedVerdict {
  SweepResult run;        // the configured (degenerate-candidate) sweep
  SweepResult reference;  // well-posed reference on the same grid and seeds
  double index_ratio = 0.0;   // run index / reference index at the largest n
  double top_drop = 0.0;      // relative mean-error drop across the top octave
  bool degenerate = false;
};

/// Degeneracy check: compare the configured run against a well-posed
/// reference (constant beta = 1/2; for model2 a band delta = eps). Verdict
/// "degenerate" when the spread index collapses below half the reference at
/// the largest n and the error has stopped improving across the top octave.
inline IllposedVerdict illposed_check(const SweepConfig& cfg) {
  require(cfg.n_grid.size() >= 2, errc::usage, "illposed check needs at least two grid points");
  SweepConfig ref = cfg;
  ref.beta_rule = RateRule{RateRule::Kind::constant, 0.5};
  if (cfg.model == SweepModel::model2) {
    ref.beta_rule = RateRule{RateRule::Kind::constant, 1.0};
    ref.delta_rule = RateRule{RateRule::Kind::eps_power, 1.0};
  }

  IllposedVerdict v;
  v.run = run_sweep(cfg);
  v.reference = run_sweep(ref);
  const auto& cells = v.run.cells;
  double top = cells.back().mean_error;
  double prev = cells[cells.size() - 2].mean_error;
  v.top_drop = prev > 0.0 ? (prev - top) / prev : 0.0;
  double ref_index = v.reference.cells.back().mean_index;
  v.index_ratio = ref_index > 0.0 ? cells.back().mean_index / ref_index
                                  : std::numeric_limits<double>::quiet_NaN();
  v.degenerate = v.index_ratio < 0.5 && v.top_drop < 0.10;
  return v;
}

struct LatticeCell {
  u64 m = 0;
  double mean_error = 0.0;
  double mean_hitting_time = 0.0;
  std::vector<LatticeWalkRow> rows;
};

struct LatticeResult {
  std::vector<LatticeCell> cells;
  RateFit error_fit;         // mean error against m (growth exponent)
  RateFit hitting_time_fit;  // mean hitting time against m
};

/// Lazy-walk rate check on the integer lattice: for each stride m, start
/// walks at every all-odd-coordinate site of [1, 2m-1]^d (all off the labeled
/// sublattice), average the payoff error and hitting time, and fit both
/// against m.
inline LatticeResult run_lattice(const SweepConfig& cfg) {
  require(cfg.model == SweepModel::lattice, errc::usage, "run_lattice needs a lattice config");
  const SmoothFn g = coordinate_label(cfg.dimension);
  LatticeResult out;
  std::vector<double> ms, errs, taus;
  for (std::size_t c = 0; c < cfg.m_grid.size(); ++c) {
    const int m = int(cfg.m_grid[c]);
    std::vector<std::vector<double>> starts;
    std::vector<double> point(cfg.dimension, 0.0);
    std::vector<int> odd(cfg.dimension, 1);
    for (;;) {
      for (int a = 0; a < cfg.dimension; ++a) point[a] = cfg.epsilon * double(odd[a]);
      starts.push_back(point);
      int a = 0;
      while (a < cfg.dimension) {
        odd[a] += 2;
        if (odd[a] <= 2 * m - 1) break;
        odd[a] = 1;
        ++a;
      }
      if (a == cfg.dimension) break;
    }

    WalkConfig wcfg;
    wcfg.trials = cfg.trials;
    wcfg.seed = Rng::key(cfg.seed, 0x6C617474ull, u64(m));
    LatticeCell cell;
    cell.m = u64(m);
    cell.rows = lattice_walk_error(cfg.dimension, cfg.epsilon, m, g, starts, wcfg);
    for (const auto& r : cell.rows) {
      cell.mean_error += r.error;
      cell.mean_hitting_time += r.mean_hitting_time;
    }
    cell.mean_error /= double(cell.rows.size());
    cell.mean_hitting_time /= double(cell.rows.size());
    ms.push_back(double(m));
    errs.push_back(cell.mean_error);
    taus.push_back(cell.mean_hitting_time);
    out.cells.push_back(std::move(cell));
  }
  if (ms.size() >= 3) {
    out.error_fit = fit_power_law(ms, errs);
    out.hitting_time_fit = fit_power_law(ms, taus);
  }
  return out;
}

// ---------------------------------------------------------------------------
// persistence

namespace detail {

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, errc::data, "cannot create output directory: " + dir.string());
}

}  // namespace detail

/// Echoes the parsed config next to the outputs; refuses to overwrite an
/// existing echo unless forced.
inline void write_config_echo(const std::filesystem::path& dir, const SweepConfig& cfg,
                              bool force) {
  detail::ensure_dir(dir);
  auto path = dir / "config.json";
  require(force || !std::filesystem::exists(path), errc::usage,
          "refusing to overwrite " + path.string() + " (pass --force)");
  write_text_file(path, cfg.to_json_text());
}

inline ordered_json ratefit_json(const RateFit& fit, const std::string& abscissa) {
  return ordered_json{{"abscissa", abscissa},
                      {"alpha", fit.alpha},
                      {"intercept", fit.intercept},
                      {"r-squared", fit.r_squared},
                      {"points-used", fit.points_used}};
}

/// records.csv, error_vs_n.csv and ratefit.json for a model1/model2 sweep.
/// Wall times stay out of the csv files so byte-identical reruns remain the
/// determinism contract; they go to run-meta.json instead.
inline void write_sweep_outputs(const std::filesystem::path& dir, const SweepResult& result) {
  detail::ensure_dir(dir);
  {
    CsvWriter csv(dir / "records.csv");
    csv.row({"n", "epsilon", "beta", "delta", "trial", "trial_seed", "max_error",
             "degeneracy_index", "redraws", "failed"});
    for (const auto& r : result.records)
      csv.row({format_u64(r.n), format_double(r.eps), format_double(r.beta),
               format_double(r.delta), format_u64(r.trial), format_u64(r.trial_seed),
               format_double(r.max_error), format_double(r.degeneracy_index),
               format_u64(r.redraws), r.failed ? "1" : "0"});
    csv.close();
  }
  {
    CsvWriter csv(dir / "error_vs_n.csv");
    csv.row({"n", "epsilon", "mean_max_error", "mean_degeneracy_index", "trials_used"});
    for (const auto& c : result.cells)
      csv.row({format_u64(c.n), format_double(c.eps), format_double(c.mean_error),
               format_double(c.mean_index), format_u64(c.trials_used)});
    csv.close();
  }
  if (result.fitted)
    write_text_file(dir / "ratefit.json", ratefit_json(result.fit, "epsilon").dump(2) + "\n");
  {
    double total = 0.0;
    for (const auto& r : result.records) total += r.wall_time;
    ordered_json meta{{"failures", result.failures}, {"total-solve-seconds", total}};
    write_text_file(dir / "run-meta.json", meta.dump(2) + "\n");
  }
}

inline void write_lattice_outputs(const std::filesystem::path& dir, const LatticeResult& result) {
  detail::ensure_dir(dir);
  {
    CsvWriter csv(dir / "records.csv");
    csv.row({"m", "start", "error", "standard_error", "mean_hitting_time", "censored_fraction",
             "mean_displacement"});
    for (const auto& c : result.cells)
      for (const auto& r : c.rows) {
        std::string coords;
        for (std::size_t a = 0; a < r.start.size(); ++a) {
          if (a) coords += ';';
          coords += format_double(r.start[a]);
        }
        csv.row({format_u64(c.m), coords, format_double(r.error),
                 format_double(r.standard_error), format_double(r.mean_hitting_time),
                 format_double(r.censored_fraction), format_double(r.mean_displacement)});
      }
    csv.close();
  }
  {
    CsvWriter csv(dir / "error_vs_m.csv");
    csv.row({"m", "mean_error", "mean_hitting_time", "starts"});
    for (const auto& c : result.cells)
      csv.row({format_u64(c.m), format_double(c.mean_error),
               format_double(c.mean_hitting_time), format_u64(c.rows.size())});
    csv.close();
  }
  if (result.cells.size() >= 3) {
    ordered_json j{{"error", ratefit_json(result.error_fit, "m")},
                   {"hitting-time", ratefit_json(result.hitting_time_fit, "m")}};
    write_text_file(dir / "ratefit.json", j.dump(2) + "\n");
  }
}

inline void write_spike_outputs(const std::filesystem::path& dir, const SpikeDemo& demo) {
  detail::ensure_dir(dir);
  const int d = demo.cloud.dim();
  for (const auto& sc : demo.cases) {
    std::vector<u8> labeled(demo.cloud.n, 0);
    for (u32 i : sc.labels.indices) labeled[i] = 1;
    CsvWriter csv(dir / ("solution_" + format_u64(sc.labels_requested) + ".csv"));
    std::vector<std::string> head;
    for (int a = 0; a < d; ++a) head.push_back("x" + std::to_string(a + 1));
    head.push_back("u");
    head.push_back("g");
    head.push_back("labeled");
    csv.row(head);
    for (std::size_t i = 0; i < demo.cloud.n; ++i) {
      std::vector<std::string> row;
      for (int a = 0; a < d; ++a) row.push_back(format_double(demo.cloud.point(i)[a]));
      row.push_back(format_double(sc.solution.u[i]));
      row.push_back(format_double(demo.target[i]));
      row.push_back(labeled[i] ? "1" : "0");
      csv.row(row);
    }
    csv.close();
  }
  CsvWriter csv(dir / "degeneracy.csv");
  csv.row({"labels", "degeneracy_index", "degenerate_mean", "spike_count"});
  for (const auto& sc : demo.cases)
    csv.row({format_u64(sc.labels_requested), format_double(sc.report.index),
             format_double(sc.report.degenerate_mean), format_u64(sc.report.spike_count)});
  csv.close();
}

inline void write_illposed_outputs(const std::filesystem::path& dir, const IllposedVerdict& v) {
  detail::ensure_dir(dir);
  write_sweep_outputs(dir, v.run);
  write_sweep_outputs(dir / "reference", v.reference);
  ordered_json j{{"verdict", v.degenerate ? "degenerate" : "convergent"},
                 {"index-ratio", v.index_ratio},
                 {"top-octave-error-drop", v.top_drop}};
  write_text_file(dir / "verdict.json", j.dump(2) + "\n");
}

}  // namespace gssl
