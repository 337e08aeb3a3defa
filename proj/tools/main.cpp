// Command-line front end: every subcommand reads a strict JSON config,
// writes csv/json artifacts into --out, and echoes the effective config next
// to them. Exit codes: 0 ok, 1 usage, 2 data, 3 numeric; diagnostics go to
// standard error as single-line JSON.

#include <cstdio>
#include <deque>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gssl/consistency.hpp"
#include "gssl/core.hpp"
#include "gssl/csv.hpp"
#include "gssl/experiments.hpp"
#include "gssl/fit.hpp"
#include "gssl/graph.hpp"
#include "gssl/labels.hpp"
#include "gssl/mnist.hpp"
#include "gssl/mnist_fetch.hpp"
#include "gssl/parallel.hpp"
#include "gssl/solve.hpp"
#include "gssl/walk.hpp"

namespace fs = std::filesystem;
using gssl::ordered_json;
using gssl::u32;
using gssl::u64;

namespace {

struct Common {
  std::string config_path;
  std::string out_dir;
  std::optional<u64> seed;
  int threads = 0;
  bool force = false;
  std::string fetch_url;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config_path, "JSON config file");
  if (config_required) opt->required();
  cmd->add_option("--out", c.out_dir, "output directory")->required();
  cmd->add_option("--seed", c.seed, "override the config seed");
  cmd->add_option("--threads", c.threads, "worker threads (0 = hardware)");
  cmd->add_flag("--force", c.force, "overwrite an existing config.json echo");
}

ordered_json load_config(const Common& c, const std::string& fallback) {
  std::string text = c.config_path.empty() ? fallback : gssl::read_text_file(c.config_path);
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    gssl::fail_usage(std::string("config is not valid JSON: ") + e.what());
  }
}

void echo_json_config(const fs::path& dir, const ordered_json& j, bool force) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  gssl::require(!ec, gssl::errc::data, "cannot create output directory: " + dir.string());
  auto path = dir / "config.json";
  gssl::require(force || !fs::exists(path), gssl::errc::usage,
                "refusing to overwrite " + path.string() + " (pass --force)");
  gssl::write_text_file(path, j.dump(2) + "\n");
}

u64 effective_seed(const ordered_json& j, const Common& c) {
  if (c.seed) return *c.seed;
  if (j.contains("seed")) return gssl::detail::json_count(j, "seed");
  return 1;
}

gssl::DomainSpec parse_domain(const ordered_json& j) {
  int dim = int(gssl::detail::json_count(j, "dimension"));
  std::string dom = "ball";
  if (j.contains("domain")) {
    gssl::require(j.at("domain").is_string(), gssl::errc::usage, "domain must be a string");
    dom = j.at("domain").get<std::string>();
  }
  if (dom == "ball") return gssl::DomainSpec::ball(dim);
  if (dom == "cube") return gssl::DomainSpec::cube(dim);
  gssl::fail_usage("unknown domain: " + dom);
}

gssl::KernelSpec parse_kernel(const ordered_json& j, double eps) {
  std::string kind = "gaussian";
  if (j.contains("kernel")) {
    gssl::require(j.at("kernel").is_string(), gssl::errc::usage, "kernel must be a string");
    kind = j.at("kernel").get<std::string>();
  }
  if (kind == "gaussian") return gssl::KernelSpec::gaussian(eps);
  if (kind == "indicator") return gssl::KernelSpec::indicator(eps);
  gssl::fail_usage("unknown kernel: " + kind);
}

gssl::SmoothFn parse_function(const ordered_json& j, int dim, const std::string& key) {
  gssl::require(j.contains(key) && j.at(key).is_string(), gssl::errc::usage,
                "config needs a string \"" + key + "\"");
  std::string name = j.at(key).get<std::string>();
  if (name == "model1") return gssl::label_function(gssl::LabelModel::model1, dim);
  if (name == "model2") return gssl::label_function(gssl::LabelModel::model2, dim);
  if (name == "cosine") return gssl::cosine_label(dim);
  if (name == "coordinate") return gssl::coordinate_label(dim);
  gssl::fail_usage("unknown " + key + ": " + name);
}

struct RegionChoice {
  bool by_count = false;
  gssl::LabelModelSpec spec;
  u64 count = 0;
};

RegionChoice parse_region(const ordered_json& j) {
  gssl::require(j.contains("region") && j.at("region").is_object(), gssl::errc::usage,
                "config needs a \"region\" object");
  const auto& r = j.at("region");
  gssl::detail::check_keys(r, {"kind", "beta", "radius", "delta", "count"});
  gssl::require(r.contains("kind") && r.at("kind").is_string(), gssl::errc::usage,
                "region needs a string \"kind\"");
  std::string kind = r.at("kind").get<std::string>();
  RegionChoice out;
  if (kind == "count") {
    out.by_count = true;
    out.count = gssl::detail::json_count(r, "count");
    return out;
  }
  double beta = gssl::detail::json_number(r, "beta");
  if (kind == "subset") {
    double radius = r.contains("radius") ? gssl::detail::json_number(r, "radius") : 0.5;
    out.spec = gssl::LabelModelSpec::subset(beta, radius);
  } else if (kind == "band") {
    out.spec = gssl::LabelModelSpec::band(beta, gssl::detail::json_number(r, "delta"));
  } else if (kind == "everywhere") {
    out.spec = gssl::LabelModelSpec::everywhere(beta);
  } else {
    gssl::fail_usage("unknown region kind: " + kind);
  }
  return out;
}

gssl::LabelSet make_labels(const gssl::PointCloud& cloud, const RegionChoice& choice,
                           const gssl::SmoothFn& g, u64 seed) {
  if (choice.by_count)
    return gssl::labels_at(cloud, gssl::sample_indices(cloud.n, std::size_t(choice.count), seed),
                           g);
  return gssl::select_labels(cloud, choice.spec, g, seed);
}

struct BuiltGraph {
  gssl::PointCloud cloud;
  gssl::SparseGraph graph;
  double eps = 0.0;
};

BuiltGraph build_from_config(const ordered_json& j, u64 seed) {
  BuiltGraph out;
  gssl::DomainSpec domain = parse_domain(j);
  u64 n = gssl::detail::json_count(j, "n");
  gssl::require(n >= 2, gssl::errc::usage, "n must be >= 2");
  out.cloud = gssl::sample_points(domain, std::size_t(n), seed);
  if (j.contains("knn-k")) {
    gssl::require(!j.contains("epsilon") && !j.contains("kernel"), gssl::errc::usage,
                  "knn-k excludes kernel settings");
    out.graph = gssl::build_knn_graph(out.cloud, int(gssl::detail::json_count(j, "knn-k")));
  } else {
    out.eps = j.contains("epsilon") ? gssl::detail::json_number(j, "epsilon")
                                    : gssl::eps_scale(n, domain.dim);
    gssl::require(out.eps > 0.0, gssl::errc::usage, "epsilon must be positive");
    out.graph = gssl::build_eps_graph(out.cloud, parse_kernel(j, out.eps));
  }
  return out;
}

void write_nodes_csv(const fs::path& path, const gssl::PointCloud& cloud) {
  gssl::CsvWriter csv(path);
  std::vector<std::string> head{"node"};
  for (int a = 0; a < cloud.dim(); ++a) head.push_back("x" + std::to_string(a + 1));
  csv.row(head);
  for (std::size_t i = 0; i < cloud.n; ++i) {
    std::vector<std::string> row{gssl::format_u64(i)};
    for (int a = 0; a < cloud.dim(); ++a)
      row.push_back(gssl::format_double(cloud.point(i)[a]));
    csv.row(row);
  }
  csv.close();
}

// --- subcommand runners ---

void run_graph(const Common& c) {
  ordered_json j = load_config(c, "");
  gssl::detail::check_keys(j, {"domain", "dimension", "n", "kernel", "epsilon", "knn-k", "seed"});
  u64 seed = effective_seed(j, c);
  j["seed"] = seed;
  echo_json_config(c.out_dir, j, c.force);

  BuiltGraph b = build_from_config(j, seed);
  gssl::save_graph(b.graph, (fs::path(c.out_dir) / "graph.bin").string());
  gssl::write_edges_csv(b.graph, (fs::path(c.out_dir) / "edges.csv").string());
  write_nodes_csv(fs::path(c.out_dir) / "nodes.csv", b.cloud);

  auto [comp, count] = gssl::connected_components(b.graph);
  double dmin = b.graph.degrees[0], dmax = dmin, dsum = 0.0;
  for (double d : b.graph.degrees) {
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
    dsum += d;
  }
  ordered_json stats{{"n", b.graph.n},
                     {"nnz", b.graph.nnz()},
                     {"epsilon", b.eps},
                     {"components", count},
                     {"min-degree", dmin},
                     {"max-degree", dmax},
                     {"mean-degree", dsum / double(b.graph.n)}};
  gssl::write_text_file(fs::path(c.out_dir) / "stats.json", stats.dump(2) + "\n");
}

void run_solve(const Common& c) {
  ordered_json j = load_config(c, "");
  gssl::detail::check_keys(j, {"domain", "dimension", "n", "kernel", "epsilon", "knn-k", "seed",
                               "label-function", "region", "method", "lambda", "p"});
  u64 seed = effective_seed(j, c);
  j["seed"] = seed;
  echo_json_config(c.out_dir, j, c.force);

  BuiltGraph b = build_from_config(j, seed);
  const int dim = b.cloud.dim();
  gssl::SmoothFn g = parse_function(j, dim, "label-function");
  gssl::LabelSet labels = make_labels(b.cloud, parse_region(j), g, seed);

  std::string method = "hard";
  if (j.contains("method")) {
    gssl::require(j.at("method").is_string(), gssl::errc::usage, "method must be a string");
    method = j.at("method").get<std::string>();
  }
  gssl::SolveResult sol;
  if (method == "hard") {
    sol = gssl::solve_hard(b.graph, labels);
  } else if (method == "soft") {
    sol = gssl::solve_soft(b.graph, labels, gssl::detail::json_number(j, "lambda"));
  } else if (method == "p-laplace") {
    sol = gssl::solve_plap(b.graph, labels, gssl::detail::json_number(j, "p"));
  } else {
    gssl::fail_usage("unknown method: " + method);
  }

  std::vector<double> target(b.cloud.n);
  gssl::parallel_for(b.cloud.n, [&](std::size_t i) { target[i] = g(b.cloud.point(i)); });
  auto report = gssl::degeneracy_report(b.graph, labels, sol.u, target);

  std::vector<gssl::u8> labeled(b.cloud.n, 0);
  for (u32 i : labels.indices) labeled[i] = 1;
  double max_err = 0.0;
  {
    gssl::CsvWriter csv(fs::path(c.out_dir) / "solution.csv");
    std::vector<std::string> head;
    for (int a = 0; a < dim; ++a) head.push_back("x" + std::to_string(a + 1));
    head.insert(head.end(), {"u", "g", "labeled"});
    csv.row(head);
    for (std::size_t i = 0; i < b.cloud.n; ++i) {
      std::vector<std::string> row;
      for (int a = 0; a < dim; ++a) row.push_back(gssl::format_double(b.cloud.point(i)[a]));
      row.push_back(gssl::format_double(sol.u[i]));
      row.push_back(gssl::format_double(target[i]));
      row.push_back(labeled[i] ? "1" : "0");
      csv.row(row);
      max_err = std::max(max_err, std::abs(sol.u[i] - target[i]));
    }
    csv.close();
  }
  ordered_json meta{{"method", method},
                    {"n", b.graph.n},
                    {"labels", labels.size()},
                    {"iterations", sol.iterations},
                    {"residual", sol.residual},
                    {"energy", sol.energy},
                    {"converged", sol.converged},
                    {"max-error", max_err},
                    {"degeneracy-index", report.index},
                    {"degenerate-mean", report.degenerate_mean},
                    {"spike-count", report.spike_count}};
  if (method == "soft") meta["lambda"] = sol.lambda;
  if (method == "p-laplace") meta["p"] = sol.p;
  gssl::write_text_file(fs::path(c.out_dir) / "solve-meta.json", meta.dump(2) + "\n");
}

void run_walk(const Common& c) {
  ordered_json j = load_config(c, "");
  gssl::detail::check_keys(j, {"domain", "dimension", "n", "kernel", "epsilon", "knn-k", "seed",
                               "label-function", "region", "trials", "starts", "max-steps"});
  u64 seed = effective_seed(j, c);
  j["seed"] = seed;
  echo_json_config(c.out_dir, j, c.force);

  BuiltGraph b = build_from_config(j, seed);
  gssl::SmoothFn g = parse_function(j, b.cloud.dim(), "label-function");
  gssl::LabelSet labels = make_labels(b.cloud, parse_region(j), g, seed);
  gssl::SolveResult sol = gssl::solve_hard(b.graph, labels);

  u64 want = j.contains("starts") ? gssl::detail::json_count(j, "starts") : 20;
  std::vector<gssl::u8> labeled(b.cloud.n, 0);
  for (u32 i : labels.indices) labeled[i] = 1;
  auto shuffled =
      gssl::sample_indices(b.cloud.n, b.cloud.n, gssl::Rng::key(seed, 0x7374617274ull));
  std::vector<u32> starts;
  for (u32 i : shuffled) {
    if (starts.size() == want) break;
    if (!labeled[i]) starts.push_back(i);
  }
  gssl::require(starts.size() == want, gssl::errc::usage,
                "not enough unlabeled nodes for the requested start count");

  gssl::WalkConfig wcfg;
  wcfg.trials = j.contains("trials") ? gssl::detail::json_count(j, "trials") : 1000;
  wcfg.max_steps = j.contains("max-steps") ? gssl::detail::json_count(j, "max-steps") : 0;
  wcfg.seed = seed;
  auto stats = gssl::estimate_solution(b.graph, labels, starts, wcfg, &b.cloud);

  std::size_t agree = 0;
  gssl::CsvWriter csv(fs::path(c.out_dir) / "walk.csv");
  csv.row({"start", "estimate", "standard_error", "solver_value", "abs_diff", "within_3se",
           "mean_hitting_time", "censored_fraction", "mean_displacement"});
  for (std::size_t s = 0; s < starts.size(); ++s) {
    double diff = std::abs(stats[s].mean_payoff - sol.u[starts[s]]);
    bool ok = diff <= 3.0 * stats[s].standard_error;
    agree += ok;
    csv.row({gssl::format_u64(starts[s]), gssl::format_double(stats[s].mean_payoff),
             gssl::format_double(stats[s].standard_error), gssl::format_double(sol.u[starts[s]]),
             gssl::format_double(diff), ok ? "1" : "0",
             gssl::format_double(stats[s].mean_hitting_time),
             gssl::format_double(stats[s].censored_fraction),
             gssl::format_double(stats[s].mean_displacement)});
  }
  csv.close();
  ordered_json meta{{"starts", starts.size()},
                    {"trials", wcfg.trials},
                    {"agree-fraction", double(agree) / double(starts.size())}};
  gssl::write_text_file(fs::path(c.out_dir) / "walk-meta.json", meta.dump(2) + "\n");
}

void run_consistency(const Common& c) {
  ordered_json j = load_config(
      c, R"({"dimension": 2, "epsilon": 0.25, "n": 4000, "function": "model2", "nodes": 40})");
  gssl::detail::check_keys(
      j, {"domain", "dimension", "kernel", "epsilon", "n", "seed", "function", "nodes"});
  u64 seed = effective_seed(j, c);
  j["seed"] = seed;
  echo_json_config(c.out_dir, j, c.force);

  gssl::DomainSpec domain = parse_domain(j);
  u64 n = gssl::detail::json_count(j, "n");
  double eps = gssl::detail::json_number(j, "epsilon");
  gssl::require(eps > 0.0, gssl::errc::usage, "epsilon must be positive");
  gssl::KernelSpec kernel = parse_kernel(j, eps);
  gssl::SmoothFn phi = parse_function(j, domain.dim, "function");
  u64 want = j.contains("nodes") ? gssl::detail::json_count(j, "nodes") : 50;
  gssl::require(want >= 1 && want <= n, gssl::errc::usage, "nodes must lie in [1, n]");

  gssl::Density rho = gssl::Density::uniform(domain);
  gssl::KernelMoments moments = gssl::kernel_moments(kernel, domain.dim);
  gssl::BoundaryCoefficients coeffs(kernel, domain);

  gssl::PointCloud cloud = gssl::sample_points(domain, std::size_t(n), seed);
  std::vector<double> phivals(cloud.n);
  gssl::parallel_for(cloud.n, [&](std::size_t i) { phivals[i] = phi(cloud.point(i)); });
  auto nodes = gssl::sample_indices(cloud.n, std::size_t(want), gssl::Rng::key(seed, 0x636F6E73ull));
  std::sort(nodes.begin(), nodes.end());
  auto ests = gssl::laplacian_estimate_at(cloud, kernel, phivals, nodes);

  gssl::CsvWriter csv(fs::path(c.out_dir) / "consistency.csv");
  csv.row({"node", "delta", "t", "estimate", "continuum", "prediction", "err_vs_continuum",
           "err_vs_prediction", "corner"});
  for (std::size_t s = 0; s < nodes.size(); ++s) {
    gssl::Point x = cloud.point(nodes[s]);
    double delta = domain.boundary_distance(x);
    double cont = gssl::continuum_laplacian(phi, x, rho, moments);
    double pred = std::numeric_limits<double>::quiet_NaN();
    bool corner = false;
    try {
      pred = gssl::boundary_corrected_prediction(phi, x, eps, coeffs, rho);
    } catch (const gssl::error& e) {
      if (e.code() != gssl::errc::numeric) throw;
      corner = true;  // cube corner region: expansion undefined there
    }
    csv.row({gssl::format_u64(nodes[s]), gssl::format_double(delta),
             gssl::format_double(delta / eps), gssl::format_double(ests[s]),
             gssl::format_double(cont), gssl::format_double(pred),
             gssl::format_double(std::abs(ests[s] - cont)),
             gssl::format_double(std::abs(ests[s] - pred)), corner ? "1" : "0"});
  }
  csv.close();
  ordered_json meta{{"dimension", domain.dim},
                    {"mass", moments.mass},
                    {"second-moment", moments.second_moment},
                    {"tolerance", moments.tolerance}};
  gssl::write_text_file(fs::path(c.out_dir) / "moments.json", meta.dump(2) + "\n");
}

void run_sweep_cmd(const Common& c) {
  gssl::SweepConfig cfg = gssl::SweepConfig::from_json_text(gssl::read_text_file(c.config_path));
  gssl::require(cfg.model == gssl::SweepModel::model1 || cfg.model == gssl::SweepModel::model2,
                gssl::errc::usage,
                "sweep handles model1/model2 configs; see spike, rates and mnist");
  if (c.seed) cfg.seed = *c.seed;
  gssl::write_config_echo(c.out_dir, cfg, c.force);

  bool illposed_scaling =
      (cfg.beta_rule.kind == gssl::RateRule::Kind::eps_power && cfg.beta_rule.value >= 2.0) ||
      (cfg.delta_rule.kind == gssl::RateRule::Kind::eps_power && cfg.delta_rule.value >= 2.0);
  if (illposed_scaling) {
    auto verdict = gssl::illposed_check(cfg);
    gssl::write_illposed_outputs(c.out_dir, verdict);
  } else {
    auto result = gssl::run_sweep(cfg);
    gssl::write_sweep_outputs(c.out_dir, result);
  }
}

void run_spike(const Common& c) {
  std::string fallback = R"({"model": "spike-demo"})";
  ordered_json j = load_config(c, fallback);
  gssl::SweepConfig cfg = gssl::SweepConfig::from_json_text(j.dump());
  gssl::require(cfg.model == gssl::SweepModel::spike_demo, gssl::errc::usage,
                "spike needs a spike-demo config");
  if (c.seed) cfg.seed = *c.seed;
  gssl::write_config_echo(c.out_dir, cfg, c.force);
  auto demo = gssl::spike_demo(cfg);
  gssl::write_spike_outputs(c.out_dir, demo);
}

void run_rates(const Common& c) {
  std::string fallback = R"({"model": "lattice", "m-grid": [2, 4, 8]})";
  ordered_json j = load_config(c, fallback);
  gssl::SweepConfig cfg = gssl::SweepConfig::from_json_text(j.dump());
  gssl::require(cfg.model == gssl::SweepModel::lattice, gssl::errc::usage,
                "rates needs a lattice config");
  if (c.seed) cfg.seed = *c.seed;
  gssl::write_config_echo(c.out_dir, cfg, c.force);
  auto result = gssl::run_lattice(cfg);
  gssl::write_lattice_outputs(c.out_dir, result);
}

void run_mnist(const Common& c) {
  gssl::SweepConfig cfg = gssl::SweepConfig::from_json_text(gssl::read_text_file(c.config_path));
  gssl::require(cfg.model == gssl::SweepModel::mnist, gssl::errc::usage,
                "mnist needs a mnist config");
  if (c.seed) cfg.seed = *c.seed;
  if (!c.fetch_url.empty()) cfg.fetch_url = c.fetch_url;
  gssl::write_config_echo(c.out_dir, cfg, c.force);

  bool have_all = true;
  for (const char* f : gssl::kMnistImageFiles)
    have_all = have_all && fs::exists(fs::path(cfg.data_dir) / f);
  for (const char* f : gssl::kMnistLabelFiles)
    have_all = have_all && fs::exists(fs::path(cfg.data_dir) / f);
  if (!have_all && !cfg.fetch_url.empty())
    gssl::fetch_mnist(cfg.data_dir, cfg.fetch_url, cfg.sha256);

  gssl::MnistData data = gssl::load_mnist(cfg.data_dir);
  auto result = gssl::mnist_pipeline(data, cfg);
  gssl::write_mnist_outputs(c.out_dir, result);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph-based semi-supervised learning laboratory"};
  app.require_subcommand(1);

  // Deque, not vector: the option callbacks hold references into the stored
  // Common, so element addresses must survive later insertions.
  std::deque<std::pair<Common, std::function<void(const Common&)>>> actions;
  auto add = [&](const std::string& name, const std::string& desc, bool config_required,
                 std::function<void(const Common&)> fn, bool with_fetch = false) {
    actions.emplace_back(Common{}, std::move(fn));
    auto& c = actions.back().first;
    CLI::App* cmd = app.add_subcommand(name, desc);
    add_common(cmd, c, config_required);
    if (with_fetch) cmd->add_option("--fetch-url", c.fetch_url, "archive base url");
    std::size_t idx = actions.size() - 1;
    cmd->callback([&actions, idx] {
      auto& [common, run] = actions[idx];
      if (common.threads > 0) gssl::set_thread_count(common.threads);
      run(common);
    });
  };

  add("graph", "build a geometric or kNN graph", true, run_graph);
  add("solve", "solve a label-propagation problem", true, run_solve);
  add("walk", "compare Monte Carlo walk estimates against the solver", true, run_walk);
  add("consistency", "pointwise operator consistency table", false, run_consistency);
  add("sweep", "error-vs-n sweep with power-law fit", true, run_sweep_cmd);
  add("rates", "lattice walk rate check", false, run_rates);
  add("spike", "low-label-rate degeneracy demonstration", false, run_spike);
  add("mnist", "one-vs-rest digit classification", true, run_mnist, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cout << app.help();
    ordered_json err{{"level", "error"}, {"code", 1}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const gssl::error& e) {
    ordered_json err{{"level", "error"}, {"code", int(e.code())}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return int(e.code());
  } catch (const std::exception& e) {
    ordered_json err{{"level", "error"}, {"code", 3}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 3;
  }
  return 0;
}
