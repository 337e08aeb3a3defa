// Experiment drivers: config parsing, sweep schedules, the spike demo, the
// degeneracy verdict and lattice rate runs, plus the csv/json artifacts they
// leave behind. Numeric claims here stay at smoke scale; the acceptance
// binary runs the full-size versions.

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "gssl/csv.hpp"
#include "gssl/experiments.hpp"
#include "gssl/fit.hpp"
#include "gssl/rng.hpp"

#include "support.hpp"

namespace fs = std::filesystem;

using gssl::error;
using gssl::errc;
using gssl::format_double;
using gssl::format_u64;
using gssl::RateRule;
using gssl::Rng;
using gssl::SweepConfig;
using gssl::SweepModel;
using gssl::u64;
using gssl::testing::TempDir;

namespace {

void expect_usage(const std::string& text, const std::string& fragment) {
  try {
    (void)SweepConfig::from_json_text(text);
    FAIL() << "config accepted: " << text;
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::usage) << text;
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos)
        << "message \"" << e.what() << "\" lacks \"" << fragment << "\"";
  }
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    out.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

const char* kSmallModel2 = R"({
  "model": "model2", "dimension": 2, "n-grid": [300, 600, 1200],
  "beta-rule": {"kind": "constant", "value": 1.0},
  "delta-rule": {"kind": "eps-power", "exponent": 1.0},
  "trials": 2, "seed": 7})";

}  // namespace

TEST(SweepConfigParse, RoundTripAndLengthScales) {
  SweepConfig cfg = SweepConfig::from_json_text(kSmallModel2);
  EXPECT_EQ(cfg.model, SweepModel::model2);
  EXPECT_EQ(cfg.dimension, 2);
  ASSERT_EQ(cfg.n_grid.size(), 3u);
  EXPECT_EQ(cfg.n_grid[2], 1200u);
  EXPECT_EQ(cfg.beta_rule.kind, RateRule::Kind::constant);
  EXPECT_EQ(cfg.beta_rule.value, 1.0);
  EXPECT_EQ(cfg.delta_rule.kind, RateRule::Kind::eps_power);
  EXPECT_FALSE(cfg.eps_wide);
  EXPECT_EQ(cfg.trials, 2u);
  EXPECT_EQ(cfg.seed, 7u);

  EXPECT_EQ(cfg.epsilon_for(1000), std::pow(std::log(1000.0) / 1000.0, 1.0 / 4.0));
  cfg.eps_wide = true;
  EXPECT_EQ(cfg.epsilon_for(1000), std::pow(std::log(1000.0) / 1000.0, 1.0 / 6.0));
  cfg.eps_wide = false;
  EXPECT_THROW((void)cfg.epsilon_for(1), error);

  std::string echo = cfg.to_json_text();
  SweepConfig again = SweepConfig::from_json_text(echo);
  EXPECT_EQ(again.to_json_text(), echo);
}

TEST(SweepConfigParse, RateRuleSemantics) {
  RateRule c{RateRule::Kind::constant, 0.5};
  EXPECT_EQ(c.at(0.1), 0.5);
  RateRule p{RateRule::Kind::eps_power, 2.0};
  EXPECT_EQ(p.at(0.1), std::pow(0.1, 2.0));
  RateRule unset;
  EXPECT_THROW((void)unset.at(0.1), error);
}

TEST(SweepConfigParse, SpikeLatticeAndMnistDefaults) {
  SweepConfig spike = SweepConfig::from_json_text(R"({"model": "spike-demo", "n": 5000})");
  EXPECT_EQ(spike.spike_n, 5000u);
  ASSERT_EQ(spike.labels_grid.size(), 3u);
  EXPECT_EQ(spike.labels_grid[0], 10u);
  EXPECT_EQ(spike.labels_grid[2], 1000u);
  EXPECT_EQ(spike.spike_epsilon(), 2.0 * std::pow(std::log(5000.0) / 5000.0, 1.0 / 2.0));
  spike.epsilon = 0.25;
  EXPECT_EQ(spike.spike_epsilon(), 0.25);

  SweepConfig lat = SweepConfig::from_json_text(R"({"model": "lattice", "m-grid": [2, 4, 8]})");
  EXPECT_EQ(lat.dimension, 2);
  EXPECT_EQ(lat.epsilon, 0.01);
  EXPECT_EQ(lat.trials, 10000u);
  EXPECT_EQ(lat.seed, 1u);

  SweepConfig mn = SweepConfig::from_json_text(
      R"({"model": "mnist", "data-dir": "/tmp/x", "m-grid": [4, 16]})");
  EXPECT_EQ(mn.knn_k, 10);
  EXPECT_EQ(mn.trials, 1u);
  EXPECT_EQ(mn.subsample, 0u);
  EXPECT_TRUE(mn.fetch_url.empty());
}

TEST(SweepConfigParse, RejectsMalformedConfigs) {
  expect_usage("{oops", "config is not valid JSON");
  expect_usage("[1, 2]", "config must be a JSON object");
  expect_usage(R"({"dimension": 2})", "config needs a string \"model\"");
  expect_usage(R"({"model": "nope"})", "unknown model: nope");
  expect_usage(R"({"model": "model2", "bogus": 1})", "unknown config key: bogus");
  expect_usage(R"({"model": "model2", "dimension": 2, "n-grid": [100, 50]})",
               "n-grid must be strictly increasing");
  expect_usage(R"({"model": "model1", "dimension": 4, "n-grid": [100]})",
               "model1 label function exists for d = 2, 3");
  expect_usage(R"({"model": "model2", "dimension": 2, "n-grid": [100, 200],
                   "beta-rule": {"kind": "constant", "value": 1.0}})",
               "delta-rule is required for model2 and must be none for model1");
  expect_usage(R"({"model": "model1", "dimension": 2, "n-grid": [100, 200],
                   "beta-rule": {"kind": "constant", "value": 0.5},
                   "delta-rule": {"kind": "eps-power", "exponent": 1.0}})",
               "delta-rule is required for model2 and must be none for model1");
  expect_usage(R"({"model": "model1", "dimension": 2, "n-grid": [100], "beta-rule": 3})",
               "beta-rule must be an object with a \"kind\"");
  expect_usage(R"({"model": "model1", "dimension": 2, "n-grid": [100],
                   "beta-rule": {"kind": "quadratic"}})",
               "beta-rule: unknown rule kind \"quadratic\"");
  expect_usage(R"({"model": "model1", "dimension": 2, "n-grid": [100],
                   "beta-rule": {"kind": "none"}})",
               "beta-rule cannot be \"none\" here");
  expect_usage(R"({"model": "model1", "dimension": 2, "n-grid": [100],
                   "beta-rule": {"kind": "constant"}})",
               "beta-rule: constant rule needs \"value\"");
  expect_usage(R"({"model": "model2", "dimension": 2, "n-grid": [100, 200],
                   "beta-rule": {"kind": "constant", "value": 1.0},
                   "delta-rule": {"kind": "eps-power", "exponent": 1.0},
                   "eps-rule": "narrow"})",
               "unknown eps-rule: narrow");
  expect_usage(R"({"model": "model2", "dimension": 2, "n-grid": [100, 200], "trials": 0,
                   "beta-rule": {"kind": "constant", "value": 1.0},
                   "delta-rule": {"kind": "eps-power", "exponent": 1.0}})",
               "trials must be >= 1");
  expect_usage(R"({"model": "spike-demo", "n": 100, "labels-grid": [10, 200]})",
               "labels-grid entries cannot exceed n");
  expect_usage(R"({"model": "lattice", "dimension": 9, "m-grid": [2, 4]})",
               "lattice dimension must lie in [1, 8]");
  expect_usage(R"({"model": "lattice", "m-grid": [0, 2]})",
               "grid entries must be positive integers: m-grid");
  expect_usage(R"({"model": "mnist", "m-grid": [4, 16]})",
               "mnist config needs a string \"data-dir\"");
}

TEST(Sweep, RecordsFollowTheConfiguredSchedule) {
  SweepConfig cfg = SweepConfig::from_json_text(kSmallModel2);
  gssl::SweepResult res = gssl::run_sweep(cfg);

  ASSERT_EQ(res.records.size(), 6u);
  ASSERT_EQ(res.cells.size(), 3u);
  EXPECT_EQ(res.failures, 0u);
  for (std::size_t k = 0; k < res.records.size(); ++k) {
    const auto& r = res.records[k];
    u64 n = cfg.n_grid[k / 2];
    EXPECT_EQ(r.n, n);
    EXPECT_EQ(r.trial, k % 2);
    EXPECT_EQ(r.trial_seed, Rng::key(cfg.seed, n, r.trial));
    EXPECT_EQ(r.eps, cfg.epsilon_for(n));
    EXPECT_EQ(r.beta, 1.0);
    EXPECT_EQ(r.delta, r.eps);  // eps-power exponent 1
    EXPECT_EQ(r.redraws, 0u);
    EXPECT_FALSE(r.failed);
    EXPECT_GT(r.max_error, 0.0);
    EXPECT_LE(r.max_error, 2.0);  // max principle: target and solution lie in [-1, 1]
    EXPECT_GE(r.degeneracy_index, 0.0);
  }

  // cell means accumulate the records in trial order
  for (std::size_t c = 0; c < res.cells.size(); ++c) {
    const auto& cell = res.cells[c];
    EXPECT_EQ(cell.n, cfg.n_grid[c]);
    EXPECT_EQ(cell.trials_used, 2u);
    double err = 0.0, idx = 0.0;
    for (std::size_t t = 0; t < 2; ++t) {
      err += res.records[2 * c + t].max_error;
      idx += res.records[2 * c + t].degeneracy_index;
    }
    EXPECT_EQ(cell.mean_error, err / 2.0);
    EXPECT_EQ(cell.mean_index, idx / 2.0);
  }

  ASSERT_TRUE(res.fitted);
  EXPECT_EQ(res.fit.points_used, 3u);
}

TEST(Sweep, DropsTheSmallestSizeFromLongGridFits) {
  SweepConfig cfg = SweepConfig::from_json_text(R"({
    "model": "model2", "dimension": 2, "n-grid": [100, 200, 400, 800, 1600],
    "beta-rule": {"kind": "constant", "value": 1.0},
    "delta-rule": {"kind": "eps-power", "exponent": 1.0},
    "trials": 1, "seed": 3})");
  gssl::SweepResult res = gssl::run_sweep(cfg);

  ASSERT_EQ(res.cells.size(), 5u);
  ASSERT_TRUE(res.fitted);
  EXPECT_EQ(res.fit.points_used, 4u);

  std::vector<double> xs, es;
  for (std::size_t c = 1; c < res.cells.size(); ++c) {
    xs.push_back(res.cells[c].eps);
    es.push_back(res.cells[c].mean_error);
  }
  gssl::RateFit ref = gssl::fit_power_law(xs, es);
  EXPECT_EQ(res.fit.alpha, ref.alpha);
  EXPECT_EQ(res.fit.intercept, ref.intercept);
  EXPECT_EQ(res.fit.r_squared, ref.r_squared);
}

TEST(Sweep, RerunsAreBitwiseIdentical) {
  SweepConfig cfg = SweepConfig::from_json_text(kSmallModel2);
  gssl::SweepResult a = gssl::run_sweep(cfg);
  gssl::SweepResult b = gssl::run_sweep(cfg);

  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].max_error, b.records[k].max_error);
    EXPECT_EQ(a.records[k].degeneracy_index, b.records[k].degeneracy_index);
    EXPECT_EQ(a.records[k].trial_seed, b.records[k].trial_seed);
    EXPECT_EQ(a.records[k].redraws, b.records[k].redraws);
  }
  for (std::size_t c = 0; c < a.cells.size(); ++c) {
    EXPECT_EQ(a.cells[c].mean_error, b.cells[c].mean_error);
    EXPECT_EQ(a.cells[c].mean_index, b.cells[c].mean_index);
  }
  EXPECT_EQ(a.fit.alpha, b.fit.alpha);
}

TEST(Sweep, GuardsAgainstOversizedGraphsAndBadRates) {
  SweepConfig big = SweepConfig::from_json_text(R"({
    "model": "model2", "dimension": 2, "n-grid": [2048, 100000000],
    "beta-rule": {"kind": "constant", "value": 1.0},
    "delta-rule": {"kind": "eps-power", "exponent": 1.0}})");
  try {
    (void)gssl::run_sweep(big);
    FAIL() << "memory guard did not fire";
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::usage);
    EXPECT_NE(std::string(e.what()).find("4 GB guard"), std::string::npos);
  }

  SweepConfig wrong = SweepConfig::from_json_text(R"({"model": "spike-demo"})");
  EXPECT_THROW((void)gssl::run_sweep(wrong), error);

  SweepConfig hot = SweepConfig::from_json_text(R"({
    "model": "model2", "dimension": 2, "n-grid": [100, 200],
    "beta-rule": {"kind": "constant", "value": 1.5},
    "delta-rule": {"kind": "eps-power", "exponent": 1.0}})");
  try {
    (void)gssl::run_sweep(hot);
    FAIL() << "beta range guard did not fire";
  } catch (const error& e) {
    EXPECT_NE(std::string(e.what()).find("rate in (0, 1]"), std::string::npos);
  }
}

TEST(Spike, IndexRisesWithTheLabelBudget) {
  SweepConfig cfg = SweepConfig::from_json_text(
      R"({"model": "spike-demo", "n": 5000, "labels-grid": [10, 100, 1000], "seed": 2})");
  gssl::SpikeDemo demo = gssl::spike_demo(cfg);

  ASSERT_EQ(demo.cases.size(), 3u);
  EXPECT_EQ(demo.cloud.n, 5000u);
  for (std::size_t c = 0; c < demo.cases.size(); ++c) {
    const auto& sc = demo.cases[c];
    EXPECT_EQ(sc.labels.size(), cfg.labels_grid[c]);
    EXPECT_TRUE(sc.solution.converged);
    EXPECT_GE(sc.report.index, 0.0);
    if (c > 0) EXPECT_GE(sc.report.index, demo.cases[c - 1].report.index);
  }
  EXPECT_GT(demo.cases.back().report.index, demo.cases.front().report.index + 0.02);

  TempDir tmp;
  gssl::write_spike_outputs(tmp.path, demo);
  for (u64 m : cfg.labels_grid) {
    auto sol = lines(gssl::read_text_file(tmp.path / ("solution_" + format_u64(m) + ".csv")));
    ASSERT_EQ(sol.size(), demo.cloud.n + 1);
    EXPECT_EQ(sol[0], "x1,x2,u,g,labeled");
  }
  auto deg = lines(gssl::read_text_file(tmp.path / "degeneracy.csv"));
  ASSERT_EQ(deg.size(), 4u);
  EXPECT_EQ(deg[0], "labels,degeneracy_index,degenerate_mean,spike_count");
  for (std::size_t c = 0; c < demo.cases.size(); ++c) {
    const auto& rep = demo.cases[c].report;
    EXPECT_EQ(deg[c + 1], format_u64(cfg.labels_grid[c]) + "," + format_double(rep.index) + "," +
                              format_double(rep.degenerate_mean) + "," +
                              format_u64(rep.spike_count));
  }
}

TEST(Illposed, ReferenceRunSharesGridAndSeeds) {
  SweepConfig cfg = SweepConfig::from_json_text(R"({
    "model": "model1", "dimension": 2, "n-grid": [400, 800],
    "beta-rule": {"kind": "eps-power", "exponent": 2.0},
    "trials": 2, "seed": 11})");
  gssl::IllposedVerdict v = gssl::illposed_check(cfg);

  ASSERT_EQ(v.run.records.size(), 4u);
  ASSERT_EQ(v.reference.records.size(), 4u);
  for (std::size_t k = 0; k < v.run.records.size(); ++k) {
    EXPECT_EQ(v.run.records[k].trial_seed, v.reference.records[k].trial_seed);
    EXPECT_EQ(v.run.records[k].n, v.reference.records[k].n);
    EXPECT_EQ(v.run.records[k].beta, std::pow(v.run.records[k].eps, 2.0));
    EXPECT_EQ(v.reference.records[k].beta, 0.5);
    EXPECT_EQ(v.run.records[k].delta, 0.0);
    EXPECT_EQ(v.reference.records[k].delta, 0.0);
  }

  const auto& cells = v.run.cells;
  double top = cells.back().mean_error;
  double prev = cells[cells.size() - 2].mean_error;
  EXPECT_EQ(v.top_drop, prev > 0.0 ? (prev - top) / prev : 0.0);
  double ref_index = v.reference.cells.back().mean_index;
  ASSERT_GT(ref_index, 0.0);
  EXPECT_EQ(v.index_ratio, cells.back().mean_index / ref_index);
  EXPECT_EQ(v.degenerate, v.index_ratio < 0.5 && v.top_drop < 0.10);

  EXPECT_THROW((void)gssl::illposed_check(SweepConfig::from_json_text(R"({
    "model": "model1", "dimension": 2, "n-grid": [400],
    "beta-rule": {"kind": "eps-power", "exponent": 2.0}})")),
               error);
}

TEST(Illposed, BandModelReferenceUsesTheMatchingBandWidth) {
  SweepConfig cfg = SweepConfig::from_json_text(R"({
    "model": "model2", "dimension": 2, "n-grid": [300, 600],
    "beta-rule": {"kind": "constant", "value": 1.0},
    "delta-rule": {"kind": "eps-power", "exponent": 2.0},
    "trials": 1, "seed": 5})");
  gssl::IllposedVerdict v = gssl::illposed_check(cfg);
  for (std::size_t k = 0; k < v.run.records.size(); ++k) {
    EXPECT_EQ(v.run.records[k].delta, std::pow(v.run.records[k].eps, 2.0));
    EXPECT_EQ(v.reference.records[k].beta, 1.0);
    EXPECT_EQ(v.reference.records[k].delta, v.reference.records[k].eps);
  }
}

TEST(Lattice, MeansMatchTheGamblersRuinOracle) {
  SweepConfig cfg = SweepConfig::from_json_text(R"({
    "model": "lattice", "dimension": 1, "m-grid": [2, 4, 8],
    "epsilon": 0.1, "trials": 301, "seed": 5})");
  gssl::LatticeResult res = gssl::run_lattice(cfg);

  ASSERT_EQ(res.cells.size(), 3u);
  // lazy one-dimensional ruin: expected steps from site j are 1.5 j (m - j);
  // averaging over the odd sites of each stride gives 1.5, 4.5 and 16.5
  const double tau[3] = {1.5, 4.5, 16.5};
  const double slack[3] = {0.25, 0.75, 2.5};
  for (std::size_t c = 0; c < 3; ++c) {
    const auto& cell = res.cells[c];
    EXPECT_EQ(cell.m, cfg.m_grid[c]);
    ASSERT_EQ(cell.rows.size(), std::size_t(cfg.m_grid[c]));
    EXPECT_NEAR(cell.mean_hitting_time, tau[c], slack[c]);
    EXPECT_GT(cell.mean_error, 0.0);
    EXPECT_LT(cell.mean_error, 0.06);
    double err = 0.0, tsum = 0.0;
    for (const auto& r : cell.rows) {
      err += r.error;
      tsum += r.mean_hitting_time;
      EXPECT_EQ(r.censored_fraction, 0.0);
    }
    EXPECT_EQ(cell.mean_error, err / double(cell.rows.size()));
    EXPECT_EQ(cell.mean_hitting_time, tsum / double(cell.rows.size()));
  }

  EXPECT_EQ(res.hitting_time_fit.points_used, 3u);
  EXPECT_GT(res.hitting_time_fit.alpha, 1.4);
  EXPECT_LT(res.hitting_time_fit.alpha, 2.1);
}

TEST(Lattice, StartsEnumerateOddSitesAxisFirst) {
  SweepConfig cfg = SweepConfig::from_json_text(R"({
    "model": "lattice", "dimension": 2, "m-grid": [1, 2],
    "epsilon": 0.1, "trials": 40, "seed": 9})");
  gssl::LatticeResult res = gssl::run_lattice(cfg);

  ASSERT_EQ(res.cells.size(), 2u);
  const auto& unit = res.cells[0];
  ASSERT_EQ(unit.rows.size(), 1u);
  EXPECT_EQ(unit.rows[0].start[0], 0.1);
  EXPECT_LE(unit.mean_error, 1e-12);  // every site is labeled at stride one
  EXPECT_EQ(unit.mean_hitting_time, 0.0);

  const auto& two = res.cells[1];
  ASSERT_EQ(two.rows.size(), 4u);
  // coordinates are odd multiples of epsilon, computed as eps * site
  const double lo = 0.1 * 1.0, hi = 0.1 * 3.0;
  const double expect[4][2] = {{lo, lo}, {hi, lo}, {lo, hi}, {hi, hi}};
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_EQ(two.rows[r].start[0], expect[r][0]);
    EXPECT_EQ(two.rows[r].start[1], expect[r][1]);
  }
  EXPECT_EQ(res.error_fit.points_used, 0u);  // fits need three strides
}

TEST(Outputs, SweepArtifactsAreSchemaStableAndDeterministic) {
  SweepConfig cfg = SweepConfig::from_json_text(R"({
    "model": "model2", "dimension": 2, "n-grid": [200, 400, 800],
    "beta-rule": {"kind": "constant", "value": 1.0},
    "delta-rule": {"kind": "eps-power", "exponent": 1.0},
    "trials": 1, "seed": 13})");

  TempDir a, b;
  gssl::write_sweep_outputs(a.path, gssl::run_sweep(cfg));
  gssl::write_sweep_outputs(b.path, gssl::run_sweep(cfg));

  auto rec = lines(gssl::read_text_file(a.path / "records.csv"));
  ASSERT_EQ(rec.size(), 4u);
  EXPECT_EQ(rec[0],
            "n,epsilon,beta,delta,trial,trial_seed,max_error,degeneracy_index,redraws,failed");
  auto cell = lines(gssl::read_text_file(a.path / "error_vs_n.csv"));
  ASSERT_EQ(cell.size(), 4u);
  EXPECT_EQ(cell[0], "n,epsilon,mean_max_error,mean_degeneracy_index,trials_used");

  for (const char* f : {"records.csv", "error_vs_n.csv", "ratefit.json"})
    EXPECT_EQ(gssl::read_text_file(a.path / f), gssl::read_text_file(b.path / f)) << f;

  auto meta = gssl::ordered_json::parse(gssl::read_text_file(a.path / "run-meta.json"));
  EXPECT_EQ(meta.at("failures").get<u64>(), 0u);
  EXPECT_TRUE(meta.contains("total-solve-seconds"));

  auto fitj = gssl::ordered_json::parse(gssl::read_text_file(a.path / "ratefit.json"));
  EXPECT_EQ(fitj.at("abscissa").get<std::string>(), "epsilon");
  EXPECT_EQ(fitj.at("points-used").get<u64>(), 3u);
}

TEST(Outputs, TwoPointSweepSkipsTheRateFit) {
  SweepConfig cfg = SweepConfig::from_json_text(R"({
    "model": "model2", "dimension": 2, "n-grid": [200, 400],
    "beta-rule": {"kind": "constant", "value": 1.0},
    "delta-rule": {"kind": "eps-power", "exponent": 1.0},
    "trials": 1, "seed": 13})");
  gssl::SweepResult res = gssl::run_sweep(cfg);
  EXPECT_FALSE(res.fitted);
  TempDir tmp;
  gssl::write_sweep_outputs(tmp.path, res);
  EXPECT_FALSE(fs::exists(tmp.path / "ratefit.json"));
  EXPECT_TRUE(fs::exists(tmp.path / "records.csv"));
}

TEST(Outputs, ConfigEchoRefusesToOverwrite) {
  SweepConfig cfg = SweepConfig::from_json_text(kSmallModel2);
  TempDir tmp;
  gssl::write_config_echo(tmp.path, cfg, false);
  EXPECT_EQ(gssl::read_text_file(tmp.path / "config.json"), cfg.to_json_text());
  try {
    gssl::write_config_echo(tmp.path, cfg, false);
    FAIL() << "echo overwrote without --force";
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::usage);
    EXPECT_NE(std::string(e.what()).find("refusing to overwrite"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("(pass --force)"), std::string::npos);
  }
  gssl::write_config_echo(tmp.path, cfg, true);
}

TEST(Outputs, LatticeArtifactsUseSemicolonStartCoordinates) {
  SweepConfig cfg = SweepConfig::from_json_text(R"({
    "model": "lattice", "dimension": 2, "m-grid": [1, 2],
    "epsilon": 0.1, "trials": 40, "seed": 9})");
  gssl::LatticeResult res = gssl::run_lattice(cfg);
  TempDir tmp;
  gssl::write_lattice_outputs(tmp.path, res);

  auto rec = lines(gssl::read_text_file(tmp.path / "records.csv"));
  ASSERT_EQ(rec.size(), 6u);  // header + 1 + 4 starts
  EXPECT_EQ(rec[0],
            "m,start,error,standard_error,mean_hitting_time,censored_fraction,"
            "mean_displacement");
  const std::string lo = format_double(0.1 * 1.0), hi = format_double(0.1 * 3.0);
  EXPECT_EQ(rec[1].substr(0, lo.size() * 2 + 4), "1," + lo + ";" + lo + ",");
  EXPECT_EQ(rec[3].substr(0, hi.size() + lo.size() + 4), "2," + hi + ";" + lo + ",");

  auto cell = lines(gssl::read_text_file(tmp.path / "error_vs_m.csv"));
  ASSERT_EQ(cell.size(), 3u);
  EXPECT_EQ(cell[0], "m,mean_error,mean_hitting_time,starts");
  EXPECT_EQ(cell[1], "1," + format_double(res.cells[0].mean_error) + "," +
                         format_double(res.cells[0].mean_hitting_time) + ",1");
  EXPECT_FALSE(fs::exists(tmp.path / "ratefit.json"));
}

TEST(Outputs, IllposedVerdictFilesMatchTheStruct) {
  SweepConfig cfg = SweepConfig::from_json_text(R"({
    "model": "model1", "dimension": 2, "n-grid": [300, 600],
    "beta-rule": {"kind": "eps-power", "exponent": 2.0},
    "trials": 1, "seed": 17})");
  gssl::IllposedVerdict v = gssl::illposed_check(cfg);
  TempDir tmp;
  gssl::write_illposed_outputs(tmp.path, v);

  EXPECT_TRUE(fs::exists(tmp.path / "records.csv"));
  EXPECT_TRUE(fs::exists(tmp.path / "reference" / "records.csv"));
  auto j = gssl::ordered_json::parse(gssl::read_text_file(tmp.path / "verdict.json"));
  EXPECT_EQ(j.at("verdict").get<std::string>(), v.degenerate ? "degenerate" : "convergent");
  EXPECT_EQ(j.at("index-ratio").get<double>(), v.index_ratio);
  EXPECT_EQ(j.at("top-octave-error-drop").get<double>(), v.top_drop);
}
