#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "gssl/core.hpp"
#include "gssl/experiments.hpp"
#include "gssl/graph.hpp"
#include "gssl/idx.hpp"
#include "gssl/labels.hpp"
#include "gssl/rng.hpp"
#include "gssl/solve.hpp"

namespace gssl {

constexpr int kMnistClasses = 10;

inline const std::array<const char*, 2> kMnistImageFiles = {"train-images-idx3-ubyte",
                                                            "t10k-images-idx3-ubyte"};
inline const std::array<const char*, 2> kMnistLabelFiles = {"train-labels-idx1-ubyte",
                                                            "t10k-labels-idx1-ubyte"};

struct MnistData {
  std::vector<double> features;  // n x dim row-major, raw pixel values
  std::vector<u8> labels;
  std::size_t n = 0;
  int dim = 0;
};

/// Loads the four standard IDX files (train + test concatenated).
inline MnistData load_mnist(const std::filesystem::path& data_dir) {
  MnistData data;
  for (int part = 0; part < 2; ++part) {
    IdxData images = load_idx(data_dir / kMnistImageFiles[part]);
    IdxData labels = load_idx(data_dir / kMnistLabelFiles[part]);
    require(images.shape.size() == 3, errc::data, "image file must hold a rank-3 tensor");
    require(labels.shape.size() == 1, errc::data, "label file must hold a rank-1 tensor");
    require(images.count() == labels.count(), errc::data,
            "image and label counts disagree in " + std::string(kMnistImageFiles[part]));
    int dim = int(images.shape[1]) * int(images.shape[2]);
    if (data.dim == 0) data.dim = dim;
    require(data.dim == dim, errc::data, "image dimensions differ between files");
    for (u8 y : labels.data)
      require(y < kMnistClasses, errc::data, "label value out of range [0, 10)");
    data.features.reserve(data.features.size() + images.data.size());
    for (u8 v : images.data) data.features.push_back(double(v));
    data.labels.insert(data.labels.end(), labels.data.begin(), labels.data.end());
    data.n += images.count();
  }
  return data;
}

struct MnistRecord {
  u64 m = 0;
  u64 trial = 0;
  u64 trial_seed = 0;
  double error = 0.0;
  u64 labeled = 0;
  bool training_consistency = false;  // set when every node was labeled
};

struct MnistCell {
  u64 m = 0;
  double mean_error = 0.0;
  u64 trials = 0;
};

struct MnistResult {
  u64 nodes_total = 0;      // after optional subsampling
  u64 component_nodes = 0;  // largest connected component, the working set
  std::vector<MnistRecord> records;
  std::vector<MnistCell> cells;
  bool fitted = false;
  RateFit fit;         // raw slope of error vs m
  double alpha = 0.0;  // reported decay exponent, -fit.alpha
};

namespace detail {

constexpr u64 kSubsampleTag = 0x737562ull;
constexpr u64 kClassTag = 0x636C73ull;

}  // namespace detail

/// One-vs-rest Laplace learning on the self-tuned kNN graph: m labels per
/// class, ten binary indicator solves, argmax prediction (ties to the lowest
/// class), test error over unlabeled nodes. The graph is restricted to its
/// largest connected component so every solve is well posed.
inline MnistResult mnist_pipeline(const MnistData& data, const SweepConfig& cfg) {
  require(cfg.model == SweepModel::mnist, errc::usage, "mnist_pipeline needs a mnist config");
  require(data.n >= 2 && data.dim > 0, errc::data, "empty dataset");
  require(!cfg.m_grid.empty(), errc::usage, "m-grid must not be empty");

  std::vector<u32> pick;
  if (cfg.subsample > 0 && cfg.subsample < data.n) {
    pick = sample_indices(data.n, std::size_t(cfg.subsample),
                          Rng::key(cfg.seed, detail::kSubsampleTag));
    std::sort(pick.begin(), pick.end());
  } else {
    pick.resize(data.n);
    for (std::size_t i = 0; i < data.n; ++i) pick[i] = u32(i);
  }

  std::vector<double> pts(pick.size() * std::size_t(data.dim));
  for (std::size_t t = 0; t < pick.size(); ++t)
    std::copy_n(data.features.data() + std::size_t(pick[t]) * data.dim, data.dim,
                pts.data() + t * std::size_t(data.dim));

  SparseGraph graph = build_knn_graph(pts.data(), pick.size(), data.dim, cfg.knn_k);
  pts.clear();
  pts.shrink_to_fit();

  auto [comp, count] = connected_components(graph);
  std::vector<u64> sizes(count, 0);
  for (u32 c : comp) ++sizes[c];
  u32 best = 0;
  for (u32 c = 1; c < count; ++c)
    if (sizes[c] > sizes[best]) best = c;
  std::vector<u32> keep;
  keep.reserve(sizes[best]);
  for (std::size_t i = 0; i < graph.n; ++i)
    if (comp[i] == best) keep.push_back(u32(i));
  if (count > 1) graph = induced_subgraph(graph, keep);

  MnistResult out;
  out.nodes_total = pick.size();
  out.component_nodes = keep.size();

  std::vector<u8> y(keep.size());
  for (std::size_t t = 0; t < keep.size(); ++t) y[t] = data.labels[pick[keep[t]]];
  std::vector<std::vector<u32>> members(kMnistClasses);
  for (std::size_t t = 0; t < y.size(); ++t) members[y[t]].push_back(u32(t));
  for (int c = 0; c < kMnistClasses; ++c)
    require(!members[c].empty(), errc::data,
            "class " + std::to_string(c) + " is absent from the working set");
  for (u64 m : cfg.m_grid)
    for (int c = 0; c < kMnistClasses; ++c)
      require(m <= members[c].size(), errc::usage,
              "m = " + format_u64(m) + " exceeds the size of class " + std::to_string(c));

  const std::size_t nn = y.size();
  std::vector<double> score(nn);
  std::vector<u8> pred(nn), labeled(nn);
  for (u64 m : cfg.m_grid) {
    MnistCell cell{m, 0.0, 0};
    for (u64 trial = 0; trial < cfg.trials; ++trial) {
      const u64 trial_seed = Rng::key(cfg.seed, m, trial);
      std::vector<u32> chosen;
      for (int c = 0; c < kMnistClasses; ++c) {
        auto local = sample_indices(members[c].size(), std::size_t(m),
                                    Rng::key(trial_seed, detail::kClassTag, u64(c)));
        for (u32 t : local) chosen.push_back(members[c][t]);
      }
      std::sort(chosen.begin(), chosen.end());

      std::fill(labeled.begin(), labeled.end(), u8(0));
      for (u32 i : chosen) labeled[i] = 1;
      std::fill(score.begin(), score.end(), -std::numeric_limits<double>::infinity());
      std::fill(pred.begin(), pred.end(), u8(0));
      for (int c = 0; c < kMnistClasses; ++c) {
        LabelSet ls;
        ls.indices = chosen;
        ls.values.resize(chosen.size());
        for (std::size_t t = 0; t < chosen.size(); ++t)
          ls.values[t] = y[chosen[t]] == c ? 1.0 : 0.0;
        SolveResult sol = solve_hard(graph, ls);
        for (std::size_t i = 0; i < nn; ++i) {
          if (sol.u[i] > score[i]) {  // strict: ties stay with the lowest class
            score[i] = sol.u[i];
            pred[i] = u8(c);
          }
        }
      }

      MnistRecord rec;
      rec.m = m;
      rec.trial = trial;
      rec.trial_seed = trial_seed;
      rec.labeled = chosen.size();
      u64 test = 0, wrong = 0;
      for (std::size_t i = 0; i < nn; ++i) {
        if (labeled[i]) continue;
        ++test;
        if (pred[i] != y[i]) ++wrong;
      }
      if (test == 0) {
        rec.training_consistency = true;
        for (std::size_t i = 0; i < nn; ++i)
          require(pred[i] == y[i], errc::numeric,
                  "training consistency violated at a labeled node");
        rec.error = 0.0;
      } else {
        rec.error = double(wrong) / double(test);
      }
      cell.mean_error += rec.error;
      ++cell.trials;
      out.records.push_back(rec);
    }
    cell.mean_error /= double(cell.trials);
    out.cells.push_back(cell);
  }

  bool positive = true;
  std::vector<double> ms, es;
  for (const auto& c : out.cells) {
    ms.push_back(double(c.m));
    es.push_back(c.mean_error);
    positive = positive && c.mean_error > 0.0;
  }
  if (ms.size() >= 3 && positive) {
    out.fit = fit_power_law(ms, es);
    out.fitted = true;
    out.alpha = -out.fit.alpha;
  }
  return out;
}

inline void write_mnist_outputs(const std::filesystem::path& dir, const MnistResult& result) {
  detail::ensure_dir(dir);
  {
    CsvWriter csv(dir / "records.csv");
    csv.row({"m", "trial", "trial_seed", "error", "labeled", "training_consistency"});
    for (const auto& r : result.records)
      csv.row({format_u64(r.m), format_u64(r.trial), format_u64(r.trial_seed),
               format_double(r.error), format_u64(r.labeled), r.training_consistency ? "1" : "0"});
    csv.close();
  }
  {
    CsvWriter csv(dir / "error_vs_m.csv");
    csv.row({"m", "mean_error", "trials"});
    for (const auto& c : result.cells)
      csv.row({format_u64(c.m), format_double(c.mean_error), format_u64(c.trials)});
    csv.close();
  }
  ordered_json meta{{"nodes-total", result.nodes_total},
                    {"component-nodes", result.component_nodes}};
  if (result.fitted) {
    meta["decay-alpha"] = result.alpha;
    write_text_file(dir / "ratefit.json", ratefit_json(result.fit, "m").dump(2) + "\n");
  }
  write_text_file(dir / "run-meta.json", meta.dump(2) + "\n");
}

}  // namespace gssl
