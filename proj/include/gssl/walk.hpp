#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "gssl/core.hpp"
#include "gssl/graph.hpp"
#include "gssl/label_function.hpp"
#include "gssl/labels.hpp"
#include "gssl/parallel.hpp"
#include "gssl/rng.hpp"

namespace gssl {

struct WalkConfig {
  std::size_t trials = 1000;
  std::uint64_t max_steps = 0;  // 0: 50 n on graphs, 50 m^{d+2} on the lattice
  std::uint64_t seed = 0;
};

struct HittingStats {
  double mean_payoff = 0.0;
  double standard_error = 0.0;
  double mean_hitting_time = 0.0;
  double censored_fraction = 0.0;
  double mean_displacement = std::numeric_limits<double>::quiet_NaN();
  std::size_t trials = 0;
  std::size_t censored = 0;
};

/// One step of the degree-normalized walk: P(i -> j) = w_ij / d_i. The
/// self-loop weight makes the walk lazy.
inline u32 walk_step(const SparseGraph& g, u32 current, Rng& rng) {
  const u64 lo = g.row_offsets[current], hi = g.row_offsets[current + 1];
  require(hi > lo && g.degrees[current] > 0.0, errc::numeric,
          "walk has no transition from node " + format_u64(current));
  double v = rng.uniform() * g.degrees[current];
  double acc = 0.0;
  for (u64 e = lo; e < hi; ++e) {
    acc += g.weights[e];
    if (v < acc) return g.cols[e];
  }
  return g.cols[hi - 1];
}

/// Same walk with per-row cumulative weights for O(log row) steps.
class WalkSampler {
 public:
  explicit WalkSampler(const SparseGraph& g) : g_(g), cum_(g.weights.size()) {
    parallel_for(g.n, [&](std::size_t i) {
      double s = 0.0;
      for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e) {
        s += g.weights[e];
        cum_[e] = s;
      }
    });
  }

  u32 step(u32 current, Rng& rng) const {
    const u64 lo = g_.row_offsets[current], hi = g_.row_offsets[current + 1];
    require(hi > lo && cum_[hi - 1] > 0.0, errc::numeric,
            "walk has no transition from node " + format_u64(current));
    double v = rng.uniform() * cum_[hi - 1];
    auto begin = cum_.begin() + std::ptrdiff_t(lo);
    auto end = cum_.begin() + std::ptrdiff_t(hi);
    auto it = std::upper_bound(begin, end, v);
    if (it == end) --it;
    return g_.cols[std::size_t(it - cum_.begin())];
  }

 private:
  const SparseGraph& g_;
  std::vector<double> cum_;
};

namespace detail {

struct TrialRecord {
  double payoff = 0.0;
  double steps = 0.0;
  double displacement = 0.0;
  bool censored = false;
};

/// Aggregate uncensored trials; sample standard deviation uses n-1.
inline HittingStats summarize(const std::vector<TrialRecord>& rec, bool have_displacement) {
  HittingStats st;
  st.trials = rec.size();
  std::size_t kept = 0;
  double sum = 0.0, steps = 0.0, disp = 0.0;
  for (const auto& r : rec) {
    if (r.censored) {
      ++st.censored;
      continue;
    }
    ++kept;
    sum += r.payoff;
    steps += r.steps;
    disp += r.displacement;
  }
  st.censored_fraction = st.trials ? double(st.censored) / double(st.trials) : 0.0;
  if (kept == 0) {
    fail_data("all walks censored (censored_fraction = " +
              format_double(st.censored_fraction) + "); raise the step budget");
  }
  st.mean_payoff = sum / double(kept);
  st.mean_hitting_time = steps / double(kept);
  st.mean_displacement =
      have_displacement ? disp / double(kept) : std::numeric_limits<double>::quiet_NaN();
  if (kept > 1) {
    double ss = 0.0;
    for (const auto& r : rec)
      if (!r.censored) ss += (r.payoff - st.mean_payoff) * (r.payoff - st.mean_payoff);
    st.standard_error = std::sqrt(ss / double(kept - 1)) / std::sqrt(double(kept));
  }
  return st;
}

}  // namespace detail

/// Monte Carlo estimate of the hard-constraint solution at the given starts:
/// run the lazy walk until it hits a labeled node and average the labels
/// found. Trial t at start s uses stream (seed, s, t), so estimates do not
/// depend on evaluation order or thread count.
inline std::vector<HittingStats> estimate_solution(const SparseGraph& g, const LabelSet& labels,
                                                   std::span<const u32> starts,
                                                   const WalkConfig& cfg,
                                                   const PointCloud* cloud = nullptr) {
  require(labels.size() > 0, errc::data, "empty label set");
  require(cfg.trials > 0, errc::usage, "walk needs at least one trial");
  for (u32 s : starts) require(s < g.n, errc::usage, "walk start out of range");
  if (cloud) require(cloud->n == g.n, errc::usage, "cloud size must match graph");

  std::vector<double> label_value(g.n, 0.0);
  std::vector<u8> labeled(g.n, 0);
  for (std::size_t t = 0; t < labels.size(); ++t) {
    labeled[labels.indices[t]] = 1;
    label_value[labels.indices[t]] = labels.values[t];
  }
  const std::uint64_t cap = cfg.max_steps ? cfg.max_steps : 50 * std::uint64_t(g.n);
  const WalkSampler sampler(g);
  const int d = cloud ? cloud->dim() : 0;

  std::vector<HittingStats> out(starts.size());
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const u32 start = starts[s];
    std::vector<detail::TrialRecord> rec(cfg.trials);
    parallel_for(
        cfg.trials,
        [&](std::size_t t) {
          Rng rng = Rng::stream(cfg.seed, start, t);
          u32 cur = start;
          std::uint64_t steps = 0;
          while (!labeled[cur] && steps < cap) {
            cur = sampler.step(cur, rng);
            ++steps;
          }
          auto& r = rec[t];
          if (!labeled[cur]) {
            r.censored = true;
            return;
          }
          r.payoff = label_value[cur];
          r.steps = double(steps);
          if (cloud) {
            double d2 = 0.0;
            Point a = cloud->point(start), b = cloud->point(cur);
            for (int x = 0; x < d; ++x) d2 += (a[x] - b[x]) * (a[x] - b[x]);
            r.displacement = std::sqrt(d2);
          }
        },
        64);
    out[s] = detail::summarize(rec, cloud != nullptr);
  }
  return out;
}

inline HittingStats estimate_solution(const SparseGraph& g, const LabelSet& labels, u32 start,
                                      const WalkConfig& cfg, const PointCloud* cloud = nullptr) {
  u32 starts[1] = {start};
  return estimate_solution(g, labels, std::span<const u32>(starts, 1), cfg, cloud)[0];
}

struct LatticeWalkRow {
  std::vector<double> start;  // physical coordinates, snapped to the lattice
  double error = 0.0;         // |MC payoff mean - g(start)|
  double standard_error = 0.0;
  double mean_hitting_time = 0.0;
  double censored_fraction = 0.0;
  double mean_displacement = 0.0;
};

/// Lazy walk on the grid eps Z^d (stay/move probability 1/(2d+1)) started at
/// the given points, absorbed on the coarse sublattice (m eps) Z^d where the
/// labels g live. Measures how far the absorbed-label average drifts from
/// g at the start: the discrete harmonic extension error of the label grid.
inline std::vector<LatticeWalkRow> lattice_walk_error(int dim, double eps, int m,
                                                      const SmoothFn& g,
                                                      const std::vector<std::vector<double>>& starts,
                                                      const WalkConfig& cfg) {
  require(dim >= 1 && dim <= 8, errc::usage, "lattice dimension must lie in [1, 8]");
  require(eps > 0.0, errc::usage, "lattice spacing must be positive");
  require(m >= 1, errc::usage, "label sublattice stride must be >= 1");
  require(cfg.trials > 0, errc::usage, "walk needs at least one trial");
  require(g.dim == dim, errc::usage, "label function dimension mismatch");

  std::uint64_t cap = cfg.max_steps;
  if (cap == 0) {
    cap = 50;
    for (int a = 0; a < dim + 2; ++a) cap *= std::uint64_t(m);
  }
  auto on_sublattice = [&](const std::vector<i64>& x) {
    for (i64 v : x)
      if (((v % m) + m) % m != 0) return false;
    return true;
  };

  std::vector<LatticeWalkRow> out;
  out.reserve(starts.size());
  std::vector<double> phys(dim);
  for (std::size_t s = 0; s < starts.size(); ++s) {
    require(int(starts[s].size()) == dim, errc::usage, "start point dimension mismatch");
    std::vector<i64> origin(dim);
    for (int a = 0; a < dim; ++a) origin[a] = i64(std::llround(starts[s][a] / eps));
    for (int a = 0; a < dim; ++a) phys[a] = double(origin[a]) * eps;
    const double g0 = g(phys);

    std::vector<detail::TrialRecord> rec(cfg.trials);
    parallel_for(
        cfg.trials,
        [&](std::size_t t) {
          Rng rng = Rng::stream(cfg.seed, s, t);
          std::vector<i64> x = origin;
          std::vector<double> y(dim);
          std::uint64_t steps = 0;
          while (!on_sublattice(x) && steps < cap) {
            std::uint64_t r = rng.below(2 * std::uint64_t(dim) + 1);
            if (r < 2 * std::uint64_t(dim)) {
              int axis = int(r >> 1);
              x[axis] += (r & 1) ? 1 : -1;
            }
            ++steps;
          }
          auto& rr = rec[t];
          if (!on_sublattice(x)) {
            rr.censored = true;
            return;
          }
          double d2 = 0.0;
          for (int a = 0; a < dim; ++a) {
            y[a] = double(x[a]) * eps;
            double diff = y[a] - double(origin[a]) * eps;
            d2 += diff * diff;
          }
          rr.payoff = g(y);
          rr.steps = double(steps);
          rr.displacement = std::sqrt(d2);
        },
        16);
    HittingStats st = detail::summarize(rec, true);
    LatticeWalkRow row;
    row.start.assign(phys.begin(), phys.end());
    row.error = std::abs(st.mean_payoff - g0);
    row.standard_error = st.standard_error;
    row.mean_hitting_time = st.mean_hitting_time;
    row.censored_fraction = st.censored_fraction;
    row.mean_displacement = st.mean_displacement;
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace gssl
