#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gssl/core.hpp"
#include "gssl/graph.hpp"
#include "gssl/labels.hpp"
#include "gssl/parallel.hpp"

namespace gssl {

enum class SolveMethod { hard, soft, p_laplace };

struct SolveResult {
  std::vector<double> u;
  SolveMethod method = SolveMethod::hard;
  std::size_t iterations = 0;  // CG iterations (hard/soft), outer iterations (p-Laplace)
  double residual = 0.0;       // relative CG residual, or p-Laplace stationarity measure
  double energy = 0.0;         // objective value at the solution
  bool converged = true;
  double lambda = 0.0;
  double p = 2.0;
};

namespace detail {

struct CgOptions {
  double tol = 1e-10;
  std::size_t max_iter = 0;
};

struct CgStatus {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  bool converged = true;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  return parallel_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

/// Jacobi-preconditioned conjugate gradient. All reductions use fixed-block
/// partial sums, so iterates are bit-identical for any thread count.
template <class MatVec>
CgStatus conjugate_gradient(MatVec&& apply, std::span<const double> b, std::span<double> x,
                            std::span<const double> diag, const CgOptions& opt) {
  const std::size_t m = b.size();
  CgStatus st;
  double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    parallel_for(m, [&](std::size_t i) { x[i] = 0.0; });
    return st;
  }
  std::size_t max_iter = opt.max_iter ? opt.max_iter : 10 * std::size_t(std::sqrt(double(m))) + 1000;
  std::vector<double> r(m), z(m), p(m), q(m);
  apply(x, std::span<double>(q));
  parallel_for(m, [&](std::size_t i) { r[i] = b[i] - q[i]; });
  auto precondition = [&] {
    parallel_for(m, [&](std::size_t i) { z[i] = diag[i] > 0.0 ? r[i] / diag[i] : r[i]; });
  };
  precondition();
  std::copy(z.begin(), z.end(), p.begin());
  double rz = dot(r, z);
  double rnorm = std::sqrt(dot(r, r));
  st.relative_residual = rnorm / bnorm;
  while (st.relative_residual > opt.tol && st.iterations < max_iter) {
    apply(std::span<const double>(p), std::span<double>(q));
    double pq = dot(p, q);
    if (!(pq > 0.0)) break;  // lost positive definiteness (or exact solve)
    double alpha = rz / pq;
    parallel_for(m, [&](std::size_t i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    });
    ++st.iterations;
    rnorm = std::sqrt(dot(r, r));
    st.relative_residual = rnorm / bnorm;
    if (st.relative_residual <= opt.tol) break;
    precondition();
    double rz_next = dot(r, z);
    double beta = rz_next / rz;
    rz = rz_next;
    parallel_for(m, [&](std::size_t i) { p[i] = z[i] + beta * p[i]; });
  }
  st.converged = st.relative_residual <= opt.tol;
  return st;
}

inline void check_labels(const SparseGraph& g, const LabelSet& labels) {
  require(labels.size() > 0, errc::data, "empty label set");
  require(labels.values.size() == labels.indices.size(), errc::usage,
          "label indices and values differ in length");
  u32 prev = 0;
  bool first = true;
  for (u32 i : labels.indices) {
    require(i < g.n, errc::usage, "label index out of range");
    require(first || i > prev, errc::usage, "label indices must be strictly increasing");
    prev = i;
    first = false;
  }
}

inline void check_reachable(const SparseGraph& g, const std::vector<u8>& labeled) {
  auto [comp, count] = connected_components(g);
  std::vector<u8> has(count, 0);
  for (std::size_t i = 0; i < g.n; ++i)
    if (labeled[i]) has[comp[i]] = 1;
  for (u32 c = 0; c < count; ++c)
    require(has[c], errc::data,
            "unreachable component: component " + format_u64(c) + " contains no labeled node");
}

/// Degree-weighted mean of the labels: the constant the solution collapses to
/// in the degenerate regime.
inline double degree_weighted_mean(const SparseGraph& g, const LabelSet& labels) {
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    double d = g.degrees[labels.indices[t]];
    num += d * labels.values[t];
    den += d;
  }
  return num / den;
}

/// Reduced-system matvec over unlabeled nodes, computed against the full
/// graph: scatter into a zero-padded buffer, apply rows, gather.
struct ReducedOperator {
  const SparseGraph& g;
  const std::vector<double>& weights;  // may alias g.weights or reweighted copy
  const std::vector<u32>& unlabeled;
  std::vector<double>& full;  // scratch, size n, zero at labeled slots

  void operator()(std::span<const double> x, std::span<double> y) const {
    parallel_for(unlabeled.size(), [&](std::size_t t) { full[unlabeled[t]] = x[t]; });
    parallel_for(unlabeled.size(), [&](std::size_t t) {
      u32 i = unlabeled[t];
      double xi = full[i], s = 0.0;
      for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e)
        s += weights[e] * (xi - full[g.cols[e]]);
      y[t] = s;
    });
  }
};

}  // namespace detail

/// Minimizer of the Dirichlet energy with labels imposed exactly. Reduces to
/// a positive-definite system on the unlabeled nodes; the calibration factor
/// scales objective and gradient alike, so it is dropped inside the solve.
inline SolveResult solve_hard(const SparseGraph& g, const LabelSet& labels) {
  detail::check_labels(g, labels);
  std::vector<u8> labeled(g.n, 0);
  std::vector<double> u(g.n, 0.0);
  for (std::size_t t = 0; t < labels.size(); ++t) {
    labeled[labels.indices[t]] = 1;
    u[labels.indices[t]] = labels.values[t];
  }
  detail::check_reachable(g, labeled);

  SolveResult res;
  res.method = SolveMethod::hard;
  std::vector<u32> unlabeled;
  unlabeled.reserve(g.n - labels.size());
  for (std::size_t i = 0; i < g.n; ++i)
    if (!labeled[i]) unlabeled.push_back(u32(i));

  if (!unlabeled.empty()) {
    const std::size_t m = unlabeled.size();
    std::vector<double> b(m, 0.0), x(m), diag(m), full(g.n, 0.0);
    parallel_for(m, [&](std::size_t t) {
      u32 i = unlabeled[t];
      double s = 0.0, dg = 0.0;
      for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e) {
        u32 j = g.cols[e];
        if (labeled[j]) s += g.weights[e] * u[j];
        if (j == i) dg = g.weights[e];
      }
      b[t] = s;
      diag[t] = g.degrees[i] - dg;
    });
    double ybar = detail::degree_weighted_mean(g, labels);
    std::fill(x.begin(), x.end(), ybar);
    detail::ReducedOperator op{g, g.weights, unlabeled, full};
    auto st = detail::conjugate_gradient(op, b, std::span<double>(x), diag, detail::CgOptions{});
    res.iterations = st.iterations;
    res.residual = st.relative_residual;
    res.converged = st.converged;
    for (std::size_t t = 0; t < m; ++t) u[unlabeled[t]] = x[t];
  }
  res.energy = dirichlet_energy(g, u, 2.0, g.n, g.kernel.epsilon);
  res.u = std::move(u);
  return res;
}

/// Quadratic label-fidelity relaxation: minimize the calibrated Dirichlet
/// energy plus (lambda/|labels|) sum of squared label misfits. Normal
/// equations are L u + mu P u = mu P g with mu = lambda n^2 eps^2 / (2
/// |labels|), solved over all nodes.
inline SolveResult solve_soft(const SparseGraph& g, const LabelSet& labels, double lambda) {
  require(lambda > 0.0, errc::usage, "fidelity weight lambda must be positive");
  detail::check_labels(g, labels);
  const double eps = g.kernel.epsilon;
  const double mu =
      lambda * double(g.n) * double(g.n) * eps * eps / (2.0 * double(labels.size()));

  std::vector<u8> labeled(g.n, 0);
  std::vector<double> target(g.n, 0.0);
  for (std::size_t t = 0; t < labels.size(); ++t) {
    labeled[labels.indices[t]] = 1;
    target[labels.indices[t]] = labels.values[t];
  }

  const std::size_t n = g.n;
  std::vector<double> b(n), diag(n), x(n);
  parallel_for(n, [&](std::size_t i) {
    double dg = 0.0;
    for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e)
      if (g.cols[e] == i) dg = g.weights[e];
    b[i] = labeled[i] ? mu * target[i] : 0.0;
    diag[i] = (g.degrees[i] - dg) + (labeled[i] ? mu : 0.0);
  });
  double ybar = detail::degree_weighted_mean(g, labels);
  std::fill(x.begin(), x.end(), ybar);

  auto apply = [&](std::span<const double> in, std::span<double> out) {
    parallel_for(n, [&](std::size_t i) {
      double xi = in[i], s = 0.0;
      for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e)
        s += g.weights[e] * (xi - in[g.cols[e]]);
      out[i] = s + (labeled[i] ? mu * xi : 0.0);
    });
  };
  auto st = detail::conjugate_gradient(apply, b, std::span<double>(x), diag, detail::CgOptions{});

  SolveResult res;
  res.method = SolveMethod::soft;
  res.lambda = lambda;
  res.iterations = st.iterations;
  res.residual = st.relative_residual;
  res.converged = st.converged;
  double misfit = 0.0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    double d = x[labels.indices[t]] - labels.values[t];
    misfit += d * d;
  }
  res.energy =
      dirichlet_energy(g, x, 2.0, n, eps) + lambda / double(labels.size()) * misfit;
  res.u = std::move(x);
  return res;
}

namespace detail {

/// p-energy of u restricted to the graph, without the calibration factor.
inline double p_energy_raw(const SparseGraph& g, const std::vector<double>& weights,
                           std::span<const double> u, double q) {
  return parallel_sum(g.n, [&](std::size_t i) {
    double ui = u[i], s = 0.0;
    for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e)
      s += weights[e] * std::pow(std::abs(ui - u[g.cols[e]]), q);
    return s;
  });
}

}  // namespace detail

/// p-Dirichlet minimizer with hard labels, p > 1, via iteratively reweighted
/// least squares. Exponent continuation from 2 toward p in factors of at most
/// 1.5 plus energy backtracking keeps every accepted step monotone in the
/// stage energy.
inline SolveResult solve_plap(const SparseGraph& g, const LabelSet& labels, double p) {
  require(p > 1.0, errc::usage, "p-Laplace exponent must exceed 1");
  SolveResult res = solve_hard(g, labels);
  res.method = SolveMethod::p_laplace;
  res.p = p;
  if (p == 2.0) return res;

  std::vector<u8> labeled(g.n, 0);
  for (u32 i : labels.indices) labeled[i] = 1;
  std::vector<u32> unlabeled;
  for (std::size_t i = 0; i < g.n; ++i)
    if (!labeled[i]) unlabeled.push_back(u32(i));
  if (unlabeled.empty()) {
    res.energy = dirichlet_energy(g, res.u, p, g.n, g.kernel.epsilon);
    return res;
  }

  std::vector<double> exponents;
  for (double q = 2.0; (p > 2.0 ? q * 1.5 < p : q / 1.5 > p);)
    exponents.push_back(q = (p > 2.0 ? q * 1.5 : q / 1.5));
  exponents.push_back(p);

  const std::size_t m = unlabeled.size();
  std::vector<double>& u = res.u;
  std::vector<double> rw(g.weights.size()), diag(m), b(m), x(m), cand(g.n), full(g.n, 0.0);
  const double floor_diff = 1e-12, floor_weight = 1e-12;
  std::size_t outer_total = 0;
  double stationarity = 0.0;
  bool converged = true;

  for (std::size_t stage = 0; stage < exponents.size(); ++stage) {
    const double q = exponents[stage];
    const bool last = stage + 1 == exponents.size();
    const double tol = last ? 1e-6 : 1e-4;
    double energy = detail::p_energy_raw(g, g.weights, u, q);
    converged = false;
    for (int outer = 0; outer < 120; ++outer) {
      ++outer_total;
      // reweight: w |du|^{q-2}, clamped away from zero and infinity
      parallel_for(g.n, [&](std::size_t i) {
        double ui = u[i];
        for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e) {
          double diff = std::abs(ui - u[g.cols[e]]);
          double f = std::pow(std::max(diff, floor_diff), q - 2.0);
          rw[e] = g.weights[e] * std::max(f, floor_weight);
        }
      });
      parallel_for(m, [&](std::size_t t) {
        u32 i = unlabeled[t];
        double s = 0.0, dsum = 0.0, dg = 0.0;
        for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e) {
          u32 j = g.cols[e];
          dsum += rw[e];
          if (j == i) dg = rw[e];
          if (labeled[j]) s += rw[e] * u[j];
        }
        b[t] = s;
        diag[t] = dsum - dg;
        x[t] = u[i];
      });
      detail::ReducedOperator op{g, rw, unlabeled, full};
      detail::CgOptions cg;
      cg.tol = 1e-10;
      detail::conjugate_gradient(op, b, std::span<double>(x), diag, cg);

      // Backtrack along u -> x; the reweighted solve direction is a descent
      // direction for the q-energy, so some step always reduces it. For q > 2
      // the undamped fixed-point map oscillates around the minimizer, so the
      // line search starts at a half step there.
      std::copy(u.begin(), u.end(), cand.begin());
      double step = q > 2.0 ? 0.5 : 1.0;
      double new_energy = energy;
      for (int halving = 0; halving < 40; ++halving) {
        for (std::size_t t = 0; t < m; ++t) {
          u32 i = unlabeled[t];
          cand[i] = u[i] + step * (x[t] - u[i]);
        }
        new_energy = detail::p_energy_raw(g, g.weights, cand, q);
        if (new_energy <= energy * (1.0 + 1e-14)) break;
        step *= 0.5;
      }
      double moved = 0.0;
      for (std::size_t t = 0; t < m; ++t) {
        u32 i = unlabeled[t];
        moved = std::max(moved, std::abs(u[i] - cand[i]));
        u[i] = cand[i];
      }
      energy = new_energy;

      // stationarity of the q-energy on unlabeled nodes, relative scale
      double grad2 = 0.0, scale2 = 0.0;
      for (std::size_t t = 0; t < m; ++t) {
        u32 i = unlabeled[t];
        double ui = u[i], gsum = 0.0, ssum = 0.0;
        for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e) {
          double diff = ui - u[g.cols[e]];
          double mag = std::pow(std::abs(diff), q - 1.0);
          gsum += g.weights[e] * (diff >= 0.0 ? mag : -mag);
          ssum += g.weights[e] * mag;
        }
        grad2 += gsum * gsum;
        scale2 += ssum * ssum;
      }
      stationarity = std::sqrt(grad2) / std::max(std::sqrt(scale2), 1e-300);
      if (stationarity <= tol || moved == 0.0) {
        converged = stationarity <= tol;
        break;
      }
    }
  }
  res.iterations = outer_total;
  res.residual = stationarity;
  res.converged = converged;
  res.energy = dirichlet_energy(g, u, p, g.n, g.kernel.epsilon);
  return res;
}

struct DegeneracyReport {
  double degenerate_mean = 0.0;  // degree-weighted label mean
  double index = 0.0;            // median |u - mean| over unlabeled, relative to the labels' spread
  std::size_t spike_count = 0;   // labeled nodes far outside the unlabeled value range
};

namespace detail {

inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
  return 0.5 * (v[mid - 1] + hi);
}

}  // namespace detail

/// Diagnostic for the degenerate regime: index near 0 means the solution has
/// collapsed to the constant ybar away from the labels; near 1 means it still
/// tracks the target. spike_count counts labeled nodes that stick out of the
/// unlabeled value distribution by more than five interquartile ranges.
inline DegeneracyReport degeneracy_report(const SparseGraph& g, const LabelSet& labels,
                                          std::span<const double> u,
                                          std::span<const double> target_all = {}) {
  detail::check_labels(g, labels);
  require(u.size() == g.n, errc::usage, "solution length must match graph size");
  require(target_all.empty() || target_all.size() == g.n, errc::usage,
          "target length must match graph size when given");
  DegeneracyReport rep;
  rep.degenerate_mean = detail::degree_weighted_mean(g, labels);

  std::vector<u8> labeled(g.n, 0);
  for (u32 i : labels.indices) labeled[i] = 1;
  std::vector<double> dev_u, dev_g, vals;
  for (std::size_t i = 0; i < g.n; ++i) {
    if (labeled[i]) continue;
    dev_u.push_back(std::abs(u[i] - rep.degenerate_mean));
    vals.push_back(u[i]);
    if (!target_all.empty()) dev_g.push_back(std::abs(target_all[i] - rep.degenerate_mean));
  }
  if (dev_u.empty()) {  // fully labeled: nothing to diagnose
    rep.index = 1.0;
    return rep;
  }
  double med_u = detail::median_of(dev_u);
  double med_g = target_all.empty() ? std::numeric_limits<double>::quiet_NaN()
                                    : detail::median_of(dev_g);
  // NaN when the reference spread is unavailable or zero
  rep.index = med_g > 0.0 ? med_u / med_g : std::numeric_limits<double>::quiet_NaN();

  std::sort(vals.begin(), vals.end());
  double q1 = vals[(vals.size() - 1) / 4];
  double q3 = vals[(vals.size() - 1) * 3 / 4];
  double iqr = q3 - q1;
  for (std::size_t t = 0; t < labels.size(); ++t)
    if (std::abs(u[labels.indices[t]] - rep.degenerate_mean) > 5.0 * iqr) ++rep.spike_count;
  return rep;
}

}  // namespace gssl
