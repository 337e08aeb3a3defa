#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "gssl/core.hpp"
#include "gssl/grid_index.hpp"
#include "gssl/kernel.hpp"
#include "gssl/parallel.hpp"
#include "gssl/point_cloud.hpp"

namespace gssl {

enum class GraphConstruction { epsilon, knn };

/// Symmetric weighted graph in CSR form. Rows keep the self-loop entry
/// (weight eta_eps(0) for epsilon graphs, 1 for kNN graphs); degrees are the
/// full row sums including it.
struct SparseGraph {
  std::size_t n = 0;
  std::vector<u64> row_offsets;  // n + 1
  std::vector<u32> cols;
  std::vector<double> weights;
  std::vector<double> degrees;
  KernelSpec kernel;
  GraphConstruction construction = GraphConstruction::epsilon;
  int k = 0;  // kNN only

  std::size_t nnz() const { return cols.size(); }
  std::pair<u64, u64> row(std::size_t i) const { return {row_offsets[i], row_offsets[i + 1]}; }
};

/// Connectivity length scale (log n / n)^{1/(d+2)}: the smallest epsilon at
/// which pointwise consistency of the graph Laplacian still holds.
inline double eps_scale(std::size_t n, int dim) {
  require(n >= 2, errc::usage, "length scale needs n >= 2");
  require(dim >= 1, errc::usage, "length scale needs dimension >= 1");
  return std::pow(std::log(double(n)) / double(n), 1.0 / double(dim + 2));
}

/// All pairs within the kernel truncation radius, weights eta_eps(|x_i-x_j|).
/// Weight computation is symmetric in floating point, so w_ij == w_ji exactly.
inline SparseGraph build_eps_graph(const PointCloud& cloud, const KernelSpec& kernel) {
  const int d = cloud.dim();
  const std::size_t n = cloud.n;
  require(n >= 1, errc::usage, "graph needs at least one point");
  const double trunc = kernel.truncation();
  const double trunc2 = trunc * trunc;
  const double inv_eps = 1.0 / kernel.epsilon;
  const double scale = std::pow(kernel.epsilon, -double(d));
  const GridIndex grid(cloud.coords.data(), n, d, trunc);

  SparseGraph g;
  g.n = n;
  g.kernel = kernel;
  g.construction = GraphConstruction::epsilon;
  g.row_offsets.assign(n + 1, 0);

  // pass 1: row sizes
  std::vector<u32> row_size(n, 0);
  parallel_for(n, [&](std::size_t i) {
    const double* xi = cloud.coords.data() + i * d;
    u32 cnt = 0;
    grid.for_candidates(xi, trunc, [&](u32 j) {
      const double* xj = cloud.coords.data() + std::size_t(j) * d;
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) r2 += (xi[a] - xj[a]) * (xi[a] - xj[a]);
      if (r2 > trunc2) return;
      if (kernel.eta(std::sqrt(r2) * inv_eps) > 0.0) ++cnt;
    });
    row_size[i] = cnt;
  });
  for (std::size_t i = 0; i < n; ++i) g.row_offsets[i + 1] = g.row_offsets[i] + row_size[i];

  // pass 2: fill
  g.cols.resize(g.row_offsets[n]);
  g.weights.resize(g.row_offsets[n]);
  parallel_for(n, [&](std::size_t i) {
    const double* xi = cloud.coords.data() + i * d;
    u64 at = g.row_offsets[i];
    grid.for_candidates(xi, trunc, [&](u32 j) {
      const double* xj = cloud.coords.data() + std::size_t(j) * d;
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) r2 += (xi[a] - xj[a]) * (xi[a] - xj[a]);
      if (r2 > trunc2) return;
      double w = kernel.eta(std::sqrt(r2) * inv_eps);
      if (w > 0.0) {
        g.cols[at] = j;
        g.weights[at] = scale * w;
        ++at;
      }
    });
  });

  g.degrees.resize(n);
  parallel_for(n, [&](std::size_t i) {
    double s = 0.0;
    for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e) s += g.weights[e];
    g.degrees[i] = s;
  });
  return g;
}

namespace detail {

/// Max-heap entry ordered by (distance^2, index); ties prefer smaller index,
/// so the selected neighbor set is unique.
struct KnnEntry {
  double d2;
  u32 j;
  bool operator<(const KnnEntry& o) const { return d2 < o.d2 || (d2 == o.d2 && j < o.j); }
};

}  // namespace detail

/// Mutual-average kNN graph with self-tuned Gaussian weights: each node uses
/// bandwidth sigma_i^2 = d_k(i)^2 / 8 on its k nearest neighbors (self
/// excluded from the neighbor count, self-weight 1), then W <- (W + W^T)/2.
inline SparseGraph build_knn_graph(const double* pts, std::size_t n, int dim, int k) {
  require(n >= 2, errc::usage, "kNN graph needs at least two points");
  require(k >= 1 && std::size_t(k) < n, errc::usage, "kNN graph needs 1 <= k < n");

  std::vector<detail::KnnEntry> heaps(n * std::size_t(k));
  std::vector<int> heap_size(n, 0);
  auto heap = [&](std::size_t i) { return heaps.data() + i * std::size_t(k); };
  auto offer = [&](std::size_t i, double d2, u32 j) {
    auto* h = heap(i);
    int& m = heap_size[i];
    detail::KnnEntry e{d2, j};
    if (m < k) {
      h[m++] = e;
      std::push_heap(h, h + m);
    } else if (e < h[0]) {
      std::pop_heap(h, h + m);
      h[m - 1] = e;
      std::push_heap(h, h + m);
    }
  };

  // Lower-triangle scan feeds both endpoints' heaps; blocked for locality.
  const std::size_t block = 256;
  for (std::size_t ib = 0; ib < n; ib += block) {
    std::size_t ie = std::min(ib + block, n);
    for (std::size_t jb = 0; jb <= ib; jb += block) {
      std::size_t je = std::min(jb + block, n);
      for (std::size_t i = ib; i < ie; ++i) {
        const double* xi = pts + i * dim;
        std::size_t jhi = std::min(je, i);
        for (std::size_t j = jb; j < jhi; ++j) {
          const double* xj = pts + j * dim;
          double d2 = 0.0;
          for (int a = 0; a < dim; ++a) {
            double diff = xi[a] - xj[a];
            d2 += diff * diff;
          }
          offer(i, d2, u32(j));
          offer(j, d2, u32(i));
        }
      }
    }
  }

  // Directed weights, then symmetrize via sorted COO merge.
  struct Coo {
    u32 i, j;
    double w;
  };
  std::vector<Coo> coo;
  coo.reserve(2 * n * std::size_t(k + 1));
  for (std::size_t i = 0; i < n; ++i) {
    coo.push_back({u32(i), u32(i), 1.0});  // exp(0) self-weight
    const auto* h = heap(i);
    double dk2 = 0.0;
    for (int t = 0; t < heap_size[i]; ++t) dk2 = std::max(dk2, h[t].d2);
    double two_sigma2 = dk2 / 4.0;  // 2 * (d_k^2 / 8)
    for (int t = 0; t < heap_size[i]; ++t) {
      double w = h[t].d2 == 0.0 ? 1.0 : (two_sigma2 == 0.0 ? 0.0 : std::exp(-h[t].d2 / two_sigma2));
      if (w <= 0.0) continue;
      coo.push_back({u32(i), h[t].j, 0.5 * w});
      coo.push_back({h[t].j, u32(i), 0.5 * w});
    }
  }
  // Self entries appear once per node; scale them after the loop above.
  // (Directed self-weight 1 contributes (1 + 1)/2 = 1 after symmetrization.)
  std::sort(coo.begin(), coo.end(), [](const Coo& a, const Coo& b) {
    return a.i < b.i || (a.i == b.i && a.j < b.j);
  });

  SparseGraph g;
  g.n = n;
  g.kernel = KernelSpec{KernelKind::gaussian, 1.0, 2.0, nullptr};
  g.construction = GraphConstruction::knn;
  g.k = k;
  g.row_offsets.assign(n + 1, 0);
  for (std::size_t s = 0; s < coo.size();) {
    std::size_t e = s;
    double w = 0.0;
    while (e < coo.size() && coo[e].i == coo[s].i && coo[e].j == coo[s].j) w += coo[e++].w;
    g.cols.push_back(coo[s].j);
    g.weights.push_back(w);
    ++g.row_offsets[coo[s].i + 1];
    s = e;
  }
  for (std::size_t i = 0; i < n; ++i) g.row_offsets[i + 1] += g.row_offsets[i];
  g.degrees.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e) s += g.weights[e];
    g.degrees[i] = s;
  }
  return g;
}

inline SparseGraph build_knn_graph(const PointCloud& cloud, int k) {
  return build_knn_graph(cloud.coords.data(), cloud.n, cloud.dim(), k);
}

struct LaplacianScaling {
  bool calibrated = false;
  double n = 1.0;
  double eps = 1.0;
  static LaplacianScaling unnormalized() { return {}; }
  static LaplacianScaling calibrated_by(double n, double eps) { return {true, n, eps}; }
};

/// (L u)_i = sum_j w_ij (u_i - u_j), optionally divided by n eps^2. Each term
/// vanishes identically for constant u, so L(const) is exactly zero.
inline std::vector<double> laplacian_apply(const SparseGraph& g, std::span<const double> u,
                                           LaplacianScaling scaling = {}) {
  require(u.size() == g.n, errc::usage, "vector length must match graph size");
  std::vector<double> out(g.n);
  const double factor = scaling.calibrated ? 1.0 / (scaling.n * scaling.eps * scaling.eps) : 1.0;
  parallel_for(g.n, [&](std::size_t i) {
    double ui = u[i], s = 0.0;
    for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e)
      s += g.weights[e] * (ui - u[g.cols[e]]);
    out[i] = factor * s;
  });
  return out;
}

/// (1 / n^2 eps^p) sum over ordered pairs of w_ij |u_i - u_j|^p.
inline double dirichlet_energy(const SparseGraph& g, std::span<const double> u, double p,
                               std::size_t n, double eps) {
  require(u.size() == g.n, errc::usage, "vector length must match graph size");
  require(p > 1.0, errc::usage, "energy exponent must exceed 1");
  double sum;
  if (p == 2.0) {
    sum = parallel_sum(g.n, [&](std::size_t i) {
      double ui = u[i], s = 0.0;
      for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e) {
        double diff = ui - u[g.cols[e]];
        s += g.weights[e] * diff * diff;
      }
      return s;
    });
  } else {
    sum = parallel_sum(g.n, [&](std::size_t i) {
      double ui = u[i], s = 0.0;
      for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e)
        s += g.weights[e] * std::pow(std::abs(ui - u[g.cols[e]]), p);
      return s;
    });
  }
  return sum / (double(n) * double(n) * std::pow(eps, p));
}

/// Subgraph on the given nodes (sorted, strictly increasing); edges with both
/// endpoints kept survive with their weights, degrees are recomputed.
inline SparseGraph induced_subgraph(const SparseGraph& g, const std::vector<u32>& keep) {
  require(!keep.empty(), errc::usage, "subgraph needs at least one node");
  for (std::size_t t = 0; t < keep.size(); ++t) {
    require(keep[t] < g.n, errc::usage, "subgraph node out of range");
    require(t == 0 || keep[t - 1] < keep[t], errc::usage,
            "subgraph nodes must be strictly increasing");
  }
  std::vector<u32> newid(g.n, u32(-1));
  for (std::size_t t = 0; t < keep.size(); ++t) newid[keep[t]] = u32(t);

  SparseGraph s;
  s.n = keep.size();
  s.kernel = g.kernel;
  s.construction = g.construction;
  s.k = g.k;
  s.row_offsets.assign(s.n + 1, 0);
  for (std::size_t t = 0; t < keep.size(); ++t) {
    u32 i = keep[t];
    u64 kept = 0;
    for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e)
      if (newid[g.cols[e]] != u32(-1)) ++kept;
    s.row_offsets[t + 1] = s.row_offsets[t] + kept;
  }
  s.cols.resize(s.row_offsets.back());
  s.weights.resize(s.row_offsets.back());
  for (std::size_t t = 0; t < keep.size(); ++t) {
    u32 i = keep[t];
    u64 at = s.row_offsets[t];
    for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e) {
      u32 j = newid[g.cols[e]];
      if (j == u32(-1)) continue;
      s.cols[at] = j;
      s.weights[at] = g.weights[e];
      ++at;
    }
  }
  s.degrees.resize(s.n);
  for (std::size_t t = 0; t < s.n; ++t) {
    double sum = 0.0;
    for (u64 e = s.row_offsets[t]; e < s.row_offsets[t + 1]; ++e) sum += s.weights[e];
    s.degrees[t] = sum;
  }
  return s;
}

/// Component id per node (ids ordered by smallest member) and component count.
inline std::pair<std::vector<u32>, u32> connected_components(const SparseGraph& g) {
  std::vector<u32> comp(g.n, u32(-1));
  std::vector<u32> stack;
  u32 count = 0;
  for (std::size_t s = 0; s < g.n; ++s) {
    if (comp[s] != u32(-1)) continue;
    comp[s] = count;
    stack.push_back(u32(s));
    while (!stack.empty()) {
      u32 v = stack.back();
      stack.pop_back();
      for (u64 e = g.row_offsets[v]; e < g.row_offsets[v + 1]; ++e) {
        u32 w = g.cols[e];
        if (comp[w] == u32(-1)) {
          comp[w] = count;
          stack.push_back(w);
        }
      }
    }
    ++count;
  }
  return {std::move(comp), count};
}

namespace detail {

template <class T>
void write_raw(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void write_raw(std::ofstream& f, const std::vector<T>& v) {
  f.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(T)));
}
template <class T>
void read_raw(std::ifstream& f, T& v) {
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
}
template <class T>
void read_raw(std::ifstream& f, std::vector<T>& v, std::size_t count) {
  v.resize(count);
  f.read(reinterpret_cast<char*>(v.data()), std::streamsize(count * sizeof(T)));
}

}  // namespace detail

/// Binary CSR container: "GSSL", version u32, n u64, nnz u64, row offsets
/// (u64), column indices (u32), weights (f64); little-endian throughout.
/// Carries topology and weights only; kernel metadata lives beside it in the
/// exporters that need it.
inline void save_graph(const SparseGraph& g, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  require(bool(f), errc::data, "cannot open graph file for writing: " + path);
  f.write("GSSL", 4);
  detail::write_raw(f, u32{1});
  detail::write_raw(f, u64{g.n});
  detail::write_raw(f, u64{g.nnz()});
  detail::write_raw(f, g.row_offsets);
  detail::write_raw(f, g.cols);
  detail::write_raw(f, g.weights);
  require(bool(f), errc::data, "short write to graph file: " + path);
}

inline SparseGraph load_graph(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(bool(f), errc::data, "cannot open graph file: " + path);
  char magic[4] = {};
  f.read(magic, 4);
  require(f && std::memcmp(magic, "GSSL", 4) == 0, errc::data,
          "not a graph container (bad magic): " + path);
  u32 version = 0;
  detail::read_raw(f, version);
  require(version == 1, errc::data, "unsupported graph container version");
  u64 n = 0, nnz = 0;
  detail::read_raw(f, n);
  detail::read_raw(f, nnz);
  SparseGraph g;
  g.n = std::size_t(n);
  detail::read_raw(f, g.row_offsets, std::size_t(n) + 1);
  detail::read_raw(f, g.cols, std::size_t(nnz));
  detail::read_raw(f, g.weights, std::size_t(nnz));
  require(bool(f), errc::data, "truncated graph container: " + path);
  require(g.row_offsets.front() == 0 && g.row_offsets.back() == nnz, errc::data,
          "inconsistent row offsets in graph container: " + path);
  for (std::size_t i = 0; i < g.n; ++i)
    require(g.row_offsets[i] <= g.row_offsets[i + 1], errc::data,
            "row offsets not monotone in graph container: " + path);
  for (u32 c : g.cols)
    require(c < g.n, errc::data, "column index out of range in graph container: " + path);
  g.degrees.resize(g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    double s = 0.0;
    for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e) s += g.weights[e];
    g.degrees[i] = s;
  }
  return g;
}

/// Undirected edge list (i < j only), row-major, columns sorted within a row.
inline void write_edges_csv(const SparseGraph& g, const std::string& path) {
  std::ofstream f(path);
  require(bool(f), errc::data, "cannot open edge list for writing: " + path);
  f << "i,j,weight\n";
  std::vector<std::pair<u32, double>> row;
  for (std::size_t i = 0; i < g.n; ++i) {
    row.clear();
    for (u64 e = g.row_offsets[i]; e < g.row_offsets[i + 1]; ++e)
      if (g.cols[e] > i) row.emplace_back(g.cols[e], g.weights[e]);
    std::sort(row.begin(), row.end());
    for (auto& [j, w] : row)
      f << i << ',' << j << ',' << format_double(w) << '\n';
  }
  require(bool(f), errc::data, "short write to edge list: " + path);
}

}  // namespace gssl
