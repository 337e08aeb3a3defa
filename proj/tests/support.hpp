#pragma once

// Shared test fixtures: throwaway output directories and hand-built graphs.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "gssl/graph.hpp"
#include "gssl/labels.hpp"
#include "gssl/parallel.hpp"
#include "gssl/rng.hpp"

namespace gssl::testing {

/// Restores the automatic thread count when a test that pins it exits.
struct ThreadCountGuard {
  ~ThreadCountGuard() { set_thread_count(0); }
};

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<unsigned> counter{0};
    auto base = std::filesystem::temp_directory_path();
    for (;;) {
      auto candidate = base / ("gssl-test-" + std::to_string(counter.fetch_add(1)));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path = candidate;
        return;
      }
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path.string(); }
};

/// CSR graph from an unordered edge list; duplicate pairs accumulate.
/// The kernel field only feeds the energy normalization of the solvers.
inline SparseGraph graph_from_edges(std::size_t n,
                                    const std::vector<std::tuple<u32, u32, double>>& edges,
                                    double eps = 1.0) {
  std::vector<std::map<u32, double>> adj(n);
  for (const auto& [i, j, w] : edges) {
    adj[i][j] += w;
    if (i != j) adj[j][i] += w;
  }
  SparseGraph g;
  g.n = n;
  g.kernel = KernelSpec::indicator(eps);
  g.row_offsets.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) g.row_offsets[i + 1] = g.row_offsets[i] + adj[i].size();
  g.cols.reserve(g.row_offsets[n]);
  g.weights.reserve(g.row_offsets[n]);
  g.degrees.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, w] : adj[i]) {
      g.cols.push_back(j);
      g.weights.push_back(w);
      g.degrees[i] += w;
    }
  }
  return g;
}

/// Random spanning tree plus extra edges, weights in [0.1, 2.1]: connected,
/// moderately conditioned, no self loops.
inline SparseGraph random_connected_graph(Rng& rng, std::size_t n, double extra_per_node = 1.5) {
  std::vector<std::tuple<u32, u32, double>> edges;
  for (std::size_t i = 1; i < n; ++i)
    edges.emplace_back(u32(rng.below(i)), u32(i), 0.1 + 2.0 * rng.uniform());
  auto extras = std::size_t(extra_per_node * double(n));
  for (std::size_t t = 0; t < extras; ++t) {
    u32 i = u32(rng.below(n)), j = u32(rng.below(n));
    if (i == j) continue;
    edges.emplace_back(i, j, 0.1 + 2.0 * rng.uniform());
  }
  return graph_from_edges(n, edges);
}

inline LabelSet random_labels(Rng& rng, std::size_t n, std::size_t count) {
  std::vector<u32> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = u32(i);
  for (std::size_t i = 0; i < count; ++i) std::swap(all[i], all[i + rng.below(n - i)]);
  all.resize(count);
  std::sort(all.begin(), all.end());
  LabelSet labels;
  labels.indices = std::move(all);
  for (std::size_t t = 0; t < count; ++t) labels.values.push_back(2.0 * rng.uniform() - 1.0);
  return labels;
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace gssl::testing
