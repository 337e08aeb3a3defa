#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gssl/core.hpp"
#include "gssl/label_function.hpp"
#include "gssl/point_cloud.hpp"
#include "gssl/rng.hpp"

namespace gssl {

enum class LabelRegion {
  subset_ball,    // ball of given radius around the domain center
  boundary_band,  // points within delta of the boundary
  everywhere,     // whole domain (Bernoulli thinning only)
};

/// A point is labeled iff it lies in the region and an independent
/// Bernoulli(beta) coin comes up heads.
struct LabelModelSpec {
  LabelRegion region = LabelRegion::subset_ball;
  double beta = 1.0;
  double radius = 0.5;  // subset_ball
  double delta = 0.0;   // boundary_band

  static LabelModelSpec subset(double beta, double radius = 0.5) {
    require(beta >= 0.0 && beta <= 1.0, errc::usage, "label rate beta must lie in [0,1]");
    require(radius > 0.0 && radius < 1.0, errc::usage,
            "label subset radius must lie strictly inside the domain");
    return {LabelRegion::subset_ball, beta, radius, 0.0};
  }
  static LabelModelSpec band(double beta, double delta) {
    require(beta >= 0.0 && beta <= 1.0, errc::usage, "label rate beta must lie in [0,1]");
    require(delta > 0.0, errc::usage, "band width delta must be positive");
    return {LabelRegion::boundary_band, beta, 0.5, delta};
  }
  static LabelModelSpec everywhere(double beta) {
    require(beta >= 0.0 && beta <= 1.0, errc::usage, "label rate beta must lie in [0,1]");
    return {LabelRegion::everywhere, beta, 0.5, 0.0};
  }

  bool in_region(const DomainSpec& domain, Point x) const {
    switch (region) {
      case LabelRegion::subset_ball: {
        std::vector<double> c(domain.dim);
        domain.center(c);
        double r2 = 0.0;
        for (int a = 0; a < domain.dim; ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
        return r2 < radius * radius;
      }
      case LabelRegion::boundary_band:
        return domain.boundary_distance(x) < delta;
      case LabelRegion::everywhere:
        return true;
    }
    return false;
  }
};

struct LabelSet {
  std::vector<u32> indices;  // strictly increasing
  std::vector<double> values;
  std::size_t size() const { return indices.size(); }
};

/// Every point consumes exactly one uniform draw whether or not it is in the
/// region, so the labeled set for a given seed is stable under region changes.
inline LabelSet select_labels(const PointCloud& cloud, const LabelModelSpec& spec,
                              const SmoothFn& g, std::uint64_t seed) {
  require(g.dim == cloud.dim(), errc::usage, "label function dimension mismatch");
  LabelSet out;
  Rng rng = Rng::stream(seed, 0x6C6162656Cull);  // labeling stream
  for (std::size_t i = 0; i < cloud.n; ++i) {
    double coin = rng.uniform();
    if (coin < spec.beta && spec.in_region(cloud.domain, cloud.point(i))) {
      out.indices.push_back(u32(i));
      out.values.push_back(g(cloud.point(i)));
    }
  }
  return out;
}

/// Labels at caller-chosen node indices (used by the spike demo and tests).
inline LabelSet labels_at(const PointCloud& cloud, std::vector<u32> indices, const SmoothFn& g) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  require(indices.empty() || indices.back() < cloud.n, errc::usage, "label index out of range");
  LabelSet out;
  out.indices = std::move(indices);
  out.values.reserve(out.indices.size());
  for (u32 i : out.indices) out.values.push_back(g(cloud.point(i)));
  return out;
}

/// A uniformly chosen subset of exactly `count` nodes (Fisher-Yates prefix).
inline std::vector<u32> sample_indices(std::size_t n, std::size_t count, std::uint64_t seed) {
  require(count <= n, errc::usage, "cannot sample more indices than points");
  std::vector<u32> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = u32(i);
  Rng rng = Rng::stream(seed, 0x73686F7274ull);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = i + std::size_t(rng.below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace gssl
