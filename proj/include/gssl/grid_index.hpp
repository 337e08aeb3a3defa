#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gssl/core.hpp"

namespace gssl {

/// Uniform bucket grid over the bounding box of a point set. Queries visit
/// points whose cell lies within a given radius; exact distance filtering is
/// the caller's job. Buckets hold point ids in ascending order, so traversal
/// order is a pure function of the coordinates.
class GridIndex {
 public:
  GridIndex(const double* pts, std::size_t n, int dim, double cell) : dim_(dim) {
    require(cell > 0.0, errc::usage, "grid cell size must be positive");
    lo_.assign(dim, 0.0);
    std::vector<double> hi(dim, 0.0);
    for (int a = 0; a < dim; ++a) lo_[a] = hi[a] = pts[a];
    for (std::size_t i = 1; i < n; ++i)
      for (int a = 0; a < dim; ++a) {
        double v = pts[i * dim + a];
        lo_[a] = std::min(lo_[a], v);
        hi[a] = std::max(hi[a], v);
      }
    // Cap total cell count near 2^22 so the bucket table stays small even for
    // cell sizes far below the point spacing.
    const long axis_cap = std::max(1l, long(std::floor(std::pow(4194304.0, 1.0 / dim))));
    res_.assign(dim, 1);
    cell_.assign(dim, 1.0);
    std::size_t cells = 1;
    for (int a = 0; a < dim; ++a) {
      double extent = hi[a] - lo_[a];
      long r = extent > 0.0 ? long(std::floor(extent / cell)) : 0;
      res_[a] = std::max(1l, std::min(r, axis_cap));
      cell_[a] = extent > 0.0 ? extent / double(res_[a]) : 1.0;
      cells *= std::size_t(res_[a]);
    }
    strides_.assign(dim, 1);
    for (int a = dim - 2; a >= 0; --a) strides_[a] = strides_[a + 1] * std::size_t(res_[a + 1]);
    // counting sort of point ids into cells
    std::vector<u32> counts(cells + 1, 0);
    std::vector<u32> cell_of(n);
    for (std::size_t i = 0; i < n; ++i) {
      cell_of[i] = u32(cell_id(pts + i * dim));
      ++counts[cell_of[i] + 1];
    }
    for (std::size_t c = 0; c < cells; ++c) counts[c + 1] += counts[c];
    order_.resize(n);
    std::vector<u32> cursor(counts.begin(), counts.end() - 1);
    for (std::size_t i = 0; i < n; ++i) order_[cursor[cell_of[i]]++] = u32(i);
    starts_ = std::move(counts);
  }

  /// Calls f(id) for every point whose cell intersects the box of the given
  /// radius around x. Cells are scanned in lexicographic order.
  template <class F>
  void for_candidates(const double* x, double radius, F&& f) const {
    std::vector<long> base(dim_), delta(dim_), reach(dim_);
    for (int a = 0; a < dim_; ++a) {
      base[a] = axis_cell(x[a], a);
      reach[a] = long(std::ceil(radius / cell_[a]));
      delta[a] = -reach[a];
    }
    for (;;) {
      bool valid = true;
      std::size_t id = 0;
      for (int a = 0; a < dim_ && valid; ++a) {
        long c = base[a] + delta[a];
        if (c < 0 || c >= res_[a]) valid = false;
        else id += std::size_t(c) * strides_[a];
      }
      if (valid)
        for (u32 k = starts_[id]; k < starts_[id + 1]; ++k) f(order_[k]);
      int a = dim_ - 1;
      while (a >= 0) {
        if (++delta[a] <= reach[a]) break;
        delta[a] = -reach[a];
        --a;
      }
      if (a < 0) return;
    }
  }

 private:
  long axis_cell(double v, int a) const {
    long c = long(std::floor((v - lo_[a]) / cell_[a]));
    return std::clamp(c, 0l, res_[a] - 1);
  }
  std::size_t cell_id(const double* p) const {
    std::size_t id = 0;
    for (int a = 0; a < dim_; ++a) id += std::size_t(axis_cell(p[a], a)) * strides_[a];
    return id;
  }

  int dim_;
  std::vector<double> lo_, cell_;
  std::vector<long> res_;
  std::vector<std::size_t> strides_;
  std::vector<u32> starts_;
  std::vector<u32> order_;
};

}  // namespace gssl
