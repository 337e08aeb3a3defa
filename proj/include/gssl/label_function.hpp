#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "gssl/core.hpp"

namespace gssl {

/// Scalar function with optional analytic derivatives; central differences
/// (h = 1e-4) fill in whatever is missing.
struct SmoothFn {
  int dim = 0;
  std::function<double(Point)> value;
  std::function<void(Point, std::span<double>)> gradient;  // may be empty
  std::function<void(Point, std::span<double>)> hessian;   // row-major d*d, may be empty

  double operator()(Point x) const { return value(x); }

  static SmoothFn from(int dim, std::function<double(Point)> f) {
    return SmoothFn{dim, std::move(f), nullptr, nullptr};
  }

  void grad(Point x, std::span<double> out) const {
    if (gradient) {
      gradient(x, out);
      return;
    }
    const double h = 1e-4;
    std::vector<double> y(x.begin(), x.end());
    for (int a = 0; a < dim; ++a) {
      double xa = y[a];
      y[a] = xa + h;
      double fp = value(y);
      y[a] = xa - h;
      double fm = value(y);
      y[a] = xa;
      out[a] = (fp - fm) / (2.0 * h);
    }
  }

  void hess(Point x, std::span<double> out) const {
    if (hessian) {
      hessian(x, out);
      return;
    }
    const double h = 1e-4;
    std::vector<double> y(x.begin(), x.end());
    double f0 = value(y);
    for (int a = 0; a < dim; ++a) {
      for (int b = a; b < dim; ++b) {
        double va = y[a], vb = y[b];
        double s;
        if (a == b) {
          y[a] = va + h;
          double fp = value(y);
          y[a] = va - h;
          double fm = value(y);
          s = (fp - 2.0 * f0 + fm) / (h * h);
        } else {
          y[a] = va + h;
          y[b] = vb + h;
          double fpp = value(y);
          y[b] = vb - h;
          double fpm = value(y);
          y[a] = va - h;
          double fmm = value(y);
          y[b] = vb + h;
          double fmp = value(y);
          s = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
        }
        y[a] = va;
        y[b] = vb;
        out[a * dim + b] = s;
        out[b * dim + a] = s;
      }
    }
  }

  double laplacian(Point x) const {
    std::vector<double> H(std::size_t(dim) * dim);
    hess(x, H);
    double tr = 0.0;
    for (int a = 0; a < dim; ++a) tr += H[a * dim + a];
    return tr;
  }
};

enum class LabelModel { model1, model2 };

namespace detail {

inline constexpr double kSourceOffset = 0.125;  // pole location (1/8, 0, ...)
// Lipschitz truncation of the singular terms: distances to the poles are
// floored at this radius, so g is continuous with gradient bounded by ~1/0.12.
// Just under half the pole separation: coarse enough that the truncation
// layer is resolvable at the coarsest experiment length scales, small enough
// to preserve the two-point structure.
inline constexpr double kClampRadius = 0.12;

/// Distance from x to the axis point (first, 0, ..., 0).
inline double dist(Point x, int d, double first) {
  double r2 = (x[0] - first) * (x[0] - first);
  for (int a = 1; a < d; ++a) r2 += x[a] * x[a];
  return std::sqrt(r2);
}

/// Two-point source solution with Neumann boundary on the unit ball, d = 2.
/// Poles at +-z with z = (1/8, 0); z* = z/|z|^2 is the image point.
inline double two_point_source_2d(Point x) {
  const double zs = 1.0 / kSourceOffset;  // |z*| = 8
  double dzs_m = dist(x, 2, zs), dzs_p = dist(x, 2, -zs);
  double dz_m = std::max(dist(x, 2, kSourceOffset), kClampRadius);
  double dz_p = std::max(dist(x, 2, -kSourceOffset), kClampRadius);
  return std::log(dzs_m * kSourceOffset) - std::log(dzs_p * kSourceOffset) + std::log(dz_m) -
         std::log(dz_p);
}

/// Same construction for d = 3; the image system needs a line-charge term.
inline double two_point_source_3d(Point x) {
  const double zn = kSourceOffset;
  const double zs = 1.0 / kSourceOffset;
  double dzs_m = dist(x, 3, zs), dzs_p = dist(x, 3, -zs);
  double dz_m = std::max(dist(x, 3, zn), kClampRadius);
  double dz_p = std::max(dist(x, 3, -zn), kClampRadius);
  // z/|z| = e1, so the dot products reduce to first coordinates.
  double line_m = (zs - x[0]) + dzs_m;
  double line_p = (zs + x[0]) + dzs_p;
  return 1.0 / (zn * dzs_m) - 1.0 / (zn * dzs_p) + 1.0 / dz_m - 1.0 / dz_p + std::log(line_m) -
         std::log(line_p);
}

}  // namespace detail

/// Exact solutions used as ground truth: Model 1 is the clamped two-point
/// source function (d = 2 or 3), Model 2 a harmonic polynomial valid in any
/// dimension. Both satisfy the homogeneous Neumann condition on the ball.
inline SmoothFn label_function(LabelModel model, int dim) {
  require(dim >= 2, errc::usage, "label function needs dimension >= 2");
  if (model == LabelModel::model1) {
    require(dim == 2 || dim == 3, errc::usage,
            "model 1 label function is defined for dimensions 2 and 3");
    SmoothFn f;
    f.dim = dim;
    f.value = dim == 2 ? std::function<double(Point)>(detail::two_point_source_2d)
                       : std::function<double(Point)>(detail::two_point_source_3d);
    return f;
  }
  // sum_i (-1)^{i-1} x_i^2 - ((-1)^{d-1} + 1) |x|^2 / (2d)
  const double c = (dim % 2 == 1 ? 2.0 : 0.0) / (2.0 * dim);
  SmoothFn f;
  f.dim = dim;
  f.value = [dim, c](Point x) {
    double s = 0.0, r2 = 0.0;
    for (int a = 0; a < dim; ++a) {
      double v = x[a] * x[a];
      s += (a % 2 == 0 ? v : -v);
      r2 += v;
    }
    return s - c * r2;
  };
  f.gradient = [dim, c](Point x, std::span<double> out) {
    for (int a = 0; a < dim; ++a) out[a] = 2.0 * ((a % 2 == 0 ? 1.0 : -1.0) - c) * x[a];
  };
  f.hessian = [dim, c](Point, std::span<double> out) {
    for (auto& v : out) v = 0.0;
    for (int a = 0; a < dim; ++a) out[a * dim + a] = 2.0 * ((a % 2 == 0 ? 1.0 : -1.0) - c);
  };
  return f;
}

/// Smooth non-harmonic label used by the spike demonstration.
inline SmoothFn cosine_label(int dim) {
  require(dim >= 1, errc::usage, "cosine label needs dimension >= 1");
  SmoothFn f;
  f.dim = dim;
  f.value = [](Point x) { return std::cos(x[0]); };
  f.gradient = [dim](Point x, std::span<double> out) {
    for (auto& v : out) v = 0.0;
    out[0] = -std::sin(x[0]);
  };
  f.hessian = [dim](Point x, std::span<double> out) {
    for (auto& v : out) v = 0.0;
    out[0] = -std::cos(x[0]);
  };
  return f;
}

/// First coordinate, g(x) = x_1: harmonic in every dimension and a martingale
/// payoff for symmetric walks.
inline SmoothFn coordinate_label(int dim) {
  require(dim >= 1, errc::usage, "coordinate label needs dimension >= 1");
  SmoothFn f;
  f.dim = dim;
  f.value = [](Point x) { return x[0]; };
  f.gradient = [](Point, std::span<double> out) {
    for (auto& v : out) v = 0.0;
    out[0] = 1.0;
  };
  f.hessian = [](Point, std::span<double> out) {
    for (auto& v : out) v = 0.0;
  };
  return f;
}

/// Direct finite-difference Laplacian, independent of SmoothFn::hess; used to
/// cross-check that the exact label functions are harmonic.
inline double fd_laplacian(const SmoothFn& g, Point x, double h = 1e-4) {
  std::vector<double> y(x.begin(), x.end());
  double f0 = g.value(y);
  double s = 0.0;
  for (int a = 0; a < g.dim; ++a) {
    double xa = y[a];
    y[a] = xa + h;
    double fp = g.value(y);
    y[a] = xa - h;
    double fm = g.value(y);
    y[a] = xa;
    s += (fp - 2.0 * f0 + fm) / (h * h);
  }
  return s;
}

}  // namespace gssl
