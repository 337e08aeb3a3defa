#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "gssl/core.hpp"

namespace gssl {

enum class DomainKind { unit_ball, unit_cube };

inline const char* name(DomainKind k) {
  return k == DomainKind::unit_ball ? "unit_ball" : "unit_cube";
}

inline double unit_ball_volume(int dim) {
  return std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim + 1.0);
}

/// Unit ball B(0,1) or unit cube [0,1]^d, d >= 2, with uniform density.
struct DomainSpec {
  DomainKind kind = DomainKind::unit_ball;
  int dim = 2;

  static DomainSpec ball(int d) {
    require(d >= 2, errc::usage, "domain dimension must be >= 2");
    return {DomainKind::unit_ball, d};
  }
  static DomainSpec cube(int d) {
    require(d >= 2, errc::usage, "domain dimension must be >= 2");
    return {DomainKind::unit_cube, d};
  }

  bool contains(Point x) const {
    if (kind == DomainKind::unit_ball) {
      double r2 = 0.0;
      for (double v : x) r2 += v * v;
      return r2 < 1.0;
    }
    for (double v : x)
      if (v < 0.0 || v > 1.0) return false;
    return true;
  }

  double volume() const {
    return kind == DomainKind::unit_cube ? 1.0 : unit_ball_volume(dim);
  }

  /// Distance to the boundary from an interior point.
  double boundary_distance(Point x) const {
    if (kind == DomainKind::unit_ball) {
      double r2 = 0.0;
      for (double v : x) r2 += v * v;
      return 1.0 - std::sqrt(r2);
    }
    double d = 1.0;
    for (double v : x) {
      d = std::min(d, v);
      d = std::min(d, 1.0 - v);
    }
    return d;
  }

  /// Outward unit normal, extended off the boundary (radially for the ball,
  /// by nearest face for the cube; face ties resolved by lowest axis).
  void outward_normal(Point x, std::span<double> out) const {
    if (kind == DomainKind::unit_ball) {
      double r2 = 0.0;
      for (double v : x) r2 += v * v;
      double r = std::sqrt(r2);
      if (r == 0.0) {
        for (auto& v : out) v = 0.0;
        out[0] = 1.0;
        return;
      }
      for (int a = 0; a < dim; ++a) out[a] = x[a] / r;
      return;
    }
    int axis = 0;
    double sign = -1.0, best = x[0];
    for (int a = 0; a < dim; ++a) {
      if (x[a] < best) {
        best = x[a];
        axis = a;
        sign = -1.0;
      }
      if (1.0 - x[a] < best) {
        best = 1.0 - x[a];
        axis = a;
        sign = 1.0;
      }
    }
    for (auto& v : out) v = 0.0;
    out[axis] = sign;
  }

  void bounding_box(std::span<double> lo, std::span<double> hi) const {
    double a = kind == DomainKind::unit_ball ? -1.0 : 0.0;
    double b = 1.0;
    for (int i = 0; i < dim; ++i) {
      lo[i] = a;
      hi[i] = b;
    }
  }

  /// Center of the domain; the labeled subset of Model 1 is a ball around it.
  void center(std::span<double> out) const {
    double c = kind == DomainKind::unit_ball ? 0.0 : 0.5;
    for (int i = 0; i < dim; ++i) out[i] = c;
  }
};

/// Constant sampling density; uniform means 1/Vol over the domain.
struct Density {
  double value = 1.0;
  static Density uniform(const DomainSpec& d) { return {1.0 / d.volume()}; }
  double operator()(Point) const { return value; }
};

}  // namespace gssl
