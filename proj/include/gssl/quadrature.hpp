#pragma once

#include <cmath>
#include <numbers>

#include "gssl/core.hpp"

namespace gssl {

struct QuadratureResult {
  double value = 0.0;
  bool converged = false;
  int levels = 0;
};

/// Composite midpoint rule, doubling the panel count until two successive
/// values agree to rel_tol (with a tiny absolute floor for integrals that
/// vanish). Midpoints never touch the interval ends, so integrands may be
/// discontinuous at the boundary.
template <class F>
QuadratureResult midpoint_refine(F&& f, double a, double b, double rel_tol = 1e-6,
                                 int max_levels = 16, int initial_panels = 8) {
  QuadratureResult res;
  if (!(b > a)) {
    res.converged = true;
    return res;
  }
  double prev = 0.0;
  long panels = initial_panels;
  for (int level = 0; level <= max_levels; ++level, panels *= 2) {
    const double h = (b - a) / double(panels);
    double s = 0.0;
    for (long k = 0; k < panels; ++k) s += f(a + (double(k) + 0.5) * h);
    s *= h;
    res.value = s;
    res.levels = level;
    if (level > 0 && std::abs(s - prev) <= rel_tol * std::abs(s) + 1e-14) {
      res.converged = true;
      return res;
    }
    prev = s;
  }
  return res;
}

template <class F>
double midpoint_refine_checked(F&& f, double a, double b, double rel_tol = 1e-6,
                               int max_levels = 16, int initial_panels = 8) {
  auto res = midpoint_refine(f, a, b, rel_tol, max_levels, initial_panels);
  require(res.converged, errc::numeric,
          "quadrature failed to converge to relative tolerance " + format_double(rel_tol));
  return res.value;
}

/// Surface area of the unit sphere S^{d-1} in R^d; d = 1 gives 2 (two points).
inline double unit_sphere_area(int d) {
  require(d >= 1, errc::usage, "sphere dimension must be >= 1");
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

/// Antiderivative of sin^d on [0, phi] by the standard reduction
/// S_d = (-cos sin^{d-1} + (d-1) S_{d-2}) / d.
inline double sin_power_integral(int d, double phi) {
  require(d >= 0, errc::usage, "sine power must be non-negative");
  if (d == 0) return phi;
  if (d == 1) return 1.0 - std::cos(phi);
  double s0 = phi;                  // S_0
  double s1 = 1.0 - std::cos(phi);  // S_1
  double sp = std::sin(phi), cp = std::cos(phi);
  double cur = d % 2 == 0 ? s0 : s1;
  for (int k = d % 2 == 0 ? 2 : 3; k <= d; k += 2)
    cur = (-cp * std::pow(sp, double(k - 1)) + double(k - 1) * cur) / double(k);
  return cur;
}

}  // namespace gssl
