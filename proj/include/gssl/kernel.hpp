#pragma once

#include <cmath>
#include <functional>

#include "gssl/core.hpp"

namespace gssl {

enum class KernelKind { gaussian, indicator, custom };

inline const char* name(KernelKind k) {
  switch (k) {
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::indicator: return "indicator";
    default: return "custom";
  }
}

/// Radial weight profile eta on rescaled distance t = r / epsilon, compactly
/// supported in [0, support]. Edge weights are eta_eps(r) = eps^{-d} eta(r/eps).
struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  double epsilon = 1.0;
  double support = 2.0;
  std::function<double(double)> profile;  // custom kind only

  /// exp(-2 t^2) truncated at t = 2, i.e. a Gaussian with sigma = eps/2
  /// cut off at two graph length scales.
  static KernelSpec gaussian(double eps) {
    require(eps > 0.0, errc::usage, "kernel length scale must be positive");
    return {KernelKind::gaussian, eps, 2.0, nullptr};
  }

  /// 1 on [0, 1]: connects every pair within distance eps.
  static KernelSpec indicator(double eps) {
    require(eps > 0.0, errc::usage, "kernel length scale must be positive");
    return {KernelKind::indicator, eps, 1.0, nullptr};
  }

  static KernelSpec custom(double eps, std::function<double(double)> profile, double support) {
    require(eps > 0.0, errc::usage, "kernel length scale must be positive");
    require(support > 0.0 && support <= 2.0, errc::usage,
            "kernel support must lie in (0, 2]");
    require(bool(profile), errc::usage, "custom kernel needs a profile");
    return {KernelKind::custom, eps, support, std::move(profile)};
  }

  double eta(double t) const {
    switch (kind) {
      case KernelKind::gaussian:
        return t < 2.0 ? std::exp(-2.0 * t * t) : 0.0;
      case KernelKind::indicator:
        return t <= 1.0 ? 1.0 : 0.0;
      default:
        return t <= support ? profile(t) : 0.0;
    }
  }

  double eta_eps(double r, int dim) const {
    return std::pow(epsilon, -double(dim)) * eta(r / epsilon);
  }

  /// Physical radius beyond which weights vanish.
  double truncation() const { return support * epsilon; }
};

}  // namespace gssl
