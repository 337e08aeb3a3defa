#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gssl/core.hpp"
#include "gssl/domain.hpp"
#include "gssl/rng.hpp"

namespace gssl {

/// n points in row-major layout, i.i.d. uniform over the domain.
struct PointCloud {
  DomainSpec domain;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<double> coords;

  int dim() const { return domain.dim; }
  Point point(std::size_t i) const {
    return Point(coords.data() + i * std::size_t(domain.dim), std::size_t(domain.dim));
  }
};

/// Single-threaded, one stream per (domain, n, seed): the same call always
/// yields the same coordinates byte for byte.
inline PointCloud sample_points(const DomainSpec& domain, std::size_t n, std::uint64_t seed) {
  require(n >= 1, errc::usage, "point count must be >= 1");
  const int d = domain.dim;
  PointCloud cloud{domain, n, seed, {}};
  cloud.coords.resize(n * std::size_t(d));
  Rng rng = Rng::stream(seed, 0x706F696E74ull);  // sampling stream
  if (domain.kind == DomainKind::unit_cube) {
    for (double& c : cloud.coords) c = rng.uniform();
    return cloud;
  }
  // Uniform in the ball: normalized Gaussian direction, radius U^{1/d}.
  std::vector<double> g(d);
  for (std::size_t i = 0; i < n; ++i) {
    double norm2;
    do {
      norm2 = 0.0;
      for (int a = 0; a < d; ++a) {
        g[a] = rng.normal();
        norm2 += g[a] * g[a];
      }
    } while (norm2 == 0.0);
    double r = std::pow(rng.uniform(), 1.0 / d) / std::sqrt(norm2);
    for (int a = 0; a < d; ++a) cloud.coords[i * d + a] = g[a] * r;
  }
  return cloud;
}

}  // namespace gssl
