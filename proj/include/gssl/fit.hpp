#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "gssl/core.hpp"

namespace gssl {

/// Least squares fit of log(error) against log(abscissa): error ~ e^intercept
/// * x^alpha. Callers report alpha under their own sign convention (errors
/// shrinking in epsilon give alpha > 0; errors shrinking in a sample count
/// give a negative slope that is negated on report).
struct RateFit {
  double alpha = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
  int points_used = 0;
};

inline RateFit fit_power_law(std::span<const double> x, std::span<const double> err) {
  require(x.size() == err.size(), errc::usage, "abscissae and errors must pair up");
  std::vector<double> distinct(x.begin(), x.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  require(distinct.size() >= 3, errc::usage, "power-law fit needs at least 3 distinct abscissae");
  for (std::size_t i = 0; i < x.size(); ++i)
    require(x[i] > 0.0 && err[i] > 0.0, errc::data,
            "power-law fit needs positive abscissae and errors");

  const std::size_t m = x.size();
  std::vector<double> lx(m), le(m);
  for (std::size_t i = 0; i < m; ++i) {
    lx[i] = std::log(x[i]);
    le[i] = std::log(err[i]);
  }
  double mx = 0.0, me = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += lx[i];
    me += le[i];
  }
  mx /= double(m);
  me /= double(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (le[i] - me);
  }
  RateFit fit;
  fit.alpha = sxy / sxx;
  fit.intercept = me - fit.alpha * mx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double pred = fit.intercept + fit.alpha * lx[i];
    ss_res += (le[i] - pred) * (le[i] - pred);
    ss_tot += (le[i] - me) * (le[i] - me);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.points_used = int(m);
  return fit;
}

}  // namespace gssl
