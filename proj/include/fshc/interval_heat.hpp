#pragma once

// Dirichlet heat content of an interval (0, L) for Brownian motion with
// generator Delta (transition variance 2t). Two independent representations:
//
//   spectral:   Q = sum_{n odd} 8L/(n pi)^2 exp(-(n pi / L)^2 t)
//   reflection: L - Q = 4 sqrt(t/pi) - 8 sigma sum_{k>=1} (-1)^{k+1} m(k L / sigma),
//               sigma = sqrt(2t), m(x) = phi(x) - x Phibar(x)
//
// Both return the heat loss L - Q directly so small losses keep full
// relative accuracy.

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "fshc/error.hpp"

namespace fshc {

enum class IntervalKernel { Auto, Reflection, Spectral };

struct IntervalHeat {
  double content = 0.0;  // Q
  double loss = 0.0;     // L - Q
  double error = 0.0;    // bound on |error| of either
};

inline constexpr double kReflectionCrossover = 0.1;

namespace detail {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

/// phi(x) - x * Phibar(x), the standard normal stop-loss transform.
inline double normal_stop_loss(double x) {
  const double phi = std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi);
  if (x < 3.0) return phi - x * 0.5 * boost::math::erfc(x / std::numbers::sqrt2);
  // Mills ratio R = 1/f with f = x + 1/g, g = x + 2/(x + 3/(x + ...)),
  // so 1 - x R = 1/(g f) without cancellation.
  double g = x;
  for (int k = 80; k >= 2; --k) g = x + k / g;
  const double f = x + 1.0 / g;
  const double one_minus_xr = 1.0 / (g * f);
  return phi * one_minus_xr;
}

}  // namespace detail

inline IntervalHeat interval_heat_reflection(double L, double t) {
  require(L > 0, "interval length must be positive");
  require(t >= 0, "time must be non-negative");
  if (t == 0) return {L, 0.0, 0.0};
  const double sigma = std::sqrt(2 * t);
  const double ell = L / sigma;
  const double lead = 4 * std::sqrt(t / std::numbers::pi);
  double corr = 0.0, comp = 0.0;
  double next = 0.0;
  for (int k = 1;; ++k) {
    const double term = detail::normal_stop_loss(k * ell);
    if (term == 0.0 || term < 1e-18 * std::abs(corr)) {
      next = term;
      break;
    }
    const double signed_term = (k % 2 == 1) ? term : -term;
    const double y = signed_term - comp;
    const double s = corr + y;
    comp = (s - corr) - y;
    corr = s;
    if (k > 100000) {
      next = detail::normal_stop_loss((k + 1) * ell);
      break;
    }
  }
  const double loss = lead - 8 * sigma * corr;
  const double err = 8 * sigma * next + 8 * detail::kEps * (lead + 8 * sigma * std::abs(corr));
  return {L - loss, loss, err};
}

/// Spectral evaluation with an exact trigamma tail so that both Q and L - Q
/// are formed from positive terms only.
inline IntervalHeat interval_heat_spectral(double L, double t) {
  require(L > 0, "interval length must be positive");
  require(t >= 0, "time must be non-negative");
  if (t == 0) return {L, 0.0, 0.0};
  const double a = std::numbers::pi * std::numbers::pi * t / (L * L);
  const double pref = 8 * L / (std::numbers::pi * std::numbers::pi);
  // Q part: terms decay at least geometrically once n^2 a is large.
  double q = 0.0, loss_head = 0.0, comp = 0.0;
  long n = 1;
  for (;; n += 2) {
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    const double x = nn * a;
    if (x > 745.0) break;
    const double e = std::exp(-x) / nn;
    q += e;
    const double y = -std::expm1(-x) / nn - comp;
    const double s = loss_head + y;
    comp = (s - loss_head) - y;
    loss_head = s;
    if (x > 40.0 && e < 1e-19 * q) {
      n += 2;
      break;
    }
  }
  // Terms with index >= n contribute 1/n^2 each to the loss series.
  const double tail_sum = 0.25 * boost::math::trigamma(0.5 * static_cast<double>(n));
  const double nd = static_cast<double>(n);
  const double drop = std::exp(-nd * nd * a) / (nd * nd) / (-std::expm1(-4 * nd * a));
  const double loss = pref * (loss_head + tail_sum);
  const double content = pref * q;
  const double err = pref * drop + 8 * detail::kEps * (loss + content);
  return {content, loss, err};
}

inline IntervalHeat interval_heat(double L, double t, IntervalKernel kernel = IntervalKernel::Auto) {
  switch (kernel) {
    case IntervalKernel::Reflection: return interval_heat_reflection(L, t);
    case IntervalKernel::Spectral: return interval_heat_spectral(L, t);
    case IntervalKernel::Auto: break;
  }
  return t / (L * L) < kReflectionCrossover ? interval_heat_reflection(L, t) : interval_heat_spectral(L, t);
}

}  // namespace fshc
