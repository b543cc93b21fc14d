#pragma once

// Small-time law of the Brownian heat loss of a self-similar domain:
//   |G| - Q_G(t) ~ C t^kappa                     (non-arithmetic)
//   |G| - Q_G(t) ~ s(ln(1/t)) t^kappa            (arithmetic, s 2rho-periodic)
// with kappa = (d - b)/2 and phi(w) = L_{G0}(e^{-w}) e^{kappa w}:
//   C    = int phi(w) dw / sum_j r_j^b ln(1/r_j^2)
//   s(z) = 2 rho / sum_j r_j^b ln(1/r_j^2) * sum_n phi(z - 2 n rho)

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/zeta.hpp>

#include "fshc/geometry.hpp"
#include "fshc/heat_curve.hpp"
#include "fshc/numerics.hpp"

namespace fshc {

/// What the laws need from a domain: its base curve, ratios and dimension.
struct LawInputs {
  HeatCurve base;
  std::vector<double> ratios;
  int d = 1;
  double b = 0.0;
  double measure = 0.0;  // |G|
  LogRatioClass cls;

  /// sum_j r_j^b ln(1/r_j^p), the mean shift for shifts ln(1/r_j^p).
  double mean_shift(double p) const {
    double s = 0;
    for (double r : ratios) s += std::pow(r, b) * p * std::log(1.0 / r);
    return s;
  }
  /// Small-u envelope constant c with L_{G0}(u) <= c sqrt(u).
  double small_time_constant() const { return base.loss_envelope(1e-300) / 1e-150; }
};

inline LawInputs law_inputs(const IFSDomain& dom, HeatCurve base = {}) {
  validate_domain(dom).throw_if_failed();
  LawInputs in;
  if (!base) {
    require(dom.d == 1, "d = 2 laws need a tabulated base curve");
    base = interval_curve(to_double(dom.base.interval_length));
  }
  in.base = std::move(base);
  in.ratios = dom.ratios_double();
  in.d = dom.d;
  in.b = minkowski_dimension(dom).b;
  in.measure = total_measure(dom).value();
  in.cls = classify_log_ratios(dom);
  return in;
}

/// Truncation window [w_lo, w_hi] for f(w) <= A e^{a w} (w -> -inf) and
/// f(w) <= B e^{-c w} (w -> +inf) so that each tail integral is below eps.
struct TailWindow {
  double lo, hi;
};

inline TailWindow tail_window(double A, double a, double B, double c, double eps) {
  require(a > 0 && c > 0, "tail rates must be positive");
  return {std::log(eps * a / A) / a, std::log(B / (eps * c)) / c};
}

/// Lattice sum span * sum_n f(z - n span) with certified geometric tails.
struct LatticeSum {
  double span;
  double lo, hi;  // summation window in the argument
  double A, a, B, c;

  template <class F>
  Estimate operator()(F&& f, double z) const {
    const double nlo = std::ceil((z - hi) / span);
    const double nhi = std::floor((z - lo) / span);
    double sum = 0.0;
    for (double n = nlo; n <= nhi; n += 1.0) sum += f(z - n * span);
    // Arguments above hi: z - (nlo-1) span, ...; below lo: z - (nhi+1) span, ...
    const double w_up = z - (nlo - 1) * span;
    const double w_dn = z - (nhi + 1) * span;
    const double up = B * std::exp(-c * w_up) / (1 - std::exp(-c * span));
    const double dn = A * std::exp(a * w_dn) / (1 - std::exp(-a * span));
    return {span * sum, span * (up + dn) + 8 * std::numeric_limits<double>::epsilon() * span * std::abs(sum)};
  }
};

class BrownianLaw {
 public:
  static constexpr int kPeriodGrid = 2048;

  explicit BrownianLaw(const LawInputs& in) : in_(in) {
    kappa_ = (in.d - in.b) / 2;
    denom_ = in.mean_shift(2.0);
    const double L0 = in.base.measure();
    const double c = in.small_time_constant();
    // phi <= L0 e^{kappa w}, phi <= c e^{-(1/2 - kappa) w}
    tails_ = {L0, kappa_, c, 0.5 - kappa_};
    const auto win = tail_window(L0, kappa_, c, 0.5 - kappa_, 1e-16);
    window_ = win;
    if (in.cls.arithmetic) {
      span_ = in.cls.span;
      sum_ = {2 * span_, win.lo, win.hi, L0, kappa_, c, 0.5 - kappa_};
      std::vector<double> grid(kPeriodGrid);
      for (int i = 0; i < kPeriodGrid; ++i) grid[i] = s(2 * span_ * i / kPeriodGrid).value;
      A_ = *std::max_element(grid.begin(), grid.end());
      B_ = *std::min_element(grid.begin(), grid.end());
      s_grid_ = PeriodicInterpolant(0.0, 2 * span_, std::move(grid));
    } else {
      const auto I = integral();
      C_ = {I.value / denom_, I.error / denom_};
    }
  }

  bool arithmetic() const { return in_.cls.arithmetic; }
  double exponent() const { return kappa_; }
  double denominator() const { return denom_; }
  /// Period of s in z = ln(1/t).
  double period() const { return 2 * span_; }
  Estimate C() const { return C_; }
  double A() const { return A_; }
  double B() const { return B_; }
  const LawInputs& inputs() const { return in_; }

  double phi(double w) const { return in_.base.loss(std::exp(-w)).value * std::exp(kappa_ * w); }

  /// s(z) for arithmetic domains.
  Estimate s(double z) const {
    require(arithmetic(), "s(z) exists only for arithmetic domains");
    const auto e = sum_([&](double w) { return phi(w); }, z);
    return {e.value / denom_, e.error / denom_};
  }

  /// Trigonometric interpolant of s through the period grid.
  const PeriodicInterpolant& s_interpolant() const { return s_grid_; }

  /// Predicted heat loss at time t (leading term only).
  double predicted_loss(double t) const {
    const double lead = std::pow(t, kappa_);
    return arithmetic() ? s(-std::log(t)).value * lead : C_.value * lead;
  }

  /// int phi over the real line: trapezoid with h = 1e-3 on the tail window,
  /// checked against h = 2e-3.
  Estimate integral() const {
    const double h = 1e-3;
    const long n = 2 * static_cast<long>(std::ceil((window_.hi - window_.lo) / (2 * h)));
    const double hi = window_.lo + h * static_cast<double>(n);
    double even = 0.0, odd = 0.0;
    for (long i = 0; i <= n; ++i) {
      const double v = phi(window_.lo + h * static_cast<double>(i));
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      (i % 2 == 0 ? even : odd) += w * v;
    }
    const double fine = h * (even + odd);
    const double coarse = 2 * h * even;
    double err = std::abs(fine - coarse);
    const double tail = tails_.A * std::exp(tails_.a * window_.lo) / tails_.a +
                        tails_.B * std::exp(-tails_.c * hi) / tails_.c;
    err += tail + 8 * std::numeric_limits<double>::epsilon() * std::abs(fine) * std::sqrt(static_cast<double>(n));
    if (err > 1e-9 * std::abs(fine))
      throw Error(ErrorCode::QuadratureNotConverged, "Brownian constant quadrature did not converge",
                  {{"value", fine}, {"bound", err}});
    return {fine, err};
  }

 private:
  struct Tails {
    double A, a, B, c;
  };
  LawInputs in_;
  double kappa_ = 0, denom_ = 1, span_ = 0;
  Tails tails_{};
  TailWindow window_{};
  LatticeSum sum_{};
  Estimate C_{};
  double A_ = 0, B_ = 0;
  PeriodicInterpolant s_grid_;
};

inline BrownianLaw brownian_law(const IFSDomain& dom, HeatCurve base = {}) {
  return BrownianLaw(law_inputs(dom, std::move(base)));
}

/// Closed form of int_0^inf L_{(0,L)}(u) u^{-1-k} du for k in (0, 1/2).
inline double interval_loss_mellin(double L, double k) {
  const double pi = std::numbers::pi;
  const double unit = 8 * std::tgamma(1 - k) / k * std::pow(pi, 2 * k - 2) * (1 - std::pow(2.0, 2 * k - 2)) *
                      boost::math::zeta(2 - 2 * k);
  return std::pow(L, 1 - 2 * k) * unit;
}

}  // namespace fshc
