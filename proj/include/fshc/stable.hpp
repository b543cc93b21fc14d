#pragma once

// One-sided stable law S with E exp(-lambda S) = exp(-lambda^beta),
// beta = alpha/2 in (0, 1).
//
// Representations (x = v^{-beta/(1-beta)}, a(theta) the Kanter function,
// a0 = a(0+)):
//   P(S <= v) = (1/pi) e^{-a0 x} int_0^pi e^{-(a - a0) x} dtheta
//   v p(v)    = beta/((1-beta) pi) x e^{-a0 x} int_0^pi a e^{-(a - a0) x} dtheta
//   v p(v)    = (1/pi) sum_k (-1)^{k+1} Gamma(k beta + 1)/k! sin(pi k beta) w^k,  w = v^{-beta}
//   P(S > v)  = (1/pi) sum_k (-1)^{k+1} Gamma(k beta)/k! sin(pi k beta) w^k
// The integral form is tabulated in y = ln v by piecewise Chebyshev
// interpolation; the series takes over for w <= 1/4.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/zeta.hpp>

#include "fshc/error.hpp"
#include "fshc/numerics.hpp"
#include "fshc/rng.hpp"

namespace fshc {

struct StableParams {
  double alpha = 1.0;
  double beta = 0.5;

  static StableParams from_alpha(double alpha) {
    require(alpha > 0 && alpha < 2, "alpha must lie in (0, 2)");
    return {alpha, alpha / 2};
  }
};

namespace detail {

/// ln(sin(u)/u) for u in [0, pi), accurate near 0.
inline double log_sinc(double u) {
  if (u > 1.0) return std::log(std::sin(u) / u);
  static const auto coef = [] {
    std::array<double, 24> c{};
    for (int n = 1; n <= 24; ++n)
      c[static_cast<std::size_t>(n - 1)] =
          boost::math::zeta(2.0 * n) / (n * std::pow(std::numbers::pi, 2.0 * n));
    return c;
  }();
  const double u2 = u * u;
  double s = 0.0, p = u2;
  for (double c : coef) {
    const double term = c * p;
    s += term;
    if (term < 1e-18 * s) break;
    p *= u2;
  }
  return -s;
}

struct SeriesValue {
  double value;
  double error;
};

}  // namespace detail

/// Kanter-function pieces for a fixed beta.
class KanterFunction {
 public:
  explicit KanterFunction(double beta) : beta_(beta), kappa_(beta / (1 - beta)) {
    log_a0_ = std::log1p(-beta) + kappa_ * std::log(beta);
    a0_ = std::exp(log_a0_);
  }

  double a0() const { return a0_; }
  double log_a0() const { return log_a0_; }

  /// ln a(theta) - ln a0 >= 0.
  double log_excess(double theta) const {
    return detail::log_sinc((1 - beta_) * theta) + kappa_ * detail::log_sinc(beta_ * theta) -
           detail::log_sinc(theta) / (1 - beta_);
  }

  double a(double theta) const { return a0_ * std::exp(log_excess(theta)); }

 private:
  double beta_, kappa_, log_a0_, a0_;
};

class StableLaw;

/// Piecewise Chebyshev table of u(y) = ln int_0^pi a e^{-(a-a0)x} dtheta
/// on [y_lo, y_sw], with y = ln v.
class StableDensityTable {
 public:
  static constexpr int kNodes = 20;
  static constexpr double kTolerance = 1e-13;

  StableDensityTable(double beta, double y_lo, double y_sw, const std::function<double(double)>& u) {
    (void)beta;
    build(y_lo, y_sw, u, 0);
  }

  double operator()(double y) const {
    auto it = std::upper_bound(starts_.begin(), starts_.end(), y);
    std::size_t k = it == starts_.begin() ? 0 : static_cast<std::size_t>(it - starts_.begin()) - 1;
    if (k >= panels_.size()) k = panels_.size() - 1;
    return panels_[k].eval(y);
  }

  std::size_t panel_count() const { return panels_.size(); }

 private:
  struct Panel {
    double lo, hi;
    std::array<double, kNodes> c;
    double eval(double y) const {
      const double s = (2 * y - lo - hi) / (hi - lo);
      double b1 = 0, b2 = 0;
      for (int k = kNodes - 1; k >= 1; --k) {
        const double b0 = 2 * s * b1 - b2 + c[static_cast<std::size_t>(k)];
        b2 = b1;
        b1 = b0;
      }
      return s * b1 - b2 + 0.5 * c[0];
    }
  };

  static Panel fit(double lo, double hi, const std::function<double(double)>& u) {
    Panel p{lo, hi, {}};
    std::array<double, kNodes> f{};
    for (int j = 0; j < kNodes; ++j) {
      const double s = std::cos(std::numbers::pi * (j + 0.5) / kNodes);
      f[static_cast<std::size_t>(j)] = u(0.5 * (lo + hi) + 0.5 * (hi - lo) * s);
    }
    for (int k = 0; k < kNodes; ++k) {
      double acc = 0;
      for (int j = 0; j < kNodes; ++j)
        acc += f[static_cast<std::size_t>(j)] * std::cos(std::numbers::pi * k * (j + 0.5) / kNodes);
      p.c[static_cast<std::size_t>(k)] = 2.0 * acc / kNodes;
    }
    return p;
  }

  void build(double lo, double hi, const std::function<double(double)>& u, int level) {
    if (hi - lo > 1.0) {
      const int pieces = static_cast<int>(std::ceil(hi - lo));
      for (int i = 0; i < pieces; ++i) build(lo + (hi - lo) * i / pieces, lo + (hi - lo) * (i + 1) / pieces, u, 0);
      return;
    }
    Panel p = fit(lo, hi, u);
    double worst = 0;
    for (int j = 0; j < 8; ++j) {
      const double y = lo + (hi - lo) * (j + 0.37) / 8;
      const double exact = u(y);
      worst = std::max(worst, std::abs(p.eval(y) - exact) / std::max(1.0, std::abs(exact)));
    }
    if (worst > kTolerance && level < 30) {
      const double mid = 0.5 * (lo + hi);
      build(lo, mid, u, level + 1);
      build(mid, hi, u, level + 1);
      return;
    }
    starts_.push_back(lo);
    panels_.push_back(p);
  }

  std::vector<double> starts_;
  std::vector<Panel> panels_;
};

class StableLaw {
 public:
  explicit StableLaw(StableParams p) : p_(p), kanter_(p.beta) {
    require(p.beta > 0 && p.beta < 1, "beta must lie in (0, 1)");
    const double b = p.beta;
    kappa_ = b / (1 - b);
    y_sw_ = std::log(1.0 / kSeriesW) / b;
    y_lo_ = -std::log(800.0 / kanter_.a0()) / kappa_;
    log_pref_ = std::log(b / ((1 - b) * std::numbers::pi));
    for (int k = 1; k <= kMaxTerms; ++k) {
      const double sgn = (k % 2 == 1) ? 1.0 : -1.0;
      const double s = std::sin(std::numbers::pi * k * b);
      const double lg_d = std::lgamma(k * b + 1) - std::lgamma(k + 1.0);
      const double lg_s = std::lgamma(k * b) - std::lgamma(k + 1.0);
      dens_abs_.push_back(std::exp(lg_d) / std::numbers::pi);
      surv_abs_.push_back(std::exp(lg_s) / std::numbers::pi);
      dens_.push_back(sgn * s * dens_abs_.back());
      surv_.push_back(sgn * s * surv_abs_.back());
    }
    c_tail_ = 0.0;
    for (double c : surv_) c_tail_ += std::abs(c);
    table_ = std::make_shared<StableDensityTable>(b, y_lo_, y_sw_,
                                                  [this](double y) { return log_integral_a(x_of(y)); });
  }

  static constexpr double kSeriesW = 0.25;
  static constexpr int kMaxTerms = 160;

  const StableParams& params() const { return p_; }
  double beta() const { return p_.beta; }
  double y_lo() const { return y_lo_; }
  double y_switch() const { return y_sw_; }
  const StableDensityTable& table() const { return *table_; }

  double x_of(double y) const { return std::exp(-kappa_ * y); }

  /// ln(v p(v)) at y = ln v; -inf below the table range.
  double log_vp(double y) const {
    if (y < y_lo_) return -std::numeric_limits<double>::infinity();
    if (y <= y_sw_) {
      const double x = x_of(y);
      return log_pref_ + std::log(x) - kanter_.a0() * x + (*table_)(y);
    }
    return std::log(series_vp(std::exp(-p_.beta * y)).value);
  }

  /// Density of S at v; density in y = ln v is exp(log_vp(y)).
  double density(double v) const {
    require(v > 0, "density needs v > 0");
    return std::exp(log_vp(std::log(v))) / v;
  }

  /// Density from the integral representation (no table).
  Estimate direct_density(double v) const {
    require(v > 0, "density needs v > 0");
    const double x = std::pow(v, -kappa_);
    const auto r = integral_a(x);
    const double scale = std::exp(log_pref_ + std::log(x) - kanter_.a0() * x) / v;
    return {scale * r.value, scale * r.error};
  }

  /// Density from the large-v series.
  Estimate series_density(double v) const {
    const auto s = series_vp(std::pow(v, -p_.beta));
    return {s.value / v, s.error / v};
  }

  double cdf(double v) const {
    if (v <= 0) return 0.0;
    const double w = std::pow(v, -p_.beta);
    if (w <= kSeriesW) return std::clamp(1.0 - series_survival(w).value, 0.0, 1.0);
    return std::clamp(direct_cdf(v).value, 0.0, 1.0);
  }

  double survival(double v) const {
    if (v <= 0) return 1.0;
    const double w = std::pow(v, -p_.beta);
    if (w <= kSeriesW) return std::clamp(series_survival(w).value, 0.0, 1.0);
    return std::clamp(1.0 - direct_cdf(v).value, 0.0, 1.0);
  }

  Estimate direct_cdf(double v) const {
    const double x = std::pow(v, -kappa_);
    const double a0 = kanter_.a0();
    auto f = [&](double th) { return std::exp(-a0 * std::expm1(kanter_.log_excess(th)) * x); };
    const auto br = breakpoints(x);
    const auto r = integrate(f, std::span<const double>(br), {0.0, 1e-13, 2000});
    if (!r.converged)
      throw Error(ErrorCode::EvalNotConverged, "cdf integral did not converge",
                  {{"v", v}, {"value", r.value}, {"bound", r.error}});
    const double scale = std::exp(-a0 * x) / std::numbers::pi;
    return {scale * r.value, scale * r.error};
  }

  detail::SeriesValue series_vp(double w) const { return series(dens_, dens_abs_, w); }
  detail::SeriesValue series_survival(double w) const { return series(surv_, surv_abs_, w); }

  /// min(1, C u^{-beta}) >= P(S > u) for u >= 1.
  double tail_probability_bound(double u) const {
    require(u >= 1, "tail bound is certified for u >= 1");
    return std::min(1.0, c_tail_ * std::pow(u, -p_.beta));
  }
  double tail_constant() const { return c_tail_; }

  /// E[S^p] for p < beta.
  double moment(double p) const {
    require(p < p_.beta, "moment needs p < beta");
    return boost::math::tgamma(1 - p / p_.beta) / boost::math::tgamma(1 - p);
  }

  /// E[S^beta; S < T].
  Estimate truncated_fractional_moment(double T) const {
    require(T > 0, "T must be positive");
    const double b = p_.beta;
    const double yT = std::log(T);
    if (yT <= y_lo_) return {0.0, 0.0};
    const double ytop = std::min(yT, y_sw_);
    auto f = [&](double y) { return std::exp(b * y + log_vp(y)); };
    const auto q = integrate(f, y_lo_, ytop, {0.0, 1e-13, 4000});
    Estimate out{q.value, q.error + 1e-12 * q.value};
    if (yT > y_sw_) {
      // v^beta p(v) = sum_k d_k v^{(1-k) beta - 1}
      const double wV = std::exp(-b * y_sw_), wT = std::exp(-b * yT);
      double s = dens_[0] * (yT - y_sw_);
      double err = 0.0;
      double pV = 1.0, pT = 1.0;
      for (std::size_t k = 1; k < dens_.size(); ++k) {
        pV *= wV;
        pT *= wT;
        const double term = dens_[k] * (pV - pT) / (static_cast<double>(k) * b);
        s += term;
        const double bound = dens_abs_[k] * pV / (static_cast<double>(k) * b);
        if (bound < 1e-18 * std::abs(s)) {
          err = 2 * bound;
          break;
        }
      }
      out.value += s;
      out.error += err + 4 * std::numeric_limits<double>::epsilon() * std::abs(s);
    }
    return out;
  }

  /// Exact-law draw: (a(U)/E)^{(1-beta)/beta}, U ~ U(0, pi), E ~ Exp(1).
  double sample(PhiloxStream& rng) const {
    const double th = std::numbers::pi * rng.uniform();
    const double e = rng.exponential();
    const double la = kanter_.log_a0() + kanter_.log_excess(th);
    return std::exp((la - std::log(e)) / kappa_);
  }

  std::vector<double> sample(std::uint64_t seed, std::size_t n, std::uint64_t stream = 0) const {
    PhiloxStream rng(seed, stream);
    std::vector<double> out(n);
    for (auto& s : out) s = sample(rng);
    return out;
  }

 private:
  detail::SeriesValue series(const std::vector<double>& c, const std::vector<double>& cabs, double w) const {
    double s = 0.0, p = 1.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      p *= w;
      s += c[k] * p;
      const double next = (k + 1 < cabs.size()) ? cabs[k + 1] * p * w : 0.0;
      if (next < 1e-18 * std::abs(s)) return {s, next / (1 - std::min(w, 0.5)) + 4e-16 * std::abs(s)};
    }
    throw Error(ErrorCode::EvalNotConverged, "stable series did not converge", {{"w", w}});
  }

  std::vector<double> breakpoints(double x) const {
    std::vector<double> br{0.0};
    const double s = 0.25 / std::sqrt(std::max(x, 1.0));
    for (double t = s; t < 2.0; t *= 2) br.push_back(t);
    br.push_back(2.0);
    if (x < 10) {
      for (int j = 3; j <= 20; ++j) br.push_back(std::numbers::pi * (1 - std::ldexp(1.0, -j)));
    }
    br.push_back(std::numbers::pi);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    return br;
  }

  Estimate integral_a(double x) const {
    const double a0 = kanter_.a0();
    auto f = [&](double th) {
      const double d = kanter_.log_excess(th);
      const double em = std::expm1(d);
      return a0 * (1 + em) * std::exp(-a0 * em * x);
    };
    const auto br = breakpoints(x);
    const auto r = integrate(f, std::span<const double>(br), {0.0, 5e-14, 4000});
    if (!r.converged && r.error > 1e-12 * r.value)
      throw Error(ErrorCode::EvalNotConverged, "density integral did not converge",
                  {{"x", x}, {"value", r.value}, {"bound", r.error}});
    return {r.value, r.error};
  }

  double log_integral_a(double x) const { return std::log(integral_a(x).value); }

  StableParams p_;
  KanterFunction kanter_;
  double kappa_ = 1, y_sw_ = 0, y_lo_ = 0, log_pref_ = 0, c_tail_ = 0;
  std::vector<double> dens_, dens_abs_, surv_, surv_abs_;
  std::shared_ptr<const StableDensityTable> table_;
};

/// Shared, lazily built laws keyed by alpha (bitwise).
inline std::shared_ptr<const StableLaw> stable_law(double alpha) {
  static std::mutex mutex;
  static std::map<double, std::shared_ptr<const StableLaw>> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(alpha); it != cache.end()) return it->second;
  }
  auto law = std::make_shared<const StableLaw>(StableParams::from_alpha(alpha));
  std::lock_guard lock(mutex);
  return cache.emplace(alpha, std::move(law)).first->second;
}

}  // namespace fshc
