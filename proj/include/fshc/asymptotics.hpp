#pragma once

// Small-time laws for the subordinate heat loss |G| - Qtilde_G(t):
//   supercritical (alpha > d - b):  C1 t^{(d-b)/alpha} or f(ln 1/t) t^{(d-b)/alpha}
//   critical      (alpha = d - b):  t g(t), g(t)/ln(1/t) between B' and A'
//   subcritical   (alpha < d - b):  K t

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <json.hpp>

#include "fshc/brownian_law.hpp"
#include "fshc/geometry.hpp"
#include "fshc/heat_curve.hpp"
#include "fshc/numerics.hpp"
#include "fshc/renewal.hpp"
#include "fshc/shc.hpp"
#include "fshc/stable.hpp"

namespace fshc {

enum class Regime { Auto, Supercritical, Critical, Subcritical };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::Auto: return "auto";
    case Regime::Supercritical: return "supercritical";
    case Regime::Critical: return "critical";
    case Regime::Subcritical: return "subcritical";
  }
  return "auto";
}

inline Regime parse_regime(const std::string& s) {
  if (s == "auto") return Regime::Auto;
  if (s == "supercritical") return Regime::Supercritical;
  if (s == "critical") return Regime::Critical;
  if (s == "subcritical") return Regime::Subcritical;
  throw Error(ErrorCode::InvalidArgument, "unknown regime: " + s);
}

inline constexpr double kCriticalWindow = 1e-12;

inline Regime classify_regime(double alpha, double d_minus_b) {
  if (std::abs(alpha - d_minus_b) < kCriticalWindow) return Regime::Critical;
  return alpha > d_minus_b ? Regime::Supercritical : Regime::Subcritical;
}

/// Checks an explicit regime against alpha; Auto resolves it.
inline Regime resolve_regime(Regime requested, double alpha, double d_minus_b) {
  const Regime actual = classify_regime(alpha, d_minus_b);
  if (requested != Regime::Auto && requested != actual)
    throw Error(ErrorCode::RegimeMismatch, "alpha does not lie in the requested regime",
                {{"alpha", alpha}, {"d_minus_b", d_minus_b}, {"requested", to_string(requested)},
                 {"actual", to_string(actual)}});
  return actual;
}

inline double d_minus_b(const IFSDomain& dom) { return dom.d - minkowski_dimension(dom).b; }

// ---------------------------------------------------------------- supercritical

/// psi(z) = (|G0| - Qtilde_{G0}(e^{-z})) e^{kappa_alpha z} with its decay
/// certificate psi <= L0 e^{kappa_alpha z} and psi <= M e^{-c z}.
class SupercriticalPsi {
 public:
  SupercriticalPsi(const LawInputs& in, double alpha)
      : curve_(in.base, alpha, {0.0, 1e-11, 20000}), alpha_(alpha) {
    const double beta = alpha / 2;
    const double kappa = (in.d - in.b) / 2;
    kappa_alpha_ = kappa / beta;
    L0_ = in.base.measure();
    // min(L0, c sqrt(u)) <= L0^{1-2p} c^{2p} u^p and E[S^p] = Gamma(1-p/beta)/Gamma(1-p).
    p_ = std::min(0.5, (beta + kappa) / 2);
    const double c = in.small_time_constant();
    M_ = std::pow(L0_, 1 - 2 * p_) * std::pow(c, 2 * p_) * std::tgamma(1 - p_ / beta) / std::tgamma(1 - p_);
    rate_up_ = (p_ - kappa) / beta;
  }

  double operator()(double z) const { return curve_.loss(std::exp(-z)).value * std::exp(kappa_alpha_ * z); }

  double exponent() const { return kappa_alpha_; }
  double lower_amplitude() const { return L0_; }
  double upper_amplitude() const { return M_; }
  double upper_rate() const { return rate_up_; }
  RenewalSource source() const {
    auto self = std::make_shared<SupercriticalPsi>(*this);
    return {[self](double z) { return (*self)(z); }, std::max(L0_, M_), std::min(kappa_alpha_, rate_up_), "psi"};
  }
  TailWindow window(double eps) const { return tail_window(L0_, kappa_alpha_, M_, rate_up_, eps); }

 private:
  SubordinatedCurve curve_;
  double alpha_ = 1, kappa_alpha_ = 0, L0_ = 0, p_ = 0, M_ = 0, rate_up_ = 0;
};

class SupercriticalLaw {
 public:
  SupercriticalLaw(const LawInputs& in, double alpha) : in_(in), alpha_(alpha), psi_(in, alpha) {
    require(alpha > 0 && alpha < 2, "alpha must lie in (0, 2)");
    resolve_regime(Regime::Supercritical, alpha, in.d - in.b);
    denom_ = in.mean_shift(alpha);
    const double L0 = psi_.lower_amplitude();
    if (in.cls.arithmetic) {
      period_ = alpha * in.cls.span;
      const auto win = psi_.window(1e-15 * L0);
      sum_ = {period_, win.lo, win.hi, L0, psi_.exponent(), psi_.upper_amplitude(), psi_.upper_rate()};
      build_interpolant();
    } else {
      const auto win = psi_.window(1e-14 * L0);
      std::vector<double> br;
      const int pieces = static_cast<int>(std::ceil((win.hi - win.lo) / 2.0));
      for (int i = 0; i <= pieces; ++i) br.push_back(win.lo + (win.hi - win.lo) * i / pieces);
      const auto q = integrate(psi_, std::span<const double>(br), {0.0, 1e-11, 4000});
      if (!q.converged)
        throw Error(ErrorCode::QuadratureNotConverged, "C1 quadrature did not converge",
                    {{"value", q.value / denom_}, {"achieved_bound", q.error / denom_}});
      const double tails = 2e-14 * L0;
      C1_ = {q.value / denom_, (q.error + tails) / denom_};
    }
  }

  double alpha() const { return alpha_; }
  double exponent() const { return psi_.exponent(); }
  bool arithmetic() const { return in_.cls.arithmetic; }
  double denominator() const { return denom_; }
  double period() const { return period_; }
  Estimate C1() const { return C1_; }
  const SupercriticalPsi& psi() const { return psi_; }
  const LawInputs& inputs() const { return in_; }

  /// Direct lattice evaluation of f(z).
  Estimate f_direct(double z) const {
    require(arithmetic(), "f(z) exists only for arithmetic domains");
    const auto e = sum_(psi_, z);
    return {e.value / denom_, e.error / denom_};
  }
  /// Interpolated f(z) and the midpoint-check bound of the interpolant.
  double f(double z) const { return f_(z); }
  double f_error() const { return f_error_; }
  const PeriodicInterpolant& f_interpolant() const { return f_; }

  double predicted_loss(double t) const {
    const double lead = std::pow(t, exponent());
    return arithmetic() ? f(-std::log(t)) * lead : C1_.value * lead;
  }

  /// The same law as a renewal problem: c_j = r_j^b, gamma_j = alpha ln(1/r_j), phi = psi.
  RenewalProblem renewal_problem(const IFSDomain& dom) const {
    std::vector<double> w;
    std::vector<Rational> bases;
    for (const auto& r : dom.ratios()) {
      w.push_back(std::pow(to_double(r), in_.b));
      bases.push_back(1 / r);
    }
    return make_log_renewal(std::move(w), bases, alpha_, psi_.source(), dom.name);
  }

 private:
  void build_interpolant() {
    std::size_t n = 16;
    std::vector<double> samples(n);
    for (std::size_t i = 0; i < n; ++i) samples[i] = f_direct(period_ * i / n).value;
    for (;;) {
      const PeriodicInterpolant trial(0.0, period_, samples);
      std::vector<double> mids(n);
      double diff = 0, scale = 0;
      for (std::size_t i = 0; i < n; ++i) {
        mids[i] = f_direct(period_ * (i + 0.5) / n).value;
        diff = std::max(diff, std::abs(mids[i] - trial(period_ * (i + 0.5) / n)));
        scale = std::max(scale, std::abs(mids[i]));
      }
      std::vector<double> merged(2 * n);
      for (std::size_t i = 0; i < n; ++i) {
        merged[2 * i] = samples[i];
        merged[2 * i + 1] = mids[i];
      }
      samples.swap(merged);
      n *= 2;
      if (diff <= 1e-9 * scale || n >= 1024) {
        f_ = PeriodicInterpolant(0.0, period_, samples);
        f_error_ = diff;
        return;
      }
    }
  }

  LawInputs in_;
  double alpha_;
  SupercriticalPsi psi_;
  double denom_ = 1, period_ = 0;
  LatticeSum sum_{};
  Estimate C1_{};
  PeriodicInterpolant f_;
  double f_error_ = 0;
};

inline SupercriticalLaw supercritical_law(const IFSDomain& dom, double alpha) {
  return SupercriticalLaw(law_inputs(dom), alpha);
}

// ---------------------------------------------------------------- critical

class CriticalLaw {
 public:
  explicit CriticalLaw(const LawInputs& in) : brownian_(in) {
    alpha_ = in.d - in.b;
    require(alpha_ > 0 && alpha_ < 1, "critical law needs 0 < d - b < 1");
    law_ = stable_law(alpha_);
    gamma_ = boost::math::tgamma(1 - alpha_ / 2);
    if (!arithmetic()) K_ = {brownian_.C().value / gamma_, brownian_.C().error / gamma_};
  }

  double alpha() const { return alpha_; }
  bool arithmetic() const { return brownian_.arithmetic(); }
  double gamma_factor() const { return gamma_; }
  double A_prime() const { return brownian_.A() / gamma_; }
  double B_prime() const { return brownian_.B() / gamma_; }
  /// Limit of loss / (t ln(1/t)) for non-arithmetic domains.
  Estimate constant() const { return K_; }
  const BrownianLaw& brownian() const { return brownian_; }

  /// g(t) = int_0^{t^{-2/alpha}} s(-ln(t^{2/alpha} v)) v^{alpha/2} p_1(v) dv.
  Estimate g(double t) const {
    require(arithmetic(), "g(t) exists only for arithmetic domains");
    require(t > 0 && t < 1, "g(t) needs 0 < t < 1");
    const auto& law = *law_;
    const double beta = law.beta();
    const double log_s = std::log(t) / beta;
    const double y_lo = law.y_lo(), y_hi = -log_s;
    const auto& s = brownian_.s_interpolant();
    auto f = [&](double y) {
      const double lq = law.log_vp(y);
      if (!std::isfinite(lq)) return 0.0;
      return s(-log_s - y) * std::exp(beta * y + lq);
    };
    std::vector<double> br{y_lo};
    const int pieces = static_cast<int>(std::ceil((y_hi - y_lo) / 4.0));
    for (int i = 1; i < pieces; ++i) br.push_back(y_lo + (y_hi - y_lo) * i / pieces);
    br.push_back(y_hi);
    const auto q = integrate(f, std::span<const double>(br), {0.0, 1e-10, 20000});
    return {q.value, q.error};
  }

  double predicted_loss(double t) const {
    return arithmetic() ? t * g(t).value : K_.value * t * std::log(1 / t);
  }

 private:
  BrownianLaw brownian_;
  double alpha_ = 0, gamma_ = 1;
  std::shared_ptr<const StableLaw> law_;
  Estimate K_{};
};

inline CriticalLaw critical_law(const IFSDomain& dom) { return CriticalLaw(law_inputs(dom)); }

// ---------------------------------------------------------------- subcritical

namespace detail {

/// int_0^U min(l, c sqrt(u)) u^{-1-beta} du.
inline double copy_envelope_integral(double l, double c, double beta, double U) {
  const double ul = (l / c) * (l / c);
  if (U <= ul) return c * std::pow(U, 0.5 - beta) / (0.5 - beta);
  return c * std::pow(ul, 0.5 - beta) / (0.5 - beta) + l * (std::pow(ul, -beta) - std::pow(U, -beta)) / beta;
}

}  // namespace detail

/// K = alpha / (2 Gamma(1 - alpha/2)) int_0^inf (|G| - Q_G(u)) u^{-1-alpha/2} du
/// evaluated with the given interval kernel inside the fractal curve.
inline Estimate subcritical_constant(const IFSDomain& dom, double alpha, IntervalKernel kernel = IntervalKernel::Auto) {
  require(dom.d == 1, "subcritical constant needs d = 1");
  const double dmb = d_minus_b(dom);
  require(alpha > 0, "alpha must be positive");
  resolve_regime(Regime::Subcritical, alpha, dmb);
  const double beta = alpha / 2;
  const auto curve = std::make_shared<FractalCurve1D>(dom, kernel);
  const auto& set = curve->copies();
  const double G = curve->measure();
  const double c = 4 / std::sqrt(std::numbers::pi);

  // Copies deeper than the stored depth: sum_{|w| > D} l_w^{1-2 beta}.
  double q = 0;
  for (double r : dom.ratios_double()) q += std::pow(r, 1 - 2 * beta);
  require(q < 1, "subcritical envelope needs sum r_j^{1-alpha} < 1");
  const double L0 = curve->base_length();
  const double deep = std::pow(c, 2 * beta) * (1 / (0.5 - beta) + 1 / beta) * std::pow(L0, 1 - 2 * beta) *
                      std::pow(q, set.depth + 1) / (1 - q);
  auto lower_tail = [&](double U) {
    double s = deep;
    for (std::size_t i = 0; i < set.length.size(); ++i)
      s += set.multiplicity[i] * detail::copy_envelope_integral(set.length[i], c, beta, U);
    return s;
  };

  const double y_hi = std::log(curve->saturation_time(1e-17));
  const double upper = G * std::exp(-beta * y_hi) / beta;
  // Lower cut: the envelope integral below it is at most 1e-13 of the upper tail scale.
  double y_lo = y_hi - 10;
  while (lower_tail(std::exp(y_lo)) > 1e-13 * upper && y_lo > -690) y_lo -= 10;
  const double low = lower_tail(std::exp(y_lo));

  auto f = [&](double y) { return curve->loss(std::exp(y)).value * std::exp(-beta * y); };
  std::vector<double> br;
  const int pieces = static_cast<int>(std::ceil((y_hi - y_lo) / 2.0));
  for (int i = 0; i <= pieces; ++i) br.push_back(y_lo + (y_hi - y_lo) * i / pieces);
  const auto quad = integrate(f, std::span<const double>(br), {0.0, 1e-12, 20000});
  if (!quad.converged)
    throw Error(ErrorCode::QuadratureNotConverged, "subcritical constant quadrature did not converge",
                {{"value", quad.value}, {"achieved_bound", quad.error}});
  const double pref = beta / boost::math::tgamma(1 - beta);
  const double value = quad.value + upper;
  const double err = quad.error + low + 1e-17 * upper + 4 * std::numeric_limits<double>::epsilon() * value;
  return {pref * value, pref * err};
}

// ---------------------------------------------------------------- verification

struct VerifyTolerances {
  double ratio = 0.05;             // constants, relative
  double slope_supercritical = 0.01;
  double slope_subcritical = 0.02;
  double critical_band = 0.1;      // relative widening of [B', A']
  double critical_t_max = 1e-6;    // band checked for t <= this
  int ratio_points = 3;            // smallest grid points checked for constant ratios

  nlohmann::json to_json() const {
    return {{"ratio", ratio},
            {"slope_supercritical", slope_supercritical},
            {"slope_subcritical", slope_subcritical},
            {"critical_band", critical_band},
            {"critical_t_max", critical_t_max},
            {"ratio_points", ratio_points}};
  }
};

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerificationReport {
  std::string domain;
  double alpha = 0;
  Regime regime = Regime::Auto;
  bool arithmetic = false;
  std::vector<double> t_grid, loss, loss_error, predicted, ratio, rel_error;
  double slope = 0, slope_target = 0;
  nlohmann::json constants = nlohmann::json::object();
  VerifyTolerances tolerances;
  std::vector<Verdict> verdicts;

  bool pass() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
  }

  nlohmann::json to_json() const {
    nlohmann::json v = nlohmann::json::array();
    for (const auto& x : verdicts) v.push_back({{"name", x.name}, {"pass", x.pass}, {"detail", x.detail}});
    return {{"domain", domain},        {"alpha", alpha},           {"regime", to_string(regime)},
            {"arithmetic", arithmetic}, {"t_grid", t_grid},         {"loss", loss},
            {"loss_error", loss_error}, {"predicted", predicted},   {"ratio", ratio},
            {"rel_error", rel_error},   {"slope", slope},           {"slope_target", slope_target},
            {"constants", constants},   {"tolerances", tolerances.to_json()},
            {"verdicts", v},            {"pass", pass()}};
  }

  std::string to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "t,loss,predicted,ratio\n";
    for (std::size_t i = 0; i < t_grid.size(); ++i)
      os << t_grid[i] << ',' << loss[i] << ',' << predicted[i] << ',' << ratio[i] << '\n';
    return os.str();
  }
};

/// Computes the numeric loss on t_grid and checks it against the law of the
/// regime that alpha falls in. For the critical regime alpha is replaced by
/// the computed d - b.
inline VerificationReport verify_law(const IFSDomain& dom, double alpha, const std::vector<double>& t_grid,
                                     Regime regime = Regime::Auto, const VerifyTolerances& tol = {},
                                     unsigned threads = 1) {
  require(dom.d == 1, "law verification needs d = 1");
  require(t_grid.size() >= 2, "t grid needs two or more points");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    require(t_grid[i] >= 1e-10 && t_grid[i] <= 1e-2, "t grid must lie in [1e-10, 1e-2]");
    if (i > 0) require(t_grid[i] < t_grid[i - 1], "t grid must be strictly decreasing");
  }
  const double dmb = d_minus_b(dom);
  if (regime == Regime::Critical) {
    if (std::isnan(alpha)) alpha = dmb;
    resolve_regime(Regime::Critical, alpha, dmb);
    alpha = dmb;
  }
  regime = resolve_regime(regime, alpha, dmb);

  VerificationReport rep;
  rep.domain = dom.name;
  rep.alpha = alpha;
  rep.regime = regime;
  rep.tolerances = tol;
  rep.t_grid = t_grid;
  const std::size_t n = t_grid.size();
  rep.loss.resize(n);
  rep.loss_error.resize(n);
  rep.predicted.resize(n);

  const auto curve = fractal_curve(dom);
  const auto law = stable_law(alpha);
  parallel_for(n, threads, [&](std::size_t i) {
    const auto l = subordinated_heat_loss(curve, *law, t_grid[i], {0.0, 1e-9, 20000});
    rep.loss[i] = l.value;
    rep.loss_error[i] = l.error;
  });

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < n; ++i) {
    lx.push_back(std::log(t_grid[i]));
    ly.push_back(std::log(rep.loss[i]));
  }
  rep.slope = least_squares_slope(lx, ly);

  auto fmt = [](double x) {
    std::ostringstream os;
    os.precision(8);
    os << x;
    return os.str();
  };
  auto check_tail_ratios = [&](const std::string& name) {
    const std::size_t k = std::min<std::size_t>(n, static_cast<std::size_t>(tol.ratio_points));
    double worst = 0;
    for (std::size_t i = n - k; i < n; ++i) worst = std::max(worst, std::abs(rep.ratio[i] - 1));
    rep.verdicts.push_back({name, worst <= tol.ratio, "max |ratio - 1| = " + fmt(worst) + " over the " +
                                                          std::to_string(k) + " smallest t"});
  };

  const auto in = law_inputs(dom);
  rep.arithmetic = in.cls.arithmetic;
  if (regime == Regime::Supercritical) {
    const SupercriticalLaw sl(in, alpha);
    rep.slope_target = sl.exponent();
    rep.constants["exponent"] = sl.exponent();
    if (sl.arithmetic()) {
      rep.constants["period"] = sl.period();
      rep.constants["f_interpolation_error"] = sl.f_error();
    } else {
      rep.constants["C1"] = sl.C1().value;
      rep.constants["C1_error"] = sl.C1().error;
    }
    for (std::size_t i = 0; i < n; ++i) rep.predicted[i] = sl.predicted_loss(t_grid[i]);
    for (std::size_t i = 0; i < n; ++i) rep.ratio.push_back(rep.loss[i] / rep.predicted[i]);
    const double ds = std::abs(rep.slope - rep.slope_target);
    rep.verdicts.push_back({"slope", ds <= tol.slope_supercritical,
                            "slope " + fmt(rep.slope) + " vs target " + fmt(rep.slope_target)});
    check_tail_ratios("ratio");
  } else if (regime == Regime::Critical) {
    const CriticalLaw cl(in);
    rep.slope_target = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      rep.predicted[i] = cl.predicted_loss(t_grid[i]);
      rep.ratio.push_back(rep.loss[i] / rep.predicted[i]);
    }
    if (cl.arithmetic()) {
      const double lo = cl.B_prime() * (1 - tol.critical_band), hi = cl.A_prime() * (1 + tol.critical_band);
      rep.constants["A_prime"] = cl.A_prime();
      rep.constants["B_prime"] = cl.B_prime();
      bool ok = true;
      std::size_t checked = 0;
      double wmin = std::numeric_limits<double>::infinity(), wmax = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (t_grid[i] > tol.critical_t_max) continue;
        const double r = rep.loss[i] / (t_grid[i] * std::log(1 / t_grid[i]));
        wmin = std::min(wmin, r);
        wmax = std::max(wmax, r);
        ok = ok && r >= lo && r <= hi;
        ++checked;
      }
      rep.verdicts.push_back({"band", ok && checked > 0,
                              "loss/(t ln(1/t)) in [" + fmt(wmin) + ", " + fmt(wmax) + "] vs band [" + fmt(lo) +
                                  ", " + fmt(hi) + "]"});
    } else {
      rep.constants["K_critical"] = cl.constant().value;
      const double r = rep.ratio.back();
      rep.verdicts.push_back({"constant", std::abs(r - 1) <= tol.critical_band,
                              "ratio at smallest t = " + fmt(r)});
    }
  } else {
    const auto K = subcritical_constant(dom, alpha);
    rep.slope_target = 1.0;
    rep.constants["K"] = K.value;
    rep.constants["K_error"] = K.error;
    for (std::size_t i = 0; i < n; ++i) {
      rep.predicted[i] = K.value * t_grid[i];
      rep.ratio.push_back(rep.loss[i] / rep.predicted[i]);
    }
    const double ds = std::abs(rep.slope - 1.0);
    rep.verdicts.push_back({"slope", ds <= tol.slope_subcritical, "slope " + fmt(rep.slope) + " vs target 1"});
    const double r = rep.ratio.back();
    rep.verdicts.push_back({"ratio", std::abs(r - 1) <= tol.ratio, "ratio at smallest t = " + fmt(r)});
  }
  for (std::size_t i = 0; i < n; ++i) rep.rel_error.push_back(rep.ratio[i] - 1);
  return rep;
}

}  // namespace fshc
