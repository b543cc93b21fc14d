#pragma once

// Heat content of subordinate killed Brownian motion:
//   |G| - Qtilde(t) = E[ |G| - Q(S_t) ],  S_t = t^{2/alpha} S_1.
// In y = ln v the loss is  int L(s e^y) q(y) dy  with s = t^{2/alpha} and
// q(y) = v p(v) the density of ln S_1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "fshc/heat_curve.hpp"
#include "fshc/numerics.hpp"
#include "fshc/rng.hpp"
#include "fshc/stable.hpp"

namespace fshc {

struct SubordinationOptions {
  double abs_tol = 0.0;
  double rel_tol = 1e-10;
  int max_panels = 20000;
};

/// |G| - Qtilde(t) with a certified bound; throws ToleranceUnreachable when
/// the achieved bound exceeds max(abs_tol, rel_tol * loss).
inline Estimate subordinated_heat_loss(const HeatCurve& curve, const StableLaw& law, double t,
                                       const SubordinationOptions& opt = {}) {
  require(t >= 0, "time must be non-negative");
  if (t == 0) return {0.0, 0.0};
  const double beta = law.beta();
  const double log_s = std::log(t) / beta;
  const double G = curve.measure();

  // Beyond y_hi the copy is drained up to Q <= 1e-17 |G|.
  const double y_sat = std::log(curve.saturation_time(1e-17)) - log_s;
  const double y_split = -log_s;
  const double y_lo = law.y_lo();
  const double y_hi = std::max({y_sat, y_split, law.y_switch(), y_lo + 1.0});

  double worst_rel = 0.0;
  auto f = [&](double y) {
    const double lq = law.log_vp(y);
    if (!std::isfinite(lq)) return 0.0;
    const auto l = curve.loss(std::exp(log_s + y));
    if (l.value > 0) worst_rel = std::max(worst_rel, l.error / l.value);
    return l.value * std::exp(lq);
  };

  std::vector<double> br{y_lo};
  for (double b : {y_split, law.y_switch()})
    if (b > y_lo && b < y_hi) br.push_back(b);
  // Unit-ish panels keep the first pass from missing narrow features.
  const int pieces = static_cast<int>(std::ceil((y_hi - y_lo) / 4.0));
  for (int i = 1; i < pieces; ++i) br.push_back(y_lo + (y_hi - y_lo) * i / pieces);
  br.push_back(y_hi);
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());

  const auto q = integrate(f, std::span<const double>(br), {opt.abs_tol * 0.5, opt.rel_tol * 0.5, opt.max_panels});
  const double surv = law.survival(std::exp(y_hi));
  const double value = q.value + G * surv;
  double curve_err = worst_rel * value;
  if (worst_rel > 1e-6) {
    // Coarse curves (tables): integrate the pointwise bound instead of the worst ratio.
    auto fe = [&](double y) {
      const double lq = law.log_vp(y);
      if (!std::isfinite(lq)) return 0.0;
      return std::min(curve.loss(std::exp(log_s + y)).error, G) * std::exp(lq);
    };
    const auto qe = integrate(fe, std::span<const double>(br), {0.0, 1e-3, opt.max_panels});
    curve_err = std::min(curve_err, 1.01 * qe.value + qe.error + G * surv);
  }
  const double err = q.error + curve_err + 1e-17 * G * surv + 1e-13 * G * surv +
                     4 * std::numeric_limits<double>::epsilon() * value;
  const double target = std::max(opt.abs_tol, opt.rel_tol * value);
  if (err > target)
    throw Error(ErrorCode::ToleranceUnreachable, "subordinated heat loss bound exceeds tolerance",
                {{"t", t}, {"value", value}, {"achieved_bound", err}, {"target", target}});
  return {value, err};
}

inline Estimate subordinated_heat_loss(const HeatCurve& curve, double alpha, double t,
                                       const SubordinationOptions& opt = {}) {
  return subordinated_heat_loss(curve, *stable_law(alpha), t, opt);
}

/// Qtilde_G(t) for a d = 1 domain.
inline Estimate subordinated_heat_content(const HeatCurve& curve, double alpha, double t,
                                          const SubordinationOptions& opt = {}) {
  if (t == 0) return {curve.measure(), 0.0};
  const auto l = subordinated_heat_loss(curve, alpha, t, opt);
  return {curve.measure() - l.value, l.error};
}

inline Estimate subordinated_heat_content(const IFSDomain& dom, double alpha, double t,
                                          const SubordinationOptions& opt = {}) {
  require(dom.d == 1, "quadrature route needs d = 1; use a tabulated curve for d = 2");
  return subordinated_heat_content(fractal_curve(dom), alpha, t, opt);
}

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kMonteCarloBlock = 4096;

/// Rao-Blackwellized estimate of Qtilde(t): draws S_t and averages the exact
/// survival mass Q(S_t). Blocks of kMonteCarloBlock draws use stream id =
/// block index, so the result is independent of `threads`.
inline MonteCarloEstimate subordinated_heat_content_mc(const HeatCurve& curve, const StableLaw& law, double t,
                                                       std::size_t n, std::uint64_t seed, unsigned threads = 1) {
  require(n >= 2, "Monte Carlo needs n >= 2");
  require(t >= 0, "time must be non-negative");
  const double s = t == 0 ? 0.0 : std::pow(t, 1.0 / law.beta());
  const std::size_t blocks = (n + kMonteCarloBlock - 1) / kMonteCarloBlock;
  std::vector<double> sums(blocks), sq(blocks);
  const double G = curve.measure();
  parallel_for(blocks, threads, [&](std::size_t b) {
    PhiloxStream rng(seed, b);
    const std::size_t count = std::min(kMonteCarloBlock, n - b * kMonteCarloBlock);
    double s1 = 0, s2 = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const double time = s * law.sample(rng);
      const double q = G - curve.loss(time).value;
      s1 += q;
      s2 += q * q;
    }
    sums[b] = s1;
    sq[b] = s2;
  });
  double s1 = 0, s2 = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    s1 += sums[b];
    s2 += sq[b];
  }
  const double nn = static_cast<double>(n);
  const double mean = s1 / nn;
  const double var = std::max(0.0, (s2 - nn * mean * mean) / (nn - 1));
  return {mean, std::sqrt(var / nn), n, seed};
}

inline MonteCarloEstimate subordinated_heat_content_mc(const IFSDomain& dom, double alpha, double t, std::size_t n,
                                                       std::uint64_t seed, unsigned threads = 1) {
  require(dom.d == 1, "Rao-Blackwellized Monte Carlo needs d = 1");
  require(n >= 100, "Monte Carlo needs n >= 100");
  return subordinated_heat_content_mc(fractal_curve(dom), *stable_law(alpha), t, n, seed, threads);
}

/// t -> Qtilde(t) by quadrature.
class SubordinatedCurve {
 public:
  SubordinatedCurve(HeatCurve base, double alpha, SubordinationOptions opt = {})
      : base_(std::move(base)), law_(stable_law(alpha)), opt_(opt) {}

  double measure() const { return base_.measure(); }
  double alpha() const { return law_->params().alpha; }
  const HeatCurve& base() const { return base_; }
  const StableLaw& law() const { return *law_; }

  Estimate loss(double t) const { return subordinated_heat_loss(base_, *law_, t, opt_); }
  Estimate content(double t) const {
    const auto l = loss(t);
    return {measure() - l.value, l.error};
  }

 private:
  HeatCurve base_;
  std::shared_ptr<const StableLaw> law_;
  SubordinationOptions opt_;
};

}  // namespace fshc
