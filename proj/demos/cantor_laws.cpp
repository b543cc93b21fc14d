// Prints the small-time laws of the ternary Cantor domain in all three
// regimes next to the computed heat loss.

#include <cmath>
#include <cstdio>

#include "fshc/asymptotics.hpp"
#include "fshc/domain_io.hpp"
#include "fshc/shc.hpp"

int main() {
  using namespace fshc;
  const IFSDomain dom = make_domain_1d(Rational(1, 3), {Rational(1, 3), Rational(1, 3)}, "cantor");
  const double kappa = d_minus_b(dom);
  const auto curve = fractal_curve(dom);

  const auto bm = brownian_law(dom);
  std::printf("Brownian: loss ~ s(ln 1/t) t^%.6f, s in [%.6f, %.6f]\n", bm.exponent(), bm.B(), bm.A());

  const double alpha_sup = 1.0;
  const auto sup = supercritical_law(dom, alpha_sup);
  std::printf("\nalpha = %.1f: loss ~ f(ln 1/t) t^%.6f\n%10s %14s %14s %9s\n", alpha_sup, sup.exponent(), "t", "loss",
              "predicted", "ratio");
  for (double t : log_grid(1e-3, 1e-9, 7)) {
    const double l = subordinated_heat_loss(curve, alpha_sup, t, {0.0, 1e-9}).value;
    const double p = sup.predicted_loss(t);
    std::printf("%10.1e %14.6e %14.6e %9.5f\n", t, l, p, l / p);
  }

  const auto crit = critical_law(dom);
  std::printf("\nalpha = d - b = %.6f: loss/(t ln 1/t) in [%.4f, %.4f] eventually\n", kappa, crit.B_prime(),
              crit.A_prime());
  for (double t : log_grid(1e-6, 1e-9, 4)) {
    const double l = subordinated_heat_loss(curve, kappa, t, {0.0, 1e-9}).value;
    std::printf("%10.1e %10.5f\n", t, l / (t * std::log(1 / t)));
  }

  const double alpha_sub = 0.2;
  const auto K = subcritical_constant(dom, alpha_sub);
  std::printf("\nalpha = %.1f: loss/t -> K = %.10f\n", alpha_sub, K.value);
  for (double t : log_grid(1e-3, 1e-7, 5)) {
    const double l = subordinated_heat_loss(curve, alpha_sub, t, {0.0, 1e-9}).value;
    std::printf("%10.1e %12.8f\n", t, l / t);
  }
  return 0;
}
