#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <string>

#include "fshc/asymptotics.hpp"
#include "fshc/domain_io.hpp"

using namespace fshc;

namespace {

std::string data(const std::string& name) { return std::string(FSHC_DATA_DIR) + "/domains/" + name; }

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

const IFSDomain& cantor() {
  static const IFSDomain d = load_domain(data("cantor.json"));
  return d;
}
const IFSDomain& nonarith() {
  static const IFSDomain d = load_domain(data("nonarith_3_4.json"));
  return d;
}

/// Gamma on (0, 1] by the Euler product with a Stirling-type tail correction.
double gamma_oracle(double x) {
  // ln Gamma(x) = -gamma x - ln x + sum_k (x/k - ln(1 + x/k))
  const double euler = 0.57721566490153286061;
  double s = -euler * x - std::log(x);
  const int K = 2000000;
  for (int k = 1; k <= K; ++k) s += x / k - std::log1p(x / k);
  // Remainder sum_{k > K} (x/k - ln(1 + x/k)) ~ x^2 / (2K).
  s += x * x / (2.0 * K);
  return std::exp(s);
}

}  // namespace

TEST_CASE("regime classification") {
  const double k = d_minus_b(cantor());
  CHECK(close(k, 0.3690702464285425629, 1e-14));
  CHECK(classify_regime(1.0, k) == Regime::Supercritical);
  CHECK(classify_regime(0.2, k) == Regime::Subcritical);
  CHECK(classify_regime(k, k) == Regime::Critical);
  CHECK(parse_regime("critical") == Regime::Critical);
  CHECK_THROWS_AS(parse_regime("hyper"), Error);
  try {
    resolve_regime(Regime::Subcritical, 1.0, k);
    FAIL("expected RegimeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RegimeMismatch);
  }
  CHECK_THROWS_AS(supercritical_law(cantor(), 0.2), Error);
  CHECK_THROWS_AS(subcritical_constant(cantor(), 1.0), Error);
}

TEST_CASE("gamma factors agree with an independent product oracle") {
  CHECK(close(critical_law(cantor()).gamma_factor(), 1.1472964010354238341, 1e-14));
  for (double x : {0.8154648767857287, 0.5, 0.9})
    CHECK(close(boost::math::tgamma(x), gamma_oracle(x), 1e-9));
}

TEST_CASE("supercritical law of the Cantor domain") {
  for (double alpha : {1.0, 1.5}) {
    const auto law = supercritical_law(cantor(), alpha);
    REQUIRE(law.arithmetic());
    CHECK(close(law.exponent(), 0.3690702464285425629 / alpha, 1e-13));
    CHECK(close(law.period(), alpha * std::log(3.0), 1e-15));
    CHECK(law.f_error() <= 1e-9);
    for (double z = 0; z < law.period(); z += law.period() / 37) {
      const double f = law.f(z);
      CHECK(f > 0);
      CHECK(std::abs(f - law.f(z + law.period())) <= 1e-8 * f);
      CHECK(std::abs(f - law.f_direct(z).value) <= 1e-8 * f);
    }
  }
}

TEST_CASE("supercritical Cantor law predicts the loss") {
  const auto law = supercritical_law(cantor(), 1.0);
  const auto curve = fractal_curve(cantor());
  for (double t : {1e-8, 1e-9}) {
    const double l = subordinated_heat_loss(curve, 1.0, t, {0.0, 1e-9}).value;
    CHECK(close(l, law.predicted_loss(t), 0.002));
  }
}

TEST_CASE("non-arithmetic supercritical constant") {
  const auto law = supercritical_law(nonarith(), 1.0);
  REQUIRE_FALSE(law.arithmetic());
  CHECK(close(law.C1().value, 3.8208363084493458669, 1e-9));
  CHECK(law.C1().error < 1e-9 * law.C1().value);

  // Same constant through the Brownian constant and the stable moment identity.
  const auto bm = brownian_law(nonarith());
  const double kappa = bm.exponent(), beta = 0.5;
  const double via_bm = bm.C().value * std::tgamma(1 - kappa / beta) / std::tgamma(1 - kappa);
  CHECK(close(law.C1().value, via_bm, 1e-9));
}

TEST_CASE("C1 equals the renewal limit") {
  const auto law = supercritical_law(nonarith(), 1.0);
  const RenewalSolver solver(law.renewal_problem(nonarith()));
  CHECK_FALSE(solver.problem().arithmetic);
  CHECK(close(solver.limit_nonarithmetic().value, law.C1().value, 1e-6));
}

TEST_CASE("psi obeys its exponential decay certificate") {
  for (const IFSDomain* dom : {&cantor(), &nonarith()})
    for (double alpha : {0.5, 1.0, 1.5}) {
      const SupercriticalPsi psi(law_inputs(*dom), alpha);
      const auto src = psi.source();
      CHECK(src.c2 > 0);
      for (double z = -30; z <= 30; z += 0.5) CHECK(std::abs(psi(z)) <= src.c1 * std::exp(-src.c2 * std::abs(z)));
    }
}

TEST_CASE("critical law of the Cantor domain") {
  const auto law = critical_law(cantor());
  REQUIRE(law.arithmetic());
  CHECK(close(law.alpha(), 0.3690702464285425629, 1e-14));
  CHECK(close(law.A_prime(), 2.285622105, 1e-8));
  CHECK(close(law.B_prime(), 2.270653988, 1e-8));
  CHECK(law.B_prime() <= law.A_prime());
  for (double t : {1e-5, 1e-7, 1e-9}) {
    const double r = law.g(t).value / std::log(1 / t);
    CHECK(r >= 0.9 * law.B_prime());
    CHECK(r <= 1.1 * law.A_prime());
  }
}

TEST_CASE("critical constant of the non-arithmetic domain") {
  const auto law = critical_law(nonarith());
  REQUIRE_FALSE(law.arithmetic());
  CHECK(close(law.constant().value, 2.4071295625365503975, 1e-9));
  CHECK_THROWS_AS(law.g(1e-6), Error);
}

TEST_CASE("subcritical constant from two curve evaluators") {
  const auto a = subcritical_constant(cantor(), 0.2, IntervalKernel::Auto);
  const auto b = subcritical_constant(cantor(), 0.2, IntervalKernel::Spectral);
  CHECK(close(a.value, 3.3494749149540689415, 1e-9));
  CHECK(close(a.value, b.value, 1e-9));
  CHECK(a.error < 1e-8 * a.value);
  CHECK(close(subcritical_constant(nonarith(), 0.3).value, 5.5861349857518750882, 1e-9));
}

TEST_CASE("subcritical constant closed form") {
  // K = beta/Gamma(1-beta) * I(beta) L0^{1-2 beta} / (1 - sum r^{1-2 beta}) with I the unit-interval Mellin integral.
  for (double alpha : {0.1, 0.25}) {
    const double beta = alpha / 2;
    const double q = 2 * std::pow(1.0 / 3, 1 - 2 * beta);
    const double closed = beta / std::tgamma(1 - beta) * interval_loss_mellin(1.0 / 3, beta) / (1 - q);
    CHECK(close(subcritical_constant(cantor(), alpha).value, closed, 1e-9));
  }
}

TEST_CASE("subcritical constant tends to the measure as alpha -> 0") {
  // The prefactor vanishes like alpha while the Mellin integral grows like |G| / beta.
  const double k1 = subcritical_constant(cantor(), 0.01).value;
  const double k2 = subcritical_constant(cantor(), 0.001).value;
  CHECK(std::abs(k2 - 1) < std::abs(k1 - 1));
  CHECK(std::abs(k2 - 1) < 0.02);
}

TEST_CASE("small-u exponent of the subcritical integrand") {
  const auto curve = fractal_curve(cantor());
  const double beta = 0.1, kappa = 0.3690702464285425629 / 2;
  // A full log-period (ln 9) averages out the oscillation of the Brownian loss.
  const double u1 = 1e-10, u2 = 9e-10;
  auto g = [&](double u) { return curve.loss(u).value * std::pow(u, -1 - beta); };
  const double slope = std::log(g(u2) / g(u1)) / std::log(u2 / u1);
  CHECK(std::abs(slope - (kappa - 1 - beta)) < 1e-3);
}

TEST_CASE("verify_law reports verdicts in each regime") {
  const auto grid = log_grid(1e-3, 1e-9, 13);
  const auto sup = verify_law(cantor(), 1.5, grid, Regime::Supercritical);
  CHECK(sup.regime == Regime::Supercritical);
  CHECK(close(sup.slope_target, 0.246046831, 1e-8));
  CHECK(sup.pass());
  const auto js = sup.to_json();
  CHECK(js["tolerances"]["slope_supercritical"] == 0.01);
  CHECK(js["verdicts"].size() == 2);
  CHECK(sup.to_csv().rfind("t,loss,predicted,ratio\n", 0) == 0);

  const auto sub = verify_law(cantor(), 0.2, log_grid(1e-3, 1e-6, 4));
  CHECK(sub.regime == Regime::Subcritical);
  CHECK(sub.pass());

  const auto crit = verify_law(cantor(), std::nan(""), log_grid(1e-6, 1e-9, 4), Regime::Critical);
  CHECK(crit.regime == Regime::Critical);
  CHECK(crit.alpha == d_minus_b(cantor()));
  CHECK(crit.pass());
}

TEST_CASE("verify_law validates its grid") {
  CHECK_THROWS_AS(verify_law(cantor(), 1.0, {1e-3, 1e-2}), Error);
  CHECK_THROWS_AS(verify_law(cantor(), 1.0, {1e-1, 1e-3}), Error);
  CHECK_THROWS_AS(verify_law(cantor(), 1.0, {1e-3, 1e-11}), Error);
  CHECK_THROWS_AS(verify_law(cantor(), 0.2, {1e-3, 1e-4}, Regime::Supercritical), Error);
}
