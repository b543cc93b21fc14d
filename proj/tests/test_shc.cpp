#include <catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "fshc/domain_io.hpp"
#include "fshc/shc.hpp"

using namespace fshc;

namespace {

std::string data(const std::string& name) { return std::string(FSHC_DATA_DIR) + "/domains/" + name; }

IFSDomain scaled(IFSDomain dom, const Rational& r) {
  dom.base.interval_length *= r;
  return dom;
}

}  // namespace

TEST_CASE("subordinated interval loss matches an independent double quadrature") {
  const auto l = subordinated_heat_loss(interval_curve(1.0), 1.0, 0.01);
  CHECK(std::abs(l.value - 0.0656178628305686554910738228595) < 1e-8 * 0.0656178628305686554910738228595);
  CHECK(l.error <= 1e-10 * l.value);
}

TEST_CASE("t = 0 returns the full measure") {
  const auto q = subordinated_heat_content(load_domain(data("cantor.json")), 1.0, 0.0);
  CHECK(q.value == 1.0);
  CHECK(q.error == 0.0);
  CHECK(subordinated_heat_loss(interval_curve(1.0), 0.5, 0.0).value == 0.0);
}

TEST_CASE("additivity over disjoint intervals") {
  const auto u = union_curve({interval_curve(1.0), interval_curve(0.5)});
  for (double alpha : {0.3, 1.0, 1.7})
    for (double t : {1e-6, 1e-3, 0.5}) {
      const double whole = subordinated_heat_loss(u, alpha, t).value;
      const double parts = subordinated_heat_loss(interval_curve(1.0), alpha, t).value +
                           subordinated_heat_loss(interval_curve(0.5), alpha, t).value;
      CHECK(std::abs(whole - parts) <= 1e-10 * parts);
    }
}

TEST_CASE("additivity on random triples") {
  PhiloxStream rng(31, 0);
  for (int i = 0; i < 10; ++i) {
    const double a = 0.05 + 2 * rng.uniform(), b = 0.05 + 2 * rng.uniform();
    const double alpha = 0.1 + 1.8 * rng.uniform();
    const double t = std::pow(10.0, -7 * rng.uniform());
    const auto whole = subordinated_heat_loss(union_curve({interval_curve(a), interval_curve(b)}), alpha, t);
    const auto pa = subordinated_heat_loss(interval_curve(a), alpha, t);
    const auto pb = subordinated_heat_loss(interval_curve(b), alpha, t);
    INFO("a=" << a << " b=" << b << " alpha=" << alpha << " t=" << t);
    CHECK(std::abs(whole.value - pa.value - pb.value) <= whole.error + pa.error + pb.error);
  }
}

TEST_CASE("scaling Qtilde_{rG}(t) = r Qtilde_G(t / r^alpha)") {
  const auto dom = load_domain(data("cantor.json"));
  for (const Rational& r : {Rational(1, 3), Rational(1, 2)})
    for (double alpha : {0.3, 1.0, 1.7})
      for (double t : {1e-6, 1e-3}) {
        const double rd = to_double(r);
        const auto a = subordinated_heat_content(scaled(dom, r), alpha, t);
        const auto b = subordinated_heat_content(dom, alpha, t / std::pow(rd, alpha));
        INFO("r=" << rd << " alpha=" << alpha << " t=" << t);
        CHECK(std::abs(a.value - rd * b.value) <= a.error + rd * b.error + 1e-15);
      }
}

TEST_CASE("Qtilde is bounded, monotone and continuous on a fine grid") {
  const auto curve = fractal_curve(load_domain(data("nonarith_3_4.json")));
  for (double alpha : {0.4, 1.3}) {
    const SubordinatedCurve sc(curve, alpha);
    const auto grid = log_grid(1e-10, 10.0, 100);
    double prev = sc.measure(), max_jump = 0;
    for (double t : grid) {
      const auto q = sc.content(t);
      CHECK(q.value >= -q.error);
      CHECK(q.value <= sc.measure() + q.error);
      CHECK(q.value <= prev + 2 * q.error);
      max_jump = std::max(max_jump, prev - q.value);
      prev = q.value;
    }
    // Adjacent grid points are a factor 1.3 apart; no jump beyond the local modulus.
    CHECK(max_jump < 0.1 * sc.measure());
  }
}

TEST_CASE("quadrature and Rao-Blackwellized Monte Carlo agree") {
  const auto dom = load_domain(data("cantor.json"));
  const double quad = subordinated_heat_content(dom, 1.0, 1e-4).value;
  CHECK(quad > 0);
  CHECK(quad < 1);
  const auto mc = subordinated_heat_content_mc(dom, 1.0, 1e-4, 100000, 7);
  CHECK(std::abs(mc.estimate - quad) < 3 * mc.std_error);
  CHECK(std::abs(quad - 0.8931663777) < 1e-9);
}

TEST_CASE("Monte Carlo error scales like 1/sqrt(n)") {
  const auto dom = load_domain(data("nonarith_3_4.json"));
  const auto a = subordinated_heat_content_mc(dom, 0.8, 1e-3, 20000, 3);
  const auto b = subordinated_heat_content_mc(dom, 0.8, 1e-3, 80000, 3);
  CHECK(b.std_error == Catch::Approx(a.std_error / 2).epsilon(0.2));
}

TEST_CASE("Monte Carlo is reproducible and independent of threads") {
  const auto dom = load_domain(data("cantor.json"));
  const auto a = subordinated_heat_content_mc(dom, 1.5, 1e-3, 20000, 5, 1);
  const auto b = subordinated_heat_content_mc(dom, 1.5, 1e-3, 20000, 5, 3);
  const auto c = subordinated_heat_content_mc(dom, 1.5, 1e-3, 20000, 6, 1);
  CHECK(a.estimate == b.estimate);
  CHECK(a.std_error == b.std_error);
  CHECK(a.estimate != c.estimate);
  CHECK_THROWS_AS(subordinated_heat_content_mc(dom, 1.5, 1e-3, 50, 5), Error);
}

TEST_CASE("unreachable tolerance reports the achieved bound") {
  try {
    subordinated_heat_loss(interval_curve(1.0), 1.0, 1e-3, {0.0, 1e-18, 50});
    FAIL("expected ToleranceUnreachable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ToleranceUnreachable);
    CHECK(e.details().contains("achieved_bound"));
    CHECK(e.details()["value"].get<double>() > 0);
  }
}

TEST_CASE("d = 2 domains need a tabulated base curve") {
  CHECK_THROWS_AS(subordinated_heat_content(load_domain(data("gasket.json")), 1.0, 1e-3), Error);
}
