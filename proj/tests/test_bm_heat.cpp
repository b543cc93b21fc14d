#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <string>

#include "fshc/brownian_law.hpp"
#include "fshc/domain_io.hpp"
#include "fshc/heat_curve.hpp"
#include "fshc/interval_heat.hpp"

using namespace fshc;

namespace {

std::string data(const std::string& name) { return std::string(FSHC_DATA_DIR) + "/domains/" + name; }

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

}  // namespace

TEST_CASE("interval heat loss matches high-precision values") {
  struct Row {
    double L, t, loss;
  };
  const Row rows[] = {
      {1, 1e-8, 2.2567583341910251478e-4}, {1, 1e-4, 0.022567583341910251478},
      {1, 1e-2, 0.22567583341898400734},   {1, 0.1, 0.69788190622672683066},
      {1, 1, 0.99995807476441661361},      {2, 0.3, 1.2264721411218627328},
      {0.5, 1e-3, 0.071364964646110844582},
  };
  for (const auto& r : rows) {
    INFO("L=" << r.L << " t=" << r.t);
    const auto h = interval_heat(r.L, r.t);
    CHECK(close(h.loss, r.loss, 1e-13));
    CHECK(std::abs(h.loss - r.loss) <= h.error + 4e-16 * r.loss);
    CHECK(h.content + h.loss == Catch::Approx(r.L).epsilon(1e-14));
  }
}

TEST_CASE("reflection and spectral series agree") {
  for (double x = 1e-8; x <= 10; x *= 3.1) {
    const auto a = interval_heat_reflection(1.0, x);
    const auto b = interval_heat_spectral(1.0, x);
    INFO("t=" << x);
    CHECK(std::abs(a.loss - b.loss) <= 1e-10 * std::max(1e-300, b.loss));
    CHECK(std::abs(a.content - b.content) <= 1e-10);
  }
}

TEST_CASE("interval scaling Q_{rL}(t) = r Q_L(t/r^2)") {
  for (double r : {1.0 / 3, 0.5, 2.0})
    for (double t = 1e-6; t <= 0.1 * 1.0001; t *= 10) {
      const auto a = interval_heat(r, t);
      const auto b = interval_heat(1.0, t / (r * r));
      CHECK(std::abs(a.content - r * b.content) <= a.error + r * b.error + 1e-15 * r);
    }
}

TEST_CASE("curves are bounded and monotone") {
  const auto cantor = fractal_curve(load_domain(data("cantor.json")));
  const auto na = fractal_curve(load_domain(data("nonarith_3_4.json")));
  const auto iv = interval_curve(0.7);
  for (const HeatCurve* c : {&cantor, &na, &iv}) {
    double prev = c->measure();
    for (const double t : log_grid(1e-12, 10.0, 60)) {
      const auto q = c->content(t);
      CHECK(q.value >= -q.error);
      CHECK(q.value <= c->measure() + q.error);
      CHECK(q.value <= prev + 2 * q.error + 1e-15);
      CHECK(q.error >= 0);
      prev = q.value;
    }
  }
}

TEST_CASE("fractal heat loss matches high-precision word sums") {
  const auto cantor = fractal_curve(load_domain(data("cantor.json")));
  const auto na = fractal_curve(load_domain(data("nonarith_3_4.json")));
  CHECK(close(cantor.loss(1e-4).value, 0.45352237400677481, 1e-12));
  CHECK(close(cantor.loss(1e-2).value, 0.88878135965861133, 1e-12));
  CHECK(close(na.loss(1e-2).value, 0.80780245731228642, 1e-12));
}

TEST_CASE("self-similarity identity of the fractal curve") {
  for (const char* f : {"cantor.json", "nonarith_3_4.json"}) {
    const auto dom = load_domain(data(f));
    const auto G = fractal_curve(dom);
    const double L0 = to_double(dom.base.interval_length);
    for (const double t : log_grid(1e-9, 1e-1, 20)) {
      const auto lhs = G.content(t);
      double rhs = interval_heat(L0, t).content, err = lhs.error + interval_heat(L0, t).error;
      for (double r : dom.ratios_double()) {
        const auto q = G.content(t / (r * r));
        rhs += r * q.value;
        err += r * q.error;
      }
      INFO(f << " t=" << t);
      CHECK(std::abs(lhs.value - rhs) <= err + 1e-14);
    }
  }
}

TEST_CASE("fractal content certifies its bound") {
  const auto dom = load_domain(data("cantor.json"));
  const auto q = fractal_heat_content_1d(dom, 1e-4, 1e-10);
  CHECK(close(q.value, 1 - 0.45352237400677481, 1e-12));
  CHECK_THROWS_AS(fractal_heat_content_1d(dom, 1e-4, 1e-30), Error);
}

TEST_CASE("tabulated curve round trip through CSV") {
  const auto curve = fractal_curve(load_domain(data("cantor.json")));
  const std::string path = "bm_heat_curve.csv";
  {
    std::ofstream out(path);
    out.precision(17);
    out << "t,Q,err\n0," << curve.measure() << ",0\n";
    for (const double t : log_grid(1e-8, 1e-1, 50)) {
      const auto q = curve.content(t);
      out << t << ',' << q.value << ',' << q.error << '\n';
    }
  }
  const auto tab = load_tabulated_curve(path);
  CHECK(tab.measure() == curve.measure());
  for (const double t : log_grid(1e-8, 1e-1, 50)) CHECK(close(tab.loss(t).value, curve.loss(t).value, 1e-12));
  const auto mid = tab.loss(3e-5);
  CHECK(std::abs(mid.value - curve.loss(3e-5).value) <= mid.error);
  std::remove(path.c_str());
}

TEST_CASE("union curve adds losses") {
  const auto u = union_curve({interval_curve(1.0), interval_curve(0.5)});
  CHECK(u.measure() == 1.5);
  for (double t : {1e-6, 1e-3, 0.3})
    CHECK(close(u.loss(t).value, interval_heat(1.0, t).loss + interval_heat(0.5, t).loss, 1e-15));
}

TEST_CASE("Mellin closed form of the interval loss") {
  for (double k : {0.1, 0.25, 0.4}) {
    const auto curve = interval_curve(1.0);
    const auto q = integrate([&](double y) { return curve.loss(std::exp(y)).value * std::exp(-k * y); }, -60.0, 8.0,
                             {0.0, 1e-12, 4000});
    // Below e^-60 the loss is 4 sqrt(u/pi); above e^8 it is 1, both to double precision.
    const double below = 4 / std::sqrt(std::numbers::pi) * std::exp(-60 * (0.5 - k)) / (0.5 - k);
    CHECK(close(below + q.value + std::exp(-8 * k) / k, interval_loss_mellin(1.0, k), 1e-9));
  }
  CHECK(close(interval_loss_mellin(2.0, 0.25), std::pow(2.0, 0.5) * interval_loss_mellin(1.0, 0.25), 1e-14));
}

TEST_CASE("Brownian law of the non-arithmetic domain") {
  const auto law = brownian_law(load_domain(data("nonarith_3_4.json")));
  REQUIRE_FALSE(law.arithmetic());
  CHECK(close(law.exponent(), 0.21975056738806806058, 1e-12));
  const double closed = interval_loss_mellin(5.0 / 12, law.exponent()) / law.denominator();
  CHECK(close(law.C().value, closed, 1e-10));
  CHECK(close(law.C().value, 2.8576751592513026247, 1e-10));
  CHECK(law.C().error < 1e-9 * law.C().value);
  CHECK_THROWS_AS(law.s(1.0), Error);
}

TEST_CASE("Brownian law of the Cantor domain") {
  const auto dom = load_domain(data("cantor.json"));
  const auto law = brownian_law(dom);
  REQUIRE(law.arithmetic());
  CHECK(close(law.period(), 2 * std::log(3.0), 1e-15));
  CHECK(law.B() > 0);
  CHECK(law.B() <= law.A());
  CHECK(close(law.A(), 2.62228601479609, 1e-10));
  CHECK(close(law.B(), 2.60511314818076, 1e-10));
  for (double z : {0.3, 5.0, 17.2}) {
    CHECK(std::abs(law.s(z).value - law.s(z + law.period()).value) < 1e-12);
    CHECK(std::abs(law.s_interpolant()(z) - law.s(z).value) < 1e-10);
    CHECK(law.s(z).value >= law.B() - 1e-12);
    CHECK(law.s(z).value <= law.A() + 1e-12);
  }
  const auto curve = fractal_curve(dom);
  for (double t : {1e-8, 1e-10}) CHECK(close(curve.loss(t).value, law.predicted_loss(t), 0.01));
}

TEST_CASE("law mean of s equals the non-arithmetic constant formula") {
  const auto law = brownian_law(load_domain(data("cantor.json")));
  double mean = 0;
  for (double v : law.s_interpolant().samples()) mean += v;
  mean /= static_cast<double>(law.s_interpolant().samples().size());
  CHECK(close(mean, law.integral().value / law.denominator(), 1e-9));
}
