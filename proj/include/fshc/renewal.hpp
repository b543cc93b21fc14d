#pragma once

// Solver for the renewal equation f(z) = sum_j c_j f(z - gamma_j) + phi(z)
// with probability weights c_j and positive shifts gamma_j:
//   f = sum_{n >= 0} L^n phi, evaluated by aggregating equal shift sums.

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "fshc/error.hpp"
#include "fshc/geometry.hpp"
#include "fshc/heat_curve.hpp"
#include "fshc/numerics.hpp"
#include "fshc/rational.hpp"

namespace fshc {

/// phi with a decay certificate |phi(z)| <= c1 exp(-c2 |z|).
struct RenewalSource {
  std::function<double(double)> phi;
  double c1 = 0.0;
  double c2 = 1.0;
  std::string kind = "custom";
};

inline RenewalSource zero_source() {
  return {[](double) { return 0.0; }, 0.0, 1.0, "zero"};
}

/// A exp(-(z/w)^2); (z/w)^2 >= |z|/w - 1/4 gives the certificate.
inline RenewalSource gaussian_source(double amplitude = 1.0, double width = 1.0) {
  require(width > 0, "width must be positive");
  return {[=](double z) { return amplitude * std::exp(-(z / width) * (z / width)); },
          std::abs(amplitude) * std::exp(0.25), 1.0 / width, "gaussian"};
}

/// A exp(-|z|/w).
inline RenewalSource exp_abs_source(double amplitude = 1.0, double width = 1.0) {
  require(width > 0, "width must be positive");
  return {[=](double z) { return amplitude * std::exp(-std::abs(z) / width); }, std::abs(amplitude), 1.0 / width,
          "exp_abs"};
}

struct RenewalProblem {
  std::string name;
  std::vector<double> weights;
  std::vector<double> shifts;
  // Each shift is sum_i keys[j][i] * key_values[i] with integer keys, so equal
  // shift sums are detected exactly.
  std::vector<std::vector<long>> keys;
  std::vector<double> key_values;
  bool arithmetic = false;
  double span = 0.0;
  std::vector<long> multipliers;
  RenewalSource source;

  double mean_shift() const {
    double s = 0;
    for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * shifts[j];
    return s;
  }
};

namespace detail {

inline void check_weights(const std::vector<double>& w) {
  require(!w.empty(), "renewal problem needs at least one weight");
  double s = 0;
  for (double c : w) {
    require(c > 0 && std::isfinite(c), "renewal weights must be positive");
    s += c;
  }
  require(std::abs(s - 1.0) <= 1e-14 * static_cast<double>(w.size()), "renewal weights must sum to 1");
}

inline void check_certificate(const RenewalSource& src) {
  require(static_cast<bool>(src.phi), "renewal source needs an evaluator");
  require(src.c1 >= 0 && src.c2 > 0, "decay certificate needs c1 >= 0, c2 > 0");
  for (int i = -200; i <= 200; ++i) {
    const double z = 0.25 * i;
    const double v = src.phi(z);
    const double cap = src.c1 * std::exp(-src.c2 * std::abs(z));
    if (!(std::abs(v) <= cap * (1 + 1e-12) + 1e-300))
      throw Error(ErrorCode::CertificateViolated, "source exceeds its decay certificate",
                  {{"z", z}, {"phi", v}, {"bound", cap}});
  }
}

inline void check_distinct(const std::vector<std::vector<long>>& keys) {
  for (std::size_t i = 0; i < keys.size(); ++i)
    for (std::size_t j = i + 1; j < keys.size(); ++j)
      require(keys[i] != keys[j], "renewal shifts must be distinct");
}

}  // namespace detail

/// Shifts gamma_j = scale * ln(x_j) with rationals x_j > 1.
inline RenewalProblem make_log_renewal(std::vector<double> weights, const std::vector<Rational>& bases, double scale,
                                       RenewalSource source, std::string name = {}) {
  require(weights.size() == bases.size(), "weights and shifts differ in length");
  require(scale > 0, "shift scale must be positive");
  for (const auto& x : bases) require(x > 1, "log shifts need bases > 1");
  detail::check_weights(weights);
  detail::check_certificate(source);
  RenewalProblem p;
  p.name = std::move(name);
  p.weights = std::move(weights);
  const auto rep = exponent_vectors(bases);
  p.keys = rep.exponents;
  detail::check_distinct(p.keys);
  for (const auto& b : rep.basis) p.key_values.push_back(scale * std::log(b.convert_to<double>()));
  for (const auto& x : bases) p.shifts.push_back(scale * std::log(to_double(x)));
  std::vector<Rational> inv;
  for (const auto& x : bases) inv.push_back(1 / x);
  const auto cls = classify_log_ratios(inv);
  p.arithmetic = cls.arithmetic;
  if (cls.arithmetic) {
    p.span = scale * cls.span;
    p.multipliers = cls.multipliers;
  }
  p.source = std::move(source);
  return p;
}

/// Rational shifts; always arithmetic with span gcd(gamma_j).
inline RenewalProblem make_lattice_renewal(std::vector<double> weights, const std::vector<Rational>& shifts,
                                           RenewalSource source, std::string name = {}) {
  require(weights.size() == shifts.size(), "weights and shifts differ in length");
  for (const auto& g : shifts) require(g > 0, "shifts must be positive");
  detail::check_weights(weights);
  detail::check_certificate(source);
  BigInt num = 0, den = 1;
  for (const auto& g : shifts) {
    num = boost::multiprecision::gcd(num, BigInt(boost::multiprecision::numerator(g)));
    den = boost::multiprecision::lcm(den, BigInt(boost::multiprecision::denominator(g)));
  }
  const Rational span(num, den);
  RenewalProblem p;
  p.name = std::move(name);
  p.weights = std::move(weights);
  p.arithmetic = true;
  p.span = to_double(span);
  for (const auto& g : shifts) {
    const Rational k = g / span;
    const long kj = boost::multiprecision::numerator(k).convert_to<long>();
    p.multipliers.push_back(kj);
    p.keys.push_back({kj});
    p.shifts.push_back(to_double(g));
  }
  detail::check_distinct(p.keys);
  p.key_values = {p.span};
  p.source = std::move(source);
  return p;
}

struct RenewalValue {
  double value = 0.0;
  double bound = 0.0;
  int levels = 0;
};

class RenewalSolver {
 public:
  static constexpr int kMaxLevels = 20000;

  explicit RenewalSolver(RenewalProblem p) : p_(std::move(p)) {
    m_ = 0;
    for (std::size_t j = 0; j < p_.weights.size(); ++j) m_ += p_.weights[j] * std::exp(-p_.source.c2 * p_.shifts[j]);
  }

  const RenewalProblem& problem() const { return p_; }

  /// Truncated series sum_{n <= n*} L^n phi(z) with certified tail < tol.
  RenewalValue solve(double z, double tol = 1e-10) const {
    require(tol > 0, "tolerance must be positive");
    const auto& src = p_.source;
    std::map<std::vector<long>, double> level{{std::vector<long>(p_.key_values.size(), 0), 1.0}};
    double sum = 0, comp = 0, mag = 0;
    const double lead = src.c1 * std::exp(src.c2 * z) / (1 - m_);
    if (src.c1 > 0 && (!std::isfinite(lead) || std::log(tol / lead) / std::log(m_) > kMaxLevels))
      throw Error(ErrorCode::ToleranceUnreachable, "renewal series would need more than the level cap",
                  {{"z", z}, {"achieved_bound", lead}, {"target", tol}, {"max_levels", kMaxLevels}});
    double mpow = m_;
    for (int n = 0; n <= kMaxLevels; ++n) {
      for (const auto& [key, w] : level) {
        const double term = w * src.phi(z - shift_of(key));
        detail::neumaier_add(sum, comp, term);
        mag += std::abs(term);
      }
      const double tail = lead * mpow;
      if (tail < tol || src.c1 == 0)
        return {sum + comp, tail + 4 * std::numeric_limits<double>::epsilon() * mag, n};
      mpow *= m_;
      std::map<std::vector<long>, double> next;
      for (const auto& [key, w] : level)
        for (std::size_t j = 0; j < p_.weights.size(); ++j) {
          auto k = key;
          for (std::size_t i = 0; i < k.size(); ++i) k[i] += p_.keys[j][i];
          next[k] += w * p_.weights[j];
        }
      level.swap(next);
    }
    throw Error(ErrorCode::ToleranceUnreachable, "renewal series did not reach the tolerance",
                {{"z", z}, {"value", sum + comp}, {"achieved_bound", lead * mpow}, {"target", tol}});
  }

  /// f(z) - sum_j c_j f(z - gamma_j) - phi(z) and the bound it must respect.
  std::pair<double, double> residual(double z, double tol = 1e-10) const {
    const auto f = solve(z, tol);
    double r = f.value - p_.source.phi(z), b = f.bound;
    for (std::size_t j = 0; j < p_.weights.size(); ++j) {
      const auto g = solve(z - p_.shifts[j], tol);
      r -= p_.weights[j] * g.value;
      b = std::max(b, g.bound);
    }
    return {r, b};
  }

  /// int phi / sum_j c_j gamma_j; trapezoid with step halving.
  Estimate limit_nonarithmetic() const {
    if (p_.arithmetic)
      throw Error(ErrorCode::WrongClassification, "limit_nonarithmetic needs non-arithmetic shifts",
                  {{"span", p_.span}});
    const auto I = integral();
    const double d = p_.mean_shift();
    return {I.value / d, I.error / d};
  }

  /// gamma / sum_j c_j gamma_j * sum_k phi(z - k gamma).
  Estimate limit_arithmetic(double z) const {
    if (!p_.arithmetic)
      throw Error(ErrorCode::WrongClassification, "limit_arithmetic needs arithmetic shifts");
    const auto& src = p_.source;
    if (src.c1 == 0) return {0.0, 0.0};
    const double g = p_.span;
    const double z0 = z - g * std::floor(z / g);
    const double q = 1 - std::exp(-src.c2 * g);
    const double R = std::log(1e17 / q) / src.c2 + g;
    const long kmax = static_cast<long>(std::ceil((z0 + R) / g));
    const long kmin = static_cast<long>(std::floor((z0 - R) / g));
    double sum = 0, comp = 0, mag = 0;
    for (long k = kmin; k <= kmax; ++k) {
      const double v = src.phi(z0 - static_cast<double>(k) * g);
      detail::neumaier_add(sum, comp, v);
      mag += std::abs(v);
    }
    const double wlo = z0 - static_cast<double>(kmax + 1) * g;
    const double whi = z0 - static_cast<double>(kmin - 1) * g;
    const double tail = src.c1 * (std::exp(src.c2 * wlo) + std::exp(-src.c2 * whi)) / q;
    const double f = g / p_.mean_shift();
    return {f * (sum + comp), f * (tail + 4 * std::numeric_limits<double>::epsilon() * mag)};
  }

  /// int phi over the real line: trapezoid refined until successive halvings
  /// agree to 1e-11 relative, plus certified tails.
  Estimate integral() const {
    const auto& src = p_.source;
    if (src.c1 == 0) return {0.0, 0.0};
    const double Z = std::log(1e13 / src.c2) / src.c2 + std::max(0.0, std::log(src.c1) / src.c2);
    const double tail = 2 * src.c1 * std::exp(-src.c2 * Z) / src.c2;
    double h = 2 * Z / 64;
    double sum = 0.5 * (src.phi(-Z) + src.phi(Z));
    for (int i = 1; i < 64; ++i) sum += src.phi(-Z + h * i);
    double T = h * sum;
    long n = 64;
    for (int round = 0; round < 16; ++round) {
      double add = 0;
      for (long i = 0; i < n; ++i) add += src.phi(-Z + h * (static_cast<double>(i) + 0.5));
      sum += add;
      h *= 0.5;
      n *= 2;
      const double Tn = h * sum;
      const double diff = std::abs(Tn - T);
      T = Tn;
      if (round >= 2 && diff <= 1e-11 * std::abs(T) + 1e-300)
        return {T, diff + tail + 1e-15 * std::abs(T) * std::sqrt(static_cast<double>(n))};
    }
    throw Error(ErrorCode::QuadratureNotConverged, "renewal source integral did not converge", {{"value", T}});
  }

 private:
  double shift_of(const std::vector<long>& key) const {
    double s = 0;
    for (std::size_t i = 0; i < key.size(); ++i) s += static_cast<double>(key[i]) * p_.key_values[i];
    return s;
  }

  RenewalProblem p_;
  double m_ = 0;
};

/// Fixture format:
///   {"name": ..., "weights": ["1/2", "1/2"],
///    "shifts": {"kind": "log", "bases": ["3", "4"], "scale": 1} | {"kind": "lattice", "values": ["1", "2"]},
///    "source": {"kind": "gaussian" | "exp_abs" | "zero", "amplitude": 1, "width": 1}}
inline RenewalProblem renewal_from_json(const nlohmann::json& j) {
  try {
    std::vector<double> w;
    std::vector<Rational> wr;
    bool exact = true;
    for (const auto& x : j.at("weights")) {
      if (x.is_string()) {
        wr.push_back(parse_rational(x.get<std::string>()));
        w.push_back(to_double(wr.back()));
      } else {
        exact = false;
        w.push_back(x.get<double>());
      }
    }
    if (exact) {
      Rational s = 0;
      for (const auto& x : wr) s += x;
      require(s == 1, "renewal weights must sum to 1");
    }
    const auto& src = j.at("source");
    const std::string kind = src.at("kind").get<std::string>();
    const double amp = src.value("amplitude", 1.0), width = src.value("width", 1.0);
    RenewalSource source;
    if (kind == "gaussian") source = gaussian_source(amp, width);
    else if (kind == "exp_abs") source = exp_abs_source(amp, width);
    else if (kind == "zero") source = zero_source();
    else throw Error(ErrorCode::ParseError, "unknown source kind: " + kind);
    const auto& sh = j.at("shifts");
    const std::string skind = sh.at("kind").get<std::string>();
    const std::string name = j.value("name", std::string{});
    if (skind == "log") {
      std::vector<Rational> bases;
      for (const auto& x : sh.at("bases")) bases.push_back(parse_rational(x.get<std::string>()));
      return make_log_renewal(std::move(w), bases, sh.value("scale", 1.0), std::move(source), name);
    }
    if (skind == "lattice") {
      std::vector<Rational> vals;
      for (const auto& x : sh.at("values")) vals.push_back(parse_rational(x.get<std::string>()));
      return make_lattice_renewal(std::move(w), vals, std::move(source), name);
    }
    throw Error(ErrorCode::ParseError, "unknown shift kind: " + skind);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("renewal fixture: ") + e.what());
  }
}

inline RenewalProblem load_renewal(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
  return renewal_from_json(j);
}

}  // namespace fshc
