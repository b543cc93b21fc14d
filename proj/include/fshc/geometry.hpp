#pragma once

// Self-similar open sets G = G0 u R_1 G u ... u R_N G built from rational
// similitudes: validation, dimension root, total measure, arithmetic
// classification of the log-ratios and word expansions.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "fshc/error.hpp"
#include "fshc/polygon.hpp"
#include "fshc/rational.hpp"

namespace fshc {

struct Similitude {
  Rational ratio;
  /// Row-major d x d. For d = 1 a single entry +-1.
  std::vector<Rational> rotation;
  std::vector<Rational> translation;
};

struct BaseSet {
  Rational interval_length = 0;  // d = 1
  std::vector<Point2> vertices;   // d = 2, frame coordinates
};

/// The true plane is the frame with y scaled by sqrt(y_scale_squared).
struct IFSDomain {
  int d = 1;
  std::string name;
  BaseSet base;
  std::vector<Similitude> maps;
  int disjointness_depth = 6;
  Rational y_scale_squared = 1;

  std::vector<Rational> ratios() const {
    std::vector<Rational> r;
    for (const auto& m : maps) r.push_back(m.ratio);
    return r;
  }
  std::vector<double> ratios_double() const {
    std::vector<double> r;
    for (const auto& m : maps) r.push_back(to_double(m.ratio));
    return r;
  }
};

struct ValidationCheck {
  std::string name;
  bool passed = true;
  std::string detail;
  ErrorCode code = ErrorCode::InvalidDomain;
  nlohmann::json data = nlohmann::json::object();
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
  const ValidationCheck* first_failure() const {
    for (const auto& c : checks)
      if (!c.passed) return &c;
    return nullptr;
  }
  void throw_if_failed() const {
    if (const auto* f = first_failure()) throw Error(f->code, f->name + ": " + f->detail, f->data);
  }
  nlohmann::json to_json() const {
    nlohmann::json j = {{"ok", ok()}, {"checks", nlohmann::json::array()}};
    for (const auto& c : checks) j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    return j;
  }
};

inline Rational sum_ratio_powers(const IFSDomain& dom, int power) {
  Rational s = 0;
  for (const auto& m : dom.maps) s += rational_pow(m.ratio, static_cast<unsigned>(power));
  return s;
}

/// Frame-coordinate affine map of a similitude (d = 2).
inline Affine2 frame_map(const Similitude& s) {
  Affine2 a;
  for (int i = 0; i < 4; ++i) a.m[static_cast<std::size_t>(i)] = s.ratio * s.rotation[static_cast<std::size_t>(i)];
  a.b = {s.translation[0], s.translation[1]};
  return a;
}

namespace detail {

inline std::string word_string(const std::vector<int>& w) {
  if (w.empty()) return "()";
  std::string s;
  for (int j : w) s += (s.empty() ? "" : ".") + std::to_string(j + 1);
  return s;
}

struct WordPolygon {
  std::vector<int> word;
  std::vector<Point2> poly;
  BoundingBox box;
};

inline std::optional<std::pair<std::vector<int>, std::vector<int>>> find_overlap(const IFSDomain& dom, int depth) {
  std::vector<WordPolygon> all;
  std::vector<std::pair<std::vector<int>, Affine2>> level{{{}, Affine2{}}};
  const auto base = counter_clockwise(dom.base.vertices);
  std::vector<Affine2> maps;
  for (const auto& m : dom.maps) maps.push_back(frame_map(m));
  for (int n = 0; n <= depth; ++n) {
    for (const auto& [w, a] : level) {
      auto poly = transform(a, base);
      auto box = bounding_box(poly);
      all.push_back({w, std::move(poly), std::move(box)});
    }
    if (n == depth) break;
    std::vector<std::pair<std::vector<int>, Affine2>> next;
    for (const auto& [w, a] : level)
      for (std::size_t j = 0; j < maps.size(); ++j) {
        auto w2 = w;
        w2.push_back(static_cast<int>(j));
        next.emplace_back(std::move(w2), a.compose(maps[j]));
      }
    level = std::move(next);
  }
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.box.xmin < y.box.xmin; });
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t k = i + 1; k < all.size() && all[k].box.xmin < all[i].box.xmax; ++k) {
      if (all[k].box.ymin >= all[i].box.ymax || all[i].box.ymin >= all[k].box.ymax) continue;
      if (interiors_overlap(all[i].poly, all[k].poly)) return std::pair{all[i].word, all[k].word};
    }
  return std::nullopt;
}

}  // namespace detail

inline ValidationReport validate_domain(const IFSDomain& dom) {
  ValidationReport rep;
  auto add = [&](std::string name, bool ok, std::string detail, ErrorCode code = ErrorCode::InvalidDomain,
                 nlohmann::json data = nlohmann::json::object()) {
    rep.checks.push_back({std::move(name), ok, std::move(detail), code, std::move(data)});
  };

  if (dom.d != 1 && dom.d != 2) {
    add("dimension", false, "d must be 1 or 2, got " + std::to_string(dom.d));
    return rep;
  }
  add("map_count", dom.maps.size() >= 2, "N = " + std::to_string(dom.maps.size()) + " (need N >= 2)");

  bool ratios_ok = true;
  for (std::size_t j = 0; j < dom.maps.size(); ++j) {
    const auto& r = dom.maps[j].ratio;
    const bool ok = r > 0 && r < 1;
    ratios_ok = ratios_ok && ok;
    if (!ok) add("ratio_range", false, "map " + std::to_string(j + 1) + " ratio " + to_string(r) + " not in (0,1)");
  }
  if (ratios_ok) add("ratio_range", true, "all ratios in (0,1)");

  const std::size_t dd = static_cast<std::size_t>(dom.d);
  bool shapes_ok = true;
  for (std::size_t j = 0; j < dom.maps.size(); ++j) {
    const auto& m = dom.maps[j];
    if (m.rotation.size() != dd * dd || (dom.d == 2 && m.translation.size() != 2)) {
      shapes_ok = false;
      add("map_shape", false, "map " + std::to_string(j + 1) + " has wrong rotation/translation size");
      continue;
    }
    bool orth;
    if (dom.d == 1) {
      orth = m.rotation[0] == 1 || m.rotation[0] == -1;
    } else {
      // A^T M A = M with M = diag(1, s).
      const auto& A = m.rotation;
      const Rational& s = dom.y_scale_squared;
      const Rational g00 = A[0] * A[0] + s * A[2] * A[2];
      const Rational g01 = A[0] * A[1] + s * A[2] * A[3];
      const Rational g11 = A[1] * A[1] + s * A[3] * A[3];
      orth = g00 == 1 && g01 == 0 && g11 == s;
    }
    if (!orth) {
      shapes_ok = false;
      add("rotation_orthogonal", false, "map " + std::to_string(j + 1) + " rotation is not orthogonal");
    }
  }
  if (shapes_ok) add("rotation_orthogonal", true, "all rotations orthogonal");

  if (dom.d == 1) {
    add("base_set", dom.base.interval_length > 0, "interval length " + to_string(dom.base.interval_length));
  } else {
    const bool scale_ok = dom.y_scale_squared > 0;
    const bool convex = dom.base.vertices.size() >= 3 && is_strictly_convex(dom.base.vertices);
    add("base_set", scale_ok && convex,
        convex ? "convex polygon with " + std::to_string(dom.base.vertices.size()) + " vertices"
               : "base polygon is not simple, convex and of positive area");
    shapes_ok = shapes_ok && scale_ok && convex;
  }

  if (dom.maps.size() >= 2 && ratios_ok) {
    const Rational sd = sum_ratio_powers(dom, dom.d);
    const Rational sd1 = sum_ratio_powers(dom, dom.d - 1);
    const bool ok = sd < 1 && 1 < sd1;
    nlohmann::json data = {{"sum_r_d", to_string(sd)}, {"sum_r_d_minus_1", to_string(sd1)}};
    std::string detail = "sum r^d = " + to_string(sd) + (sd < 1 ? " < 1" : " >= 1") + ", sum r^(d-1) = " +
                         to_string(sd1) + (1 < sd1 ? " > 1" : " <= 1");
    add("ratio_condition", ok, detail, ErrorCode::RatioConditionViolated, data);
  }

  if (dom.d == 2 && rep.ok()) {
    const auto hit = detail::find_overlap(dom, dom.disjointness_depth);
    if (hit) {
      add("disjointness", false,
          "copies " + detail::word_string(hit->first) + " and " + detail::word_string(hit->second) + " overlap",
          ErrorCode::OverlapDetected,
          {{"depth", dom.disjointness_depth},
           {"words", {detail::word_string(hit->first), detail::word_string(hit->second)}}});
    } else {
      add("disjointness", true, "pairwise disjoint to depth " + std::to_string(dom.disjointness_depth));
    }
  }
  return rep;
}

struct DimensionResult {
  double b = 0.0;
  double residual = 0.0;
};

inline DimensionResult minkowski_dimension(const IFSDomain& dom) {
  std::vector<long double> logr;
  for (const auto& m : dom.maps)
    logr.push_back(std::log(static_cast<long double>(to_double(boost::multiprecision::numerator(m.ratio)))) -
                   std::log(static_cast<long double>(to_double(boost::multiprecision::denominator(m.ratio)))));
  auto f = [&](long double b) {
    long double s = -1.0L;
    for (long double x : logr) s += std::exp(b * x);
    return s;
  };
  auto df = [&](long double b) {
    long double s = 0.0L;
    for (long double x : logr) s += std::exp(b * x) * x;
    return s;
  };
  long double lo = dom.d - 1, hi = dom.d;
  while (hi - lo > 1e-13L) {
    const long double mid = 0.5L * (lo + hi);
    if (f(mid) > 0) lo = mid;
    else hi = mid;
  }
  long double b = 0.5L * (lo + hi);
  for (int i = 0; i < 3; ++i) b -= f(b) / df(b);
  const double bd = static_cast<double>(b);
  return {bd, static_cast<double>(std::abs(f(bd)))};
}

/// |G| = |G0| / (1 - sum r^d), kept as coefficient * sqrt(radicand).
struct ExactMeasure {
  Rational coefficient;
  Rational radicand = 1;

  double value() const { return to_double(coefficient) * std::sqrt(to_double(radicand)); }
  std::string to_string() const {
    if (radicand == 1) return fshc::to_string(coefficient);
    return fshc::to_string(coefficient) + "*sqrt(" + fshc::to_string(radicand) + ")";
  }
};

inline ExactMeasure base_measure(const IFSDomain& dom) {
  if (dom.d == 1) return {dom.base.interval_length, 1};
  Rational a = signed_area2(dom.base.vertices) / 2;
  if (a < 0) a = -a;
  return {a, dom.y_scale_squared};
}

inline ExactMeasure total_measure(const IFSDomain& dom) {
  const auto b = base_measure(dom);
  return {b.coefficient / (1 - sum_ratio_powers(dom, dom.d)), b.radicand};
}

/// Pairwise coprime integers > 1 whose products generate every input.
inline std::vector<BigInt> coprime_basis(std::vector<BigInt> values) {
  std::vector<BigInt> basis;
  for (auto& v : values)
    if (v > 1) basis.push_back(v);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < basis.size() && !changed; ++i)
      for (std::size_t k = i + 1; k < basis.size() && !changed; ++k) {
        const BigInt g = boost::multiprecision::gcd(basis[i], basis[k]);
        if (g == 1) continue;
        std::vector<BigInt> next;
        for (std::size_t m = 0; m < basis.size(); ++m)
          if (m != i && m != k) next.push_back(basis[m]);
        for (const BigInt& x : {BigInt(basis[i] / g), BigInt(basis[k] / g), g})
          if (x > 1) next.push_back(x);
        basis = std::move(next);
        changed = true;
      }
  }
  std::sort(basis.begin(), basis.end());
  basis.erase(std::unique(basis.begin(), basis.end()), basis.end());
  return basis;
}

/// Exponent vectors of positive rationals over a coprime basis:
/// x = prod basis[i]^e[i].
struct ExponentRepresentation {
  std::vector<BigInt> basis;
  std::vector<std::vector<long>> exponents;
};

inline ExponentRepresentation exponent_vectors(const std::vector<Rational>& xs) {
  std::vector<BigInt> ints;
  for (const auto& x : xs) {
    require(x > 0, "exponent vectors need positive rationals");
    ints.push_back(boost::multiprecision::numerator(x));
    ints.push_back(boost::multiprecision::denominator(x));
  }
  ExponentRepresentation rep{coprime_basis(ints), {}};
  for (const auto& x : xs) {
    std::vector<long> e(rep.basis.size(), 0);
    BigInt num = boost::multiprecision::numerator(x), den = boost::multiprecision::denominator(x);
    for (std::size_t i = 0; i < rep.basis.size(); ++i) {
      while (num % rep.basis[i] == 0) {
        num /= rep.basis[i];
        ++e[i];
      }
      while (den % rep.basis[i] == 0) {
        den /= rep.basis[i];
        --e[i];
      }
    }
    rep.exponents.push_back(std::move(e));
  }
  return rep;
}

struct LogRatioClass {
  bool arithmetic = false;
  double span = 0.0;               // rho
  std::vector<long> multipliers;   // k_j with ln(1/r_j) = k_j rho
  Rational generator = 0;          // rho0 with r_j = rho0^{k_j g}, span = g ln(1/rho0)
  long generator_power = 1;        // g
};

inline LogRatioClass classify_log_ratios(const std::vector<Rational>& ratios) {
  const auto rep = exponent_vectors(ratios);
  LogRatioClass out;
  const std::size_t dim = rep.basis.size();
  // Primitive direction from the first vector; ratios < 1 make it non-zero.
  std::vector<long> w = rep.exponents[0];
  long g0 = 0;
  for (long e : w) g0 = std::gcd(g0, std::abs(e));
  require(g0 != 0, "ratio equal to 1 cannot be classified");
  for (auto& e : w) e /= g0;
  std::vector<long> k;
  for (const auto& v : rep.exponents) {
    std::size_t lead = 0;
    while (lead < dim && w[lead] == 0) ++lead;
    if (v[lead] % w[lead] != 0) return out;
    const long kj = v[lead] / w[lead];
    for (std::size_t i = 0; i < dim; ++i)
      if (v[i] != kj * w[i]) return out;
    k.push_back(kj);
  }
  // Orient so rho0 < 1 and multipliers are positive.
  if (k[0] < 0) {
    for (auto& e : w) e = -e;
    for (auto& x : k) x = -x;
  }
  long g = 0;
  for (long x : k) g = std::gcd(g, x);
  Rational rho0 = 1;
  for (std::size_t i = 0; i < dim; ++i) {
    const Rational p = rational_pow(Rational(rep.basis[i]), static_cast<unsigned>(std::abs(w[i])));
    rho0 *= w[i] >= 0 ? p : 1 / p;
  }
  out.arithmetic = true;
  out.generator = rho0;
  out.generator_power = g;
  out.span = static_cast<double>(g) * -std::log(to_double(rho0));
  for (auto& x : k) x /= g;
  out.multipliers = std::move(k);
  return out;
}

inline LogRatioClass classify_log_ratios(const IFSDomain& dom) { return classify_log_ratios(dom.ratios()); }

inline std::size_t word_cap_from_env(std::size_t fallback = 2'000'000) {
  if (const char* s = std::getenv("FRACTAL_SHC_WORD_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (end != s && v > 0) return static_cast<std::size_t>(v);
  }
  return fallback;
}

struct WordLevel {
  /// Distinct composite ratios of this level with their word counts.
  std::map<Rational, BigInt> ratios;
};

struct WordExpansion {
  std::vector<WordLevel> levels;
  Rational tail_measure;  // coefficient of sqrt(radicand), as for ExactMeasure
  Rational radicand = 1;

  double tail_measure_value() const { return to_double(tail_measure) * std::sqrt(to_double(radicand)); }
};

/// Exact per-level word expansion. Throws DepthOverflow once the number of
/// stored (level, ratio) entries exceeds `cap`.
inline WordExpansion expand_words(const IFSDomain& dom, int depth, std::size_t cap = word_cap_from_env()) {
  require(depth >= 0, "depth must be non-negative");
  WordExpansion out;
  out.radicand = base_measure(dom).radicand;
  std::size_t stored = 1;
  out.levels.push_back({{{Rational(1), BigInt(1)}}});
  for (int n = 1; n <= depth; ++n) {
    WordLevel next;
    for (const auto& [r, c] : out.levels.back().ratios)
      for (const auto& m : dom.maps) next.ratios[r * m.ratio] += c;
    stored += next.ratios.size();
    if (stored > cap)
      throw Error(ErrorCode::DepthOverflow, "word expansion exceeds cap",
                  {{"depth", n}, {"cap", cap}, {"entries", stored}});
    out.levels.push_back(std::move(next));
  }
  const Rational q = sum_ratio_powers(dom, dom.d);
  out.tail_measure = total_measure(dom).coefficient * rational_pow(q, static_cast<unsigned>(depth + 1));
  return out;
}

}  // namespace fshc
