#pragma once

// Brownian heat content curves t -> Q(t) with certified error bounds.
// The primitive is the heat loss |G| - Q(t).

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fshc/domain_io.hpp"
#include "fshc/geometry.hpp"
#include "fshc/interval_heat.hpp"
#include "fshc/numerics.hpp"

namespace fshc {

/// Type-erased heat content curve.
class HeatCurve {
 public:
  struct Model {
    virtual ~Model() = default;
    virtual double measure() const = 0;
    virtual Estimate loss(double t) const = 0;
    /// Certified upper bound on loss(t), usable for tail truncation.
    virtual double loss_envelope(double t) const = 0;
    /// A time after which Q(t) <= eps * |G|.
    virtual double saturation_time(double eps) const = 0;
    virtual std::string description() const = 0;
  };

  HeatCurve() = default;
  explicit HeatCurve(std::shared_ptr<const Model> m) : model_(std::move(m)) {}

  double measure() const { return model_->measure(); }
  Estimate loss(double t) const { return model_->loss(t); }
  Estimate content(double t) const {
    const auto l = model_->loss(t);
    return {measure() - l.value, l.error};
  }
  double loss_envelope(double t) const { return model_->loss_envelope(t); }
  double saturation_time(double eps) const { return model_->saturation_time(eps); }
  std::string description() const { return model_->description(); }
  explicit operator bool() const { return static_cast<bool>(model_); }

 private:
  std::shared_ptr<const Model> model_;
};

inline double interval_loss_envelope(double L, double t) {
  return std::min(L, 4 * std::sqrt(std::max(t, 0.0) / std::numbers::pi));
}

class IntervalCurve final : public HeatCurve::Model {
 public:
  explicit IntervalCurve(double length, IntervalKernel kernel = IntervalKernel::Auto) : L_(length), kernel_(kernel) {
    require(length > 0, "interval length must be positive");
  }
  double measure() const override { return L_; }
  Estimate loss(double t) const override {
    const auto h = interval_heat(L_, t, kernel_);
    return {h.loss, h.error};
  }
  double loss_envelope(double t) const override { return interval_loss_envelope(L_, t); }
  double saturation_time(double eps) const override {
    return L_ * L_ * std::log(1.0 / eps) / (std::numbers::pi * std::numbers::pi);
  }
  std::string description() const override {
    std::ostringstream os;
    os.precision(17);
    os << "interval L=" << L_;
    return os.str();
  }

 private:
  double L_;
  IntervalKernel kernel_;
};

inline HeatCurve interval_curve(double length, IntervalKernel kernel = IntervalKernel::Auto) {
  return HeatCurve(std::make_shared<IntervalCurve>(length, kernel));
}

/// Multiset of interval lengths aggregated by exact value.
struct LengthMultiset {
  std::vector<double> length;        // ascending
  std::vector<double> multiplicity;  // word counts, as doubles
  std::vector<double> count_suffix;  // sum of multiplicity over [i, n)
  std::vector<double> measure_prefix;
  double tail_measure = 0.0;        // measure of all copies deeper than `depth`
  double tail_largest_length = 0.0;  // largest copy deeper than `depth`
  int depth = 0;
  bool depth_capped = false;
};

namespace detail {

inline double neumaier_add(double& sum, double& comp, double x) {
  const double t = sum + x;
  if (std::abs(sum) >= std::abs(x)) comp += (sum - t) + x;
  else comp += (x - t) + sum;
  sum = t;
  return sum;
}

}  // namespace detail

/// Aggregates all copies r_w G0 with |w| <= D, where D is the first depth
/// with r_max^{D+1} L0 <= min_length, stopping early when the number of
/// distinct (exact) ratios exceeds `cap`.
inline LengthMultiset build_length_multiset(const IFSDomain& dom, double min_length = 1e-150,
                                            std::size_t cap = word_cap_from_env()) {
  require(dom.d == 1, "fractal interval curves need d = 1");
  const auto rep = exponent_vectors(dom.ratios());
  const double L0 = to_double(dom.base.interval_length);
  std::vector<double> log_basis;
  for (const auto& b : rep.basis) log_basis.push_back(std::log(b.convert_to<double>()));
  const auto r = dom.ratios_double();
  const double rmax = *std::max_element(r.begin(), r.end());
  const int target = std::max(0, static_cast<int>(std::ceil(std::log(min_length / L0) / std::log(rmax))) - 1);

  using Key = std::vector<long>;
  std::map<Key, double> all;
  std::map<Key, double> level{{Key(rep.basis.size(), 0), 1.0}};
  all = level;
  LengthMultiset out;
  int depth = 0;
  for (int n = 1; n <= target; ++n) {
    std::map<Key, double> next;
    for (const auto& [k, c] : level)
      for (const auto& e : rep.exponents) {
        Key k2 = k;
        for (std::size_t i = 0; i < k2.size(); ++i) k2[i] += e[i];
        next[k2] += c;
      }
    std::size_t fresh = 0;
    for (const auto& kv : next)
      if (!all.contains(kv.first)) ++fresh;
    if (all.size() + fresh > cap) {
      out.depth_capped = true;
      break;
    }
    for (const auto& [k, c] : next) all[k] += c;
    level = std::move(next);
    depth = n;
  }
  out.depth = depth;

  std::vector<std::pair<double, double>> items;
  items.reserve(all.size());
  for (const auto& [k, c] : all) {
    double lr = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) lr += static_cast<double>(k[i]) * log_basis[i];
    items.emplace_back(L0 * std::exp(lr), c);
  }
  std::sort(items.begin(), items.end());
  double ms = 0, mc = 0;
  out.measure_prefix.push_back(0.0);
  for (const auto& [len, c] : items) {
    out.length.push_back(len);
    out.multiplicity.push_back(c);
    detail::neumaier_add(ms, mc, c * len);
    out.measure_prefix.push_back(ms + mc);
  }
  // Counts are summed from the long end: the short copies are astronomically
  // many and a difference of prefix sums would cancel.
  out.count_suffix.assign(items.size() + 1, 0.0);
  double cs = 0, cc = 0;
  for (std::size_t i = items.size(); i-- > 0;) {
    detail::neumaier_add(cs, cc, items[i].second);
    out.count_suffix[i] = cs + cc;
  }
  const double q = std::accumulate(r.begin(), r.end(), 0.0);
  const double total = L0 / (1.0 - q);
  out.tail_measure = total * std::pow(q, depth + 1);
  out.tail_largest_length = L0 * std::pow(rmax, depth + 1);
  return out;
}

/// Heat loss of a d = 1 self-similar domain as a sum over its interval
/// copies, evaluated band-wise in the copy length l relative to sqrt(t):
/// long copies lose 4 sqrt(t/pi) up to a negligible image term, short copies
/// are fully drained and the rest are evaluated with the interval kernel.
class FractalCurve1D final : public HeatCurve::Model {
 public:
  static constexpr double kLongCut = 9.0;
  static inline const double kLongCutStopLoss = detail::normal_stop_loss(kLongCut);

  explicit FractalCurve1D(const IFSDomain& dom, IntervalKernel kernel = IntervalKernel::Auto,
                          std::size_t cap = word_cap_from_env())
      : kernel_(kernel), name_(dom.name.empty() ? "fractal" : dom.name) {
    validate_domain(dom).throw_if_failed();
    set_ = build_length_multiset(dom, 1e-150, cap);
    L0_ = to_double(dom.base.interval_length);
    measure_ = total_measure(dom).value();
  }

  double measure() const override { return measure_; }
  double base_length() const { return L0_; }
  const LengthMultiset& copies() const { return set_; }

  Estimate loss(double t) const override {
    if (t <= 0) return {0.0, 0.0};
    const auto& s = set_;
    const double sigma = std::sqrt(2 * t);
    const double long_cut = kLongCut * sigma;
    const double short_cut = std::numbers::pi * std::sqrt(t / 41.5);
    const auto lo = static_cast<std::size_t>(std::upper_bound(s.length.begin(), s.length.end(), short_cut) -
                                             s.length.begin());
    const auto hi = static_cast<std::size_t>(std::lower_bound(s.length.begin(), s.length.end(), long_cut) -
                                             s.length.begin());
    const std::size_t mid_end = std::max(lo, hi);
    double sum = 0.0, comp = 0.0, err = 0.0;
    const double pi2t = std::numbers::pi * std::numbers::pi * t;

    // Short copies, all lost; each retains at most l exp(-pi^2 t / l^2).
    detail::neumaier_add(sum, comp, s.measure_prefix[lo]);
    if (lo > 0) err += s.measure_prefix[lo] * std::exp(-pi2t / (s.length[lo - 1] * s.length[lo - 1]));

    for (std::size_t i = lo; i < mid_end; ++i) {
      const auto h = interval_heat(s.length[i], t, kernel_);
      detail::neumaier_add(sum, comp, s.multiplicity[i] * h.loss);
      err += s.multiplicity[i] * h.error;
    }

    // Long copies: the reflection correction is at most 8 sigma m(l / sigma).
    const double long_count = s.count_suffix[mid_end];
    detail::neumaier_add(sum, comp, long_count * 4 * std::sqrt(t / std::numbers::pi));
    err += long_count * 8 * sigma * kLongCutStopLoss;

    detail::neumaier_add(sum, comp, s.tail_measure);
    const double lt = s.tail_largest_length;
    err += s.tail_measure * std::min(1.0, std::exp(-pi2t / (lt * lt)));

    const double value = sum + comp;
    err += 4 * detail::kEps * value;
    return {value, err};
  }

  double loss_envelope(double t) const override {
    const double c = 4 * std::sqrt(std::max(t, 0.0) / std::numbers::pi);
    const auto& s = set_;
    const auto k = static_cast<std::size_t>(std::upper_bound(s.length.begin(), s.length.end(), c) - s.length.begin());
    return s.measure_prefix[k] + c * s.count_suffix[k] + s.tail_measure;
  }

  double saturation_time(double eps) const override {
    return L0_ * L0_ * std::log(1.0 / eps) / (std::numbers::pi * std::numbers::pi);
  }

  std::string description() const override { return "fractal domain " + name_; }

 private:
  IntervalKernel kernel_;
  std::string name_;
  LengthMultiset set_;
  double L0_ = 0.0;
  double measure_ = 0.0;
};

inline HeatCurve fractal_curve(const IFSDomain& dom, IntervalKernel kernel = IntervalKernel::Auto) {
  return HeatCurve(std::make_shared<FractalCurve1D>(dom, kernel));
}

/// Q_G(t) for a d = 1 domain; throws ToleranceUnreachable if the certified
/// bound exceeds tol.
inline Estimate fractal_heat_content_1d(const IFSDomain& dom, double t, double tol) {
  const FractalCurve1D curve(dom);
  const auto l = curve.loss(t);
  const Estimate q{curve.measure() - l.value, l.error};
  if (q.error > tol)
    throw Error(ErrorCode::ToleranceUnreachable, "heat content bound exceeds tolerance",
                {{"value", q.value}, {"achieved_bound", q.error}, {"tol", tol}});
  return q;
}

class UnionCurve final : public HeatCurve::Model {
 public:
  explicit UnionCurve(std::vector<HeatCurve> parts) : parts_(std::move(parts)) {}
  double measure() const override {
    double m = 0;
    for (const auto& p : parts_) m += p.measure();
    return m;
  }
  Estimate loss(double t) const override {
    Estimate e;
    for (const auto& p : parts_) {
      const auto x = p.loss(t);
      e.value += x.value;
      e.error += x.error;
    }
    return e;
  }
  double loss_envelope(double t) const override {
    double m = 0;
    for (const auto& p : parts_) m += p.loss_envelope(t);
    return m;
  }
  double saturation_time(double eps) const override {
    double s = 0;
    for (const auto& p : parts_) s = std::max(s, p.saturation_time(eps));
    return s;
  }
  std::string description() const override {
    std::string d = "union(";
    for (std::size_t i = 0; i < parts_.size(); ++i) d += (i ? ", " : "") + parts_[i].description();
    return d + ")";
  }

 private:
  std::vector<HeatCurve> parts_;
};

inline HeatCurve union_curve(std::vector<HeatCurve> parts) {
  return HeatCurve(std::make_shared<UnionCurve>(std::move(parts)));
}

struct CurveRow {
  double t = 0, q = 0, err = 0;
};

/// Piecewise curve from a `t,Q,err` table. Between nodes the loss is
/// interpolated log-log; the reported error covers the monotone bracket
/// [Q(t_{i+1}) - err_{i+1}, Q(t_i) + err_i].
class TabulatedCurve final : public HeatCurve::Model {
 public:
  TabulatedCurve(std::vector<CurveRow> rows, double measure, std::string source = "table")
      : measure_(measure), source_(std::move(source)) {
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    for (const auto& r : rows)
      if (r.t > 0) rows_.push_back(r);
    require(rows_.size() >= 2, "tabulated curve needs two rows with t > 0");
    require(measure_ > 0, "tabulated curve needs a positive measure");
  }

  double measure() const override { return measure_; }

  Estimate loss(double t) const override {
    if (t <= 0) return {0.0, 0.0};
    auto lossv = [&](std::size_t i) { return std::max(measure_ - rows_[i].q, 0.0); };
    if (t <= rows_.front().t) {
      // Below the table: loss in [0, loss(t_0) + err_0], scaled like sqrt(t).
      const double hi = lossv(0) + rows_.front().err;
      const double v = lossv(0) * std::sqrt(t / rows_.front().t);
      return {v, std::max(v, hi - v)};
    }
    if (t >= rows_.back().t) {
      const double lo = lossv(rows_.size() - 1) - rows_.back().err;
      const double v = lossv(rows_.size() - 1);
      return {v, std::max(measure_ - v, v - lo)};
    }
    const auto it = std::upper_bound(rows_.begin(), rows_.end(), t, [](double x, const auto& r) { return x < r.t; });
    const std::size_t k = static_cast<std::size_t>(it - rows_.begin());
    const std::size_t i = k - 1;
    const double l0 = lossv(i), l1 = lossv(k);
    double v;
    if (l0 > 0 && l1 > 0) {
      const double w = std::log(t / rows_[i].t) / std::log(rows_[k].t / rows_[i].t);
      v = std::exp((1 - w) * std::log(l0) + w * std::log(l1));
    } else {
      v = l0 + (l1 - l0) * (t - rows_[i].t) / (rows_[k].t - rows_[i].t);
    }
    const double lo = l0 - rows_[i].err, hi = l1 + rows_[k].err;
    return {v, std::max({v - lo, hi - v, 0.0})};
  }

  double loss_envelope(double t) const override {
    const auto e = loss(t);
    return std::min(measure_, e.value + e.error);
  }

  double saturation_time(double eps) const override {
    for (const auto& r : rows_)
      if (r.q + r.err <= eps * measure_) return r.t;
    return rows_.back().t;
  }

  std::string description() const override { return "tabulated " + source_; }

  const std::vector<CurveRow>& rows() const { return rows_; }

 private:
  std::vector<CurveRow> rows_;
  double measure_;
  std::string source_;
};

/// Reads `t,Q,err` CSV. The measure is taken from a t = 0 row when present,
/// otherwise from `measure` (which must then be positive).
inline HeatCurve load_tabulated_curve(const std::string& path, double measure = 0.0) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open curve table '" + path + "'");
  std::string line;
  std::vector<CurveRow> rows;
  bool header = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      if (line.rfind("t,Q", 0) == 0) continue;
    }
    std::istringstream ls(line);
    std::string a, b, c;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c, ','))
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": expected t,Q,err");
    try {
      rows.push_back({std::stod(a), std::stod(b), std::stod(c)});
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  for (const auto& r : rows)
    if (r.t == 0) measure = r.q;
  return HeatCurve(std::make_shared<TabulatedCurve>(std::move(rows), measure, path));
}

}  // namespace fshc
