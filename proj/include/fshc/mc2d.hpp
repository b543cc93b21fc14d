#pragma once

// Monte Carlo heat content of planar self-similar domains. Paths start
// uniformly in the depth-truncated domain, take Gaussian steps of variance
// 2h per coordinate and are killed on leaving their cell, with a Brownian
// bridge crossing test against every edge after each step.
//
// Copies meet only in boundary points, so a path never changes copy. A path
// in R_w G0 over time T is a path in G0 over time T / r_w^2; the copy is drawn
// with probability proportional to its area and the walk runs in G0.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fshc/error.hpp"
#include "fshc/geometry.hpp"
#include "fshc/heat_curve.hpp"
#include "fshc/numerics.hpp"
#include "fshc/rng.hpp"
#include "fshc/stable.hpp"

namespace fshc {

struct PathConfig {
  int depth = 40;
  double dt = 1e-7;      // smallest step, in cell time
  double rel_dt = 0.05;  // steps grow as rel_dt * elapsed cell time; 0 gives fixed steps
  bool bridge_correction = true;
  std::uint64_t seed = 1;
  std::size_t n_paths = 100000;
  unsigned threads = 1;

  nlohmann::json to_json() const {
    return {{"depth", depth},         {"dt", dt},   {"rel_dt", rel_dt}, {"bridge_correction", bridge_correction},
            {"seed", seed},           {"n_paths", n_paths}};
  }
};

/// Convex cell in true coordinates: an interval (dim 1) or a polygon (dim 2),
/// written as {x : n_e . x < c_e}.
class ConvexCell {
 public:
  using Vec = std::array<double, 2>;

  static ConvexCell interval(double L) {
    require(L > 0, "interval length must be positive");
    ConvexCell c;
    c.dim_ = 1;
    c.normal_ = {{-1, 0}, {1, 0}};
    c.offset_ = {0, L};
    c.vertices_ = {{0, 0}, {L, 0}};
    c.measure_ = L;
    return c;
  }

  /// Vertices in counter-clockwise order.
  static ConvexCell polygon(std::vector<Vec> v) {
    require(v.size() >= 3, "polygon needs three or more vertices");
    ConvexCell c;
    c.dim_ = 2;
    const std::size_t n = v.size();
    double area2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec& a = v[i];
      const Vec& b = v[(i + 1) % n];
      area2 += a[0] * b[1] - a[1] * b[0];
      const double ex = b[0] - a[0], ey = b[1] - a[1];
      const double len = std::hypot(ex, ey);
      const Vec nrm{ey / len, -ex / len};
      c.normal_.push_back(nrm);
      c.offset_.push_back(nrm[0] * a[0] + nrm[1] * a[1]);
    }
    require(area2 > 0, "polygon must be counter-clockwise with positive area");
    c.measure_ = area2 / 2;
    double acc = 0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      acc += std::abs((v[i][0] - v[0][0]) * (v[i + 1][1] - v[0][1]) - (v[i][1] - v[0][1]) * (v[i + 1][0] - v[0][0]));
      c.fan_.push_back(acc);
    }
    c.vertices_ = std::move(v);
    return c;
  }

  int dim() const { return dim_; }
  double measure() const { return measure_; }
  std::size_t edges() const { return offset_.size(); }

  double distance(std::size_t e, const Vec& x) const {
    return offset_[e] - normal_[e][0] * x[0] - normal_[e][1] * x[1];
  }

  Vec sample(PhiloxStream& rng) const {
    if (dim_ == 1) return {vertices_[1][0] * rng.uniform(), 0.0};
    const double u = rng.uniform() * fan_.back();
    const std::size_t k = static_cast<std::size_t>(std::upper_bound(fan_.begin(), fan_.end(), u) - fan_.begin());
    const Vec& a = vertices_[0];
    const Vec& b = vertices_[std::min(k, fan_.size() - 1) + 1];
    const Vec& c = vertices_[std::min(k, fan_.size() - 1) + 2];
    double s = rng.uniform(), r = rng.uniform();
    if (s + r > 1) {
      s = 1 - s;
      r = 1 - r;
    }
    return {a[0] + s * (b[0] - a[0]) + r * (c[0] - a[0]), a[1] + s * (b[1] - a[1]) + r * (c[1] - a[1])};
  }

 private:
  int dim_ = 2;
  std::vector<Vec> normal_;
  std::vector<double> offset_;
  std::vector<Vec> vertices_;
  std::vector<double> fan_;
  double measure_ = 0;
};

/// Walks one path in `cell` and reports, for each ascending cell time in
/// `targets`, whether it is still alive. Returns the number of targets reached.
inline std::size_t walk_path(const ConvexCell& cell, const std::vector<double>& targets, const PathConfig& cfg,
                             PhiloxStream& rng) {
  auto x = cell.sample(rng);
  const std::size_t ne = cell.edges();
  std::array<double, 8> d0{};
  std::vector<double> dbuf;
  double* dist = d0.data();
  if (ne > d0.size()) {
    dbuf.resize(ne);
    dist = dbuf.data();
  }
  for (std::size_t e = 0; e < ne; ++e) dist[e] = cell.distance(e, x);
  double tau = 0;
  std::size_t idx = 0;
  while (idx < targets.size() && targets[idx] <= 0) ++idx;
  while (idx < targets.size()) {
    const double want = std::max(cfg.dt, cfg.rel_dt * tau);
    const double to_target = targets[idx] - tau;
    const bool last = want >= to_target;
    const double h = last ? to_target : want;
    const double sd = std::sqrt(2 * h);
    decltype(x) y{x[0] + sd * rng.normal(), cell.dim() == 2 ? x[1] + sd * rng.normal() : 0.0};
    double keep = 1.0;
    for (std::size_t e = 0; e < ne; ++e) {
      const double d1 = cell.distance(e, y);
      if (d1 <= 0) return idx;
      if (cfg.bridge_correction) keep *= -std::expm1(-dist[e] * d1 / h);
      dist[e] = d1;
    }
    if (cfg.bridge_correction && rng.uniform() >= keep) return idx;
    x = y;
    tau = last ? targets[idx] : tau + h;
    while (idx < targets.size() && targets[idx] <= tau) ++idx;
  }
  return idx;
}

/// Draws the copy a path starts in: level n with probability proportional to
/// q^n (q = sum r_j^d), letters with probabilities r_j^d / q.
class CopySampler {
 public:
  CopySampler(const IFSDomain& dom, int depth) {
    require(depth >= 0, "depth must be non-negative");
    if (depth > 1000) throw Error(ErrorCode::DepthOverflow, "Monte Carlo depth exceeds 1000", {{"depth", depth}});
    q_ = 0;
    for (double r : dom.ratios_double()) {
      letter_.push_back(std::pow(r, dom.d));
      q_ += letter_.back();
      ratio_.push_back(r);
    }
    for (auto& p : letter_) p /= q_;
    std::partial_sum(letter_.begin(), letter_.end(), letter_.begin());
    double w = 1;
    for (int n = 0; n <= depth; ++n) {
      level_.push_back(w);
      w *= q_;
    }
    std::partial_sum(level_.begin(), level_.end(), level_.begin());
  }

  /// Linear scale r_w of the drawn copy.
  double draw(PhiloxStream& rng) const {
    const double u = rng.uniform() * level_.back();
    const auto n = static_cast<int>(std::upper_bound(level_.begin(), level_.end(), u) - level_.begin());
    double r = 1;
    for (int i = 0; i < std::min<int>(n, static_cast<int>(level_.size()) - 1); ++i) {
      const double v = rng.uniform() * letter_.back();
      r *= ratio_[static_cast<std::size_t>(std::upper_bound(letter_.begin(), letter_.end(), v) - letter_.begin())];
    }
    return r;
  }

  /// |G_depth| / |G0|.
  double measure_factor() const { return level_.back(); }

 private:
  std::vector<double> letter_, ratio_, level_;
  double q_ = 0;
};

struct McCurve {
  std::vector<double> t;
  std::vector<double> estimate;  // Q or Qtilde of the truncated domain
  std::vector<double> std_error;
  double measure_depth = 0;  // |G_depth|
  double tail_measure = 0;   // |G| - |G_depth|, bound on the truncation bias
  int depth = 0;
  int validated_depth = 0;
  double alpha = 2;
  PathConfig config;
  std::string note;

  /// Loss |G_depth| - estimate.
  std::vector<double> loss() const {
    std::vector<double> l;
    for (double e : estimate) l.push_back(measure_depth - e);
    return l;
  }

  /// t,Q,err with a leading t = 0 row carrying |G_depth|; rows in ascending t.
  std::string to_csv() const {
    std::vector<std::size_t> order(t.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return t[a] < t[b]; });
    std::ostringstream os;
    os.precision(17);
    os << "t,Q,err\n0," << measure_depth << ",0\n";
    for (auto i : order) os << t[i] << ',' << estimate[i] << ',' << std_error[i] << '\n';
    return os.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < t.size(); ++i)
      rows.push_back({{"t", t[i]},
                      {"estimate", estimate[i]},
                      {"std_error", std_error[i]},
                      {"ci95", {estimate[i] - 1.96 * std_error[i], estimate[i] + 1.96 * std_error[i]}}});
    return {{"alpha", alpha},
            {"measure_depth", measure_depth},
            {"tail_measure", tail_measure},
            {"depth", depth},
            {"validated_depth", validated_depth},
            {"config", config.to_json()},
            {"note", note},
            {"rows", rows}};
  }
};

namespace detail {

/// Shared driver: `setup(rng, targets_out)` fills the cell times for one path
/// (ascending, aligned with `order`) and returns the cell to walk in.
template <class Setup>
std::vector<std::size_t> run_paths(const PathConfig& cfg, std::size_t m, Setup&& setup) {
  require(cfg.n_paths >= 2, "Monte Carlo needs two or more paths");
  require(cfg.dt > 0 && cfg.rel_dt >= 0, "dt must be positive");
  constexpr std::size_t block = 4096;
  const std::size_t blocks = (cfg.n_paths + block - 1) / block;
  std::vector<std::vector<std::size_t>> counts(blocks, std::vector<std::size_t>(m, 0));
  parallel_for(blocks, cfg.threads, [&](std::size_t b) {
    PhiloxStream rng(cfg.seed, b);
    std::vector<double> targets(m);
    const std::size_t n = std::min(block, cfg.n_paths - b * block);
    for (std::size_t i = 0; i < n; ++i) {
      const ConvexCell& cell = setup(rng, targets);
      const std::size_t reached = walk_path(cell, targets, cfg, rng);
      for (std::size_t k = 0; k < reached; ++k) ++counts[b][k];
    }
  });
  std::vector<std::size_t> total(m, 0);
  for (const auto& c : counts)
    for (std::size_t k = 0; k < m; ++k) total[k] += c[k];
  return total;
}

inline std::vector<std::size_t> ascending_order(const std::vector<double>& t) {
  std::vector<std::size_t> order(t.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return t[a] < t[b]; });
  return order;
}

inline ConvexCell base_cell(const IFSDomain& dom) {
  if (dom.d == 1) return ConvexCell::interval(to_double(dom.base.interval_length));
  const double ys = std::sqrt(to_double(dom.y_scale_squared));
  std::vector<ConvexCell::Vec> v;
  for (const auto& p : counter_clockwise(dom.base.vertices)) v.push_back({to_double(p[0]), ys * to_double(p[1])});
  return ConvexCell::polygon(std::move(v));
}

inline McCurve finish(const std::vector<double>& t_grid, const std::vector<std::size_t>& order,
                      const std::vector<std::size_t>& survived, double measure, const PathConfig& cfg) {
  McCurve c;
  c.t = t_grid;
  c.estimate.resize(t_grid.size());
  c.std_error.resize(t_grid.size());
  c.measure_depth = measure;
  c.config = cfg;
  const double n = static_cast<double>(cfg.n_paths);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double p = static_cast<double>(survived[k]) / n;
    c.estimate[order[k]] = measure * p;
    c.std_error[order[k]] = measure * std::sqrt(std::max(p * (1 - p), 1.0 / n) / n);
  }
  return c;
}

}  // namespace detail

/// Q of a union of disjoint convex cells.
inline McCurve estimate_q2_cells(const std::vector<ConvexCell>& cells, const PathConfig& cfg,
                                 const std::vector<double>& t_grid) {
  require(!cells.empty(), "need one or more cells");
  std::vector<double> cum;
  double total = 0;
  for (const auto& c : cells) cum.push_back(total += c.measure());
  const auto order = detail::ascending_order(t_grid);
  const auto survived = detail::run_paths(cfg, t_grid.size(), [&](PhiloxStream& rng, std::vector<double>& tg) -> const ConvexCell& {
    const double u = rng.uniform() * total;
    const auto k = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin()), cells.size() - 1);
    for (std::size_t i = 0; i < order.size(); ++i) tg[i] = t_grid[order[i]];
    return cells[k];
  });
  auto c = detail::finish(t_grid, order, survived, total, cfg);
  c.depth = 0;
  return c;
}

namespace detail {

inline McCurve estimate_domain(const IFSDomain& dom, double alpha, const PathConfig& cfg,
                               const std::vector<double>& t_grid) {
  validate_domain(dom).throw_if_failed();
  for (double t : t_grid) require(t >= 0, "times must be non-negative");
  const ConvexCell cell = base_cell(dom);
  const CopySampler copies(dom, cfg.depth);
  const auto order = ascending_order(t_grid);
  std::shared_ptr<const StableLaw> law;
  if (alpha < 2) law = stable_law(alpha);
  const auto survived = run_paths(cfg, t_grid.size(), [&](PhiloxStream& rng, std::vector<double>& tg) -> const ConvexCell& {
    const double r = copies.draw(rng);
    const double clock = law ? law->sample(rng) : 1.0;
    const double inv = 1.0 / (r * r);
    for (std::size_t i = 0; i < order.size(); ++i) {
      const double t = t_grid[order[i]];
      tg[i] = (law ? std::pow(t, 2.0 / alpha) * clock : t) * inv;
    }
    return cell;
  });
  const double measure = cell.measure() * copies.measure_factor();
  auto c = finish(t_grid, order, survived, measure, cfg);
  c.alpha = alpha;
  c.depth = cfg.depth;
  c.validated_depth = dom.d == 2 ? dom.disjointness_depth : cfg.depth;
  c.tail_measure = std::max(0.0, total_measure(dom).value() - measure);
  if (dom.d == 2) c.note = "experimental: polygonal base set is not C^{1,1}";
  return c;
}

}  // namespace detail

/// Q^(2) of the depth-truncated domain on t_grid.
inline McCurve estimate_q2_2d(const IFSDomain& dom, const PathConfig& cfg, const std::vector<double>& t_grid) {
  return detail::estimate_domain(dom, 2.0, cfg, t_grid);
}

/// Qtilde^(alpha): each path draws S_1 once and is tested at t^{2/alpha} S_1
/// for every t in the grid.
inline McCurve estimate_shc_2d(const IFSDomain& dom, double alpha, const PathConfig& cfg,
                               const std::vector<double>& t_grid) {
  require(alpha > 0 && alpha < 2, "alpha must lie in (0, 2)");
  return detail::estimate_domain(dom, alpha, cfg, t_grid);
}

/// Tabulated curve from a Brownian estimate, for use as a base curve.
inline HeatCurve tabulated_curve(const McCurve& c) {
  require(c.alpha == 2, "only Brownian estimates can be tabulated as heat curves");
  std::vector<CurveRow> rows;
  const auto order = detail::ascending_order(c.t);
  for (auto i : order) rows.push_back({c.t[i], c.estimate[i], c.std_error[i]});
  return HeatCurve(std::make_shared<TabulatedCurve>(rows, c.measure_depth, "mc2d"));
}

}  // namespace fshc
