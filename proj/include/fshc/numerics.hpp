#pragma once

// Shared numerical kernels: adaptive Gauss-Kronrod quadrature with an
// absolute/relative stopping rule, log-spaced grids, trigonometric
// interpolation of periodic samples, least-squares slopes and a
// deterministic parallel_for.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <queue>
#include <span>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fshc/error.hpp"

namespace fshc {

/// A value together with an error bound (absolute).
struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

struct QuadratureOptions {
  double abs_tol = 0.0;
  double rel_tol = 1e-12;
  int max_panels = 2000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int panels = 0;
  bool converged = false;
};

namespace detail {

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel kronrod21(F& f, double a, double b) {
  using boost::math::quadrature::gauss;
  using boost::math::quadrature::gauss_kronrod;
  static const auto& xk = gauss_kronrod<double, 21>::abscissa();
  static const auto& wk = gauss_kronrod<double, 21>::weights();
  static const auto& wg = gauss<double, 10>::weights();

  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double fv[21];
  fv[0] = f(center);
  for (int i = 1; i <= 10; ++i) {
    fv[2 * i - 1] = f(center - half * xk[i]);
    fv[2 * i] = f(center + half * xk[i]);
  }
  double kron = wk[0] * fv[0];
  double gaussv = 0.0;
  double abs_sum = wk[0] * std::abs(fv[0]);
  for (int i = 1; i <= 10; ++i) {
    const double pair = fv[2 * i - 1] + fv[2 * i];
    kron += wk[i] * pair;
    abs_sum += wk[i] * (std::abs(fv[2 * i - 1]) + std::abs(fv[2 * i]));
    if (i % 2 == 1) gaussv += wg[(i - 1) / 2] * pair;
  }
  const double mean = 0.5 * kron;
  double asc = wk[0] * std::abs(fv[0] - mean);
  for (int i = 1; i <= 10; ++i) asc += wk[i] * (std::abs(fv[2 * i - 1] - mean) + std::abs(fv[2 * i] - mean));

  // QUADPACK error heuristic.
  double err = std::abs((kron - gaussv) * half);
  const double resasc = asc * std::abs(half);
  const double resabs = abs_sum * std::abs(half);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  const double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50 * eps)) err = std::max(50 * eps * resabs, err);
  if (!std::isfinite(kron)) err = std::numeric_limits<double>::infinity();
  return {a, b, kron * half, err};
}

}  // namespace detail

/// Globally adaptive 21-point Gauss-Kronrod over [breaks.front(), breaks.back()]
/// with the given interior break points. Stops once the summed error estimate
/// is below max(abs_tol, rel_tol*|I|) or the panel budget is exhausted.
template <class F>
QuadratureResult integrate(F&& f, std::span<const double> breaks, const QuadratureOptions& opt = {}) {
  QuadratureResult out;
  if (breaks.size() < 2) return out;
  std::priority_queue<detail::Panel> heap;
  double total = 0.0, total_err = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    auto p = detail::kronrod21(f, breaks[i], breaks[i + 1]);
    total += p.value;
    total_err += p.error;
    heap.push(p);
  }
  int panels = static_cast<int>(heap.size());
  auto target = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };
  while (!heap.empty() && total_err > target() && panels < opt.max_panels) {
    const auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;
    heap.pop();
    auto left = detail::kronrod21(f, worst.a, mid);
    auto right = detail::kronrod21(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }
  // Re-sum to remove drift from the running updates.
  double sum = 0.0, comp = 0.0, err = 0.0;
  while (!heap.empty()) {
    const auto& p = heap.top();
    const double y = p.value - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    err += p.error;
    heap.pop();
  }
  out.value = sum;
  out.error = err;
  out.panels = panels;
  out.converged = err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(sum));
  return out;
}

template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  const double br[2] = {a, b};
  return integrate(std::forward<F>(f), std::span<const double>(br, 2), opt);
}

/// `points` values from start to stop (inclusive), evenly spaced in log.
inline std::vector<double> log_grid(double start, double stop, int points) {
  require(start > 0 && stop > 0, "log grid endpoints must be positive");
  require(points >= 1, "log grid needs at least one point");
  std::vector<double> g(static_cast<std::size_t>(points));
  if (points == 1) {
    g[0] = start;
    return g;
  }
  const double l0 = std::log(start), l1 = std::log(stop);
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = std::exp(l0 + (l1 - l0) * i / (points - 1));
  g.front() = start;
  g.back() = stop;
  return g;
}

/// Ordinary least-squares slope of y against x.
inline double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "slope fit needs two or more points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

/// Trigonometric interpolant through M equispaced samples of a periodic
/// function: samples[m] = f(origin + m*period/M).
class PeriodicInterpolant {
 public:
  PeriodicInterpolant() = default;
  PeriodicInterpolant(double origin, double period, std::vector<double> samples)
      : origin_(origin), period_(period), samples_(std::move(samples)) {
    const std::size_t m = samples_.size();
    require(m >= 2, "periodic interpolant needs two or more samples");
    const std::size_t kmax = m / 2;
    a_.assign(kmax + 1, 0.0);
    b_.assign(kmax + 1, 0.0);
    for (std::size_t k = 0; k <= kmax; ++k) {
      double sa = 0, sb = 0;
      for (std::size_t j = 0; j < m; ++j) {
        const double th = 2 * std::numbers::pi * static_cast<double>(k * j % m) / static_cast<double>(m);
        sa += samples_[j] * std::cos(th);
        sb += samples_[j] * std::sin(th);
      }
      double w = 2.0 / static_cast<double>(m);
      if (k == 0 || (m % 2 == 0 && k == kmax)) w = 1.0 / static_cast<double>(m);
      a_[k] = w * sa;
      b_[k] = w * sb;
    }
    if (m % 2 == 0) b_[kmax] = 0.0;
  }

  double operator()(double z) const {
    const double th = 2 * std::numbers::pi * (z - origin_) / period_;
    const double c1 = std::cos(th), s1 = std::sin(th);
    double ck = 1.0, sk = 0.0, acc = a_[0];
    for (std::size_t k = 1; k < a_.size(); ++k) {
      const double cn = ck * c1 - sk * s1;
      const double sn = sk * c1 + ck * s1;
      ck = cn;
      sk = sn;
      acc += a_[k] * ck + b_[k] * sk;
    }
    return acc;
  }

  double period() const { return period_; }
  double origin() const { return origin_; }
  const std::vector<double>& samples() const { return samples_; }

 private:
  double origin_ = 0.0, period_ = 1.0;
  std::vector<double> samples_;
  std::vector<double> a_, b_;
};

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
/// processed exactly once, so results written per index do not depend on the
/// worker count. The first exception thrown is rethrown on the caller.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace fshc
