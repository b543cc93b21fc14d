#pragma once

// Command-line front end. `run` parses argv, dispatches to the library and
// writes CSV or JSON; errors go to `err` as JSON objects.
// Exit codes: 0 success, 1 invalid input, 2 convergence failure.

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fshc/asymptotics.hpp"
#include "fshc/brownian_law.hpp"
#include "fshc/domain_io.hpp"
#include "fshc/error.hpp"
#include "fshc/geometry.hpp"
#include "fshc/heat_curve.hpp"
#include "fshc/mc2d.hpp"
#include "fshc/renewal.hpp"
#include "fshc/shc.hpp"
#include "fshc/stable.hpp"

namespace fshc::cli {

/// Shortest round-trip decimal form.
inline std::string num(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

/// `start:stop:points` (log-spaced), a comma list, or a single value.
inline std::vector<double> parse_grid(const std::string& text, bool log_spaced = true) {
  auto to_d = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad number in grid: '" + s + "'");
    }
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw Error(ErrorCode::InvalidArgument, "grid must be start:stop:points");
    const double a = to_d(parts[0]), b = to_d(parts[1]);
    const double n = to_d(parts[2]);
    if (n < 1 || n != std::floor(n)) throw Error(ErrorCode::InvalidArgument, "grid points must be a positive integer");
    const auto pts = static_cast<std::size_t>(n);
    if (log_spaced) {
      if (a <= 0 || b <= 0) throw Error(ErrorCode::InvalidArgument, "log grid needs positive endpoints");
      return log_grid(a, b, pts);
    }
    std::vector<double> g;
    for (std::size_t i = 0; i < pts; ++i) g.push_back(pts == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(pts - 1));
    return g;
  }
  std::vector<double> g;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) g.push_back(to_d(p));
  if (g.empty()) throw Error(ErrorCode::InvalidArgument, "empty grid");
  return g;
}

struct RunConfig {
  std::string domain;
  std::optional<double> alpha;
  std::string t = "1e-3:1e-9:13";
  double tol = 1e-8;
  std::uint64_t seed = 1;
  std::size_t n = 100000;
  std::string regime = "auto";
  unsigned threads = 1;
  std::string out;
  std::string format;  // empty: json for verify, csv elsewhere
  // subcommand specific
  bool mc = false;
  std::string curve;
  std::string z = "0:40:41";
  int depth = PathConfig{}.depth;
  double dt = PathConfig{}.dt;
  double rel_dt = PathConfig{}.rel_dt;
  bool no_bridge = false;
};

namespace detail {

inline int exit_code(ErrorCode c) { return is_convergence_failure(c) ? 2 : 1; }

inline HeatCurve base_or_fractal(const IFSDomain& dom, const RunConfig& rc) {
  if (!rc.curve.empty()) return load_tabulated_curve(rc.curve, total_measure(dom).value());
  if (dom.d != 1) throw Error(ErrorCode::InvalidArgument, "d = 2 needs a tabulated curve (--curve, from mc2d)");
  return fractal_curve(dom);
}

/// Rows that missed the tolerance are still written; the first failure is
/// reported after all rows.
struct RowFailures {
  std::optional<Error> first;
  void note(const Error& e) {
    if (!first) first = e;
  }
};

inline int cmd_dim(const RunConfig& rc, std::ostream& out) {
  const auto dom = load_domain(rc.domain);
  validate_domain(dom).throw_if_failed();
  const auto cls = classify_log_ratios(dom);
  nlohmann::json j;
  j["b"] = minkowski_dimension(dom).b;
  j["class"] = cls.arithmetic ? "arithmetic" : "nonarithmetic";
  if (cls.arithmetic) j["span"] = cls.span;
  out << j.dump() << '\n';
  return 0;
}

inline int cmd_measure(const RunConfig& rc, std::ostream& out) {
  const auto dom = load_domain(rc.domain);
  validate_domain(dom).throw_if_failed();
  const auto m = total_measure(dom), b = base_measure(dom);
  nlohmann::json j{{"measure", m.value()}, {"exact", m.to_string()}, {"base_measure", b.value()},
                   {"base_exact", b.to_string()}};
  out << j.dump() << '\n';
  return 0;
}

inline int cmd_q2(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const auto dom = load_domain(rc.domain);
  validate_domain(dom).throw_if_failed();
  const auto curve = base_or_fractal(dom, rc);
  const auto grid = parse_grid(rc.t);
  RowFailures fail;
  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream csv;
  csv << "t,Q,err\n";
  for (double t : grid) {
    const auto q = curve.content(t);
    if (q.error > rc.tol)
      fail.note(Error(ErrorCode::ToleranceUnreachable, "heat content bound exceeds tolerance",
                      {{"t", t}, {"value", q.value}, {"achieved_bound", q.error}, {"target", rc.tol}}));
    csv << num(t) << ',' << num(q.value) << ',' << num(q.error) << '\n';
    rows.push_back({{"t", t}, {"Q", q.value}, {"err", q.error}});
  }
  out << (rc.format == "json" ? nlohmann::json{{"rows", rows}}.dump(2) + "\n" : csv.str());
  if (fail.first) {
    err << fail.first->to_json().dump() << '\n';
    return 2;
  }
  return 0;
}

inline double need_alpha(const RunConfig& rc) {
  if (!rc.alpha) throw Error(ErrorCode::InvalidArgument, "--alpha is required");
  return *rc.alpha;
}

inline int cmd_shc(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const auto dom = load_domain(rc.domain);
  validate_domain(dom).throw_if_failed();
  const double alpha = need_alpha(rc);
  const auto grid = parse_grid(rc.t);
  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream csv;
  if (rc.mc) {
    const auto curve = base_or_fractal(dom, rc);
    const auto law = stable_law(alpha);
    csv << "t,estimate,stderr,n,seed\n";
    for (double t : grid) {
      const auto e = subordinated_heat_content_mc(curve, *law, t, rc.n, rc.seed, rc.threads);
      csv << num(t) << ',' << num(e.estimate) << ',' << num(e.std_error) << ',' << e.n << ',' << e.seed << '\n';
      rows.push_back({{"t", t}, {"estimate", e.estimate}, {"stderr", e.std_error}, {"n", e.n}, {"seed", e.seed}});
    }
    out << (rc.format == "json" ? nlohmann::json{{"rows", rows}}.dump(2) + "\n" : csv.str());
    return 0;
  }
  const auto curve = base_or_fractal(dom, rc);
  const auto law = stable_law(alpha);
  const SubordinationOptions opt{rc.tol, 0.0, 20000};
  RowFailures fail;
  std::vector<Estimate> vals(grid.size());
  std::vector<std::optional<Error>> errs(grid.size());
  parallel_for(grid.size(), rc.threads, [&](std::size_t i) {
    try {
      const auto l = subordinated_heat_loss(curve, *law, grid[i], opt);
      vals[i] = {curve.measure() - l.value, l.error};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ToleranceUnreachable) throw;
      errs[i] = e;
      vals[i] = {curve.measure() - e.details().at("value").get<double>(), e.details().at("achieved_bound").get<double>()};
    }
  });
  csv << "t,Qtilde,err\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (errs[i]) fail.note(*errs[i]);
    csv << num(grid[i]) << ',' << num(vals[i].value) << ',' << num(vals[i].error) << '\n';
    rows.push_back({{"t", grid[i]}, {"Qtilde", vals[i].value}, {"err", vals[i].error}});
  }
  out << (rc.format == "json" ? nlohmann::json{{"rows", rows}}.dump(2) + "\n" : csv.str());
  if (fail.first) {
    err << fail.first->to_json().dump() << '\n';
    return 2;
  }
  return 0;
}

inline int cmd_law(const RunConfig& rc, std::ostream& out) {
  const auto dom = load_domain(rc.domain);
  HeatCurve base;
  if (!rc.curve.empty()) base = load_tabulated_curve(rc.curve);
  const auto in = law_inputs(dom, base);
  const double dmb = in.d - in.b;
  nlohmann::json j{{"d_minus_b", dmb}, {"arithmetic", in.cls.arithmetic}};
  const Regime requested = parse_regime(rc.regime);
  if (!rc.alpha && requested != Regime::Critical) {
    const BrownianLaw bl(in);
    j["law"] = "brownian";
    j["exponent"] = bl.exponent();
    if (bl.arithmetic()) {
      j["period"] = bl.period();
      j["A"] = bl.A();
      j["B"] = bl.B();
    } else {
      j["C"] = bl.C().value;
      j["C_error"] = bl.C().error;
    }
    out << j.dump(2) << '\n';
    return 0;
  }
  require(dom.d == 1, "subordinate laws need d = 1");
  const double alpha = rc.alpha ? *rc.alpha : dmb;
  const Regime regime = requested == Regime::Critical ? resolve_regime(Regime::Critical, alpha, dmb)
                                                      : resolve_regime(requested, alpha, dmb);
  j["regime"] = to_string(regime);
  if (regime == Regime::Supercritical) {
    const SupercriticalLaw sl(in, alpha);
    j["alpha"] = alpha;
    j["exponent"] = sl.exponent();
    if (sl.arithmetic()) {
      j["period"] = sl.period();
      j["f_interpolation_error"] = sl.f_error();
      nlohmann::json g = nlohmann::json::array();
      for (int i = 0; i < 32; ++i) {
        const double z = sl.period() * i / 32;
        g.push_back({{"z", z}, {"f", sl.f(z)}});
      }
      j["f_grid"] = g;
    } else {
      j["C1"] = sl.C1().value;
      j["C1_error"] = sl.C1().error;
    }
  } else if (regime == Regime::Critical) {
    const CriticalLaw cl(in);
    j["alpha"] = cl.alpha();
    j["exponent"] = 1.0;
    if (cl.arithmetic()) {
      j["A_prime"] = cl.A_prime();
      j["B_prime"] = cl.B_prime();
    } else {
      j["constant"] = cl.constant().value;
      j["constant_error"] = cl.constant().error;
    }
  } else {
    const auto K = subcritical_constant(dom, alpha);
    j["alpha"] = alpha;
    j["exponent"] = 1.0;
    j["K"] = K.value;
    j["K_error"] = K.error;
  }
  out << j.dump(2) << '\n';
  return 0;
}

inline int cmd_verify(const RunConfig& rc, std::ostream& out) {
  const auto dom = load_domain(rc.domain);
  const Regime regime = parse_regime(rc.regime);
  const double alpha = rc.alpha ? *rc.alpha : (regime == Regime::Critical ? std::nan("") : need_alpha(rc));
  const auto rep = verify_law(dom, alpha, parse_grid(rc.t), regime, {}, rc.threads);
  out << (rc.format == "csv" ? rep.to_csv() : rep.to_json().dump(2) + "\n");
  return 0;
}

inline int cmd_renewal_eval(const std::string& fixture, const RunConfig& rc, std::ostream& out) {
  const RenewalSolver s(load_renewal(fixture));
  const auto zs = parse_grid(rc.z, false);
  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream csv;
  csv << "z,f,bound,limit,limit_err\n";
  std::optional<Estimate> flat;
  if (!s.problem().arithmetic) flat = s.limit_nonarithmetic();
  for (double z : zs) {
    const auto f = s.solve(z, rc.tol);
    const auto lim = flat ? *flat : s.limit_arithmetic(z);
    csv << num(z) << ',' << num(f.value) << ',' << num(f.bound) << ',' << num(lim.value) << ',' << num(lim.error)
        << '\n';
    rows.push_back({{"z", z}, {"f", f.value}, {"bound", f.bound}, {"limit", lim.value}, {"limit_err", lim.error}});
  }
  if (rc.format == "json")
    out << nlohmann::json{{"name", s.problem().name}, {"arithmetic", s.problem().arithmetic},
                          {"span", s.problem().span}, {"rows", rows}}
               .dump(2)
        << '\n';
  else
    out << csv.str();
  return 0;
}

inline int cmd_sample(const RunConfig& rc, std::ostream& out) {
  const double alpha = need_alpha(rc);
  const auto xs = stable_law(alpha)->sample(rc.seed, rc.n);
  if (rc.format == "json") {
    out << nlohmann::json{{"alpha", alpha}, {"seed", rc.seed}, {"samples", xs}}.dump() << '\n';
    return 0;
  }
  out << "s\n";
  for (double x : xs) out << num(x) << '\n';
  return 0;
}

inline int cmd_mc2d(const RunConfig& rc, std::ostream& out) {
  const auto dom = load_domain(rc.domain);
  PathConfig cfg;
  cfg.depth = rc.depth;
  cfg.dt = rc.dt;
  cfg.rel_dt = rc.rel_dt;
  cfg.bridge_correction = !rc.no_bridge;
  cfg.seed = rc.seed;
  cfg.n_paths = rc.n;
  cfg.threads = rc.threads;
  const auto grid = parse_grid(rc.t);
  const auto c = rc.alpha ? estimate_shc_2d(dom, *rc.alpha, cfg, grid) : estimate_q2_2d(dom, cfg, grid);
  out << (rc.format == "json" ? c.to_json().dump(2) + "\n" : c.to_csv());
  return 0;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Heat content of fractal domains under subordinate Brownian motion", "fshc"};
  app.require_subcommand(1);
  RunConfig rc;
  std::string fixture;

  auto common = [&](CLI::App* s, bool domain) {
    if (domain) s->add_option("domain", rc.domain, "domain JSON file")->required()->check(CLI::ExistingFile);
    s->add_option("--alpha", rc.alpha, "stability index in (0, 2)");
    s->add_option("--t", rc.t, "time grid start:stop:points (log-spaced), list or value");
    s->add_option("--tol", rc.tol, "absolute tolerance");
    s->add_option("--seed", rc.seed, "random seed");
    s->add_option("--n", rc.n, "sample or path count");
    s->add_option("--regime", rc.regime, "auto|supercritical|critical|subcritical")
        ->check(CLI::IsMember({"auto", "supercritical", "critical", "subcritical"}));
    s->add_option("--threads", rc.threads, "worker threads")->check(CLI::PositiveNumber);
    s->add_option("--out", rc.out, "output file (default stdout)");
    s->add_option("--format", rc.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };

  auto* dim = app.add_subcommand("dim", "interior Minkowski dimension and classification");
  common(dim, true);
  auto* measure = app.add_subcommand("measure", "Lebesgue measure of the domain");
  common(measure, true);
  auto* q2 = app.add_subcommand("q2", "Brownian heat content curve");
  common(q2, true);
  q2->add_option("--curve", rc.curve, "tabulated t,Q,err curve");
  auto* shc = app.add_subcommand("shc", "subordinate heat content curve");
  common(shc, true);
  shc->add_flag("--mc", rc.mc, "Rao-Blackwellized Monte Carlo instead of quadrature");
  shc->add_option("--curve", rc.curve, "tabulated t,Q,err base curve (d = 2)");
  auto* law = app.add_subcommand("law", "asymptotic constants");
  common(law, true);
  law->add_option("--curve", rc.curve, "tabulated base-set curve (d = 2)");
  auto* verify = app.add_subcommand("verify", "verify a numeric curve against its law");
  common(verify, true);
  auto* renewal = app.add_subcommand("renewal", "renewal equation tools");
  renewal->require_subcommand(1);
  auto* reval = renewal->add_subcommand("eval", "evaluate a renewal fixture");
  reval->add_option("fixture", fixture, "renewal fixture JSON")->required()->check(CLI::ExistingFile);
  common(reval, false);
  reval->add_option("--z", rc.z, "linear z grid start:stop:points or list");
  auto* sample = app.add_subcommand("sample", "draw S_1 samples");
  common(sample, false);
  auto* mc2d = app.add_subcommand("mc2d", "Monte Carlo heat content of planar domains");
  common(mc2d, true);
  mc2d->add_option("--depth", rc.depth, "domain truncation depth");
  mc2d->add_option("--dt", rc.dt, "smallest time step");
  mc2d->add_option("--rel-dt", rc.rel_dt, "step growth relative to elapsed time (0 = fixed)");
  mc2d->add_flag("--no-bridge", rc.no_bridge, "disable the bridge crossing test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << nlohmann::json{{"error", "InvalidArgument"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  std::ofstream file;
  std::ostream* sink = &out;
  if (!rc.out.empty()) {
    file.open(rc.out);
    if (!file) {
      err << nlohmann::json{{"error", "InvalidArgument"}, {"message", "cannot open " + rc.out}}.dump() << '\n';
      return 1;
    }
    sink = &file;
  }
  try {
    if (dim->parsed()) return detail::cmd_dim(rc, *sink);
    if (measure->parsed()) return detail::cmd_measure(rc, *sink);
    if (q2->parsed()) return detail::cmd_q2(rc, *sink, err);
    if (shc->parsed()) return detail::cmd_shc(rc, *sink, err);
    if (law->parsed()) return detail::cmd_law(rc, *sink);
    if (verify->parsed()) return detail::cmd_verify(rc, *sink);
    if (reval->parsed()) return detail::cmd_renewal_eval(fixture, rc, *sink);
    if (sample->parsed()) return detail::cmd_sample(rc, *sink);
    if (mc2d->parsed()) return detail::cmd_mc2d(rc, *sink);
  } catch (const Error& e) {
    err << e.to_json().dump() << '\n';
    return detail::exit_code(e.code());
  } catch (const std::exception& e) {
    err << nlohmann::json{{"error", "InvalidArgument"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace fshc::cli
