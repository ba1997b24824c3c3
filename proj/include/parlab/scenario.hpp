#pragma once

// Experiment runner: parses flat key/value configs with dotted section names,
// builds problems, solves, runs the selected checkers and writes JSON/CSV
// report files. `study` reruns a scenario under (h, dt)/2^l refinement and
// fits convergence slopes.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "parlab/dnl.hpp"
#include "parlab/expression.hpp"
#include "parlab/field_io.hpp"
#include "parlab/plaplace.hpp"
#include "parlab/report.hpp"
#include "parlab/verify.hpp"
#include "parlab/verify_dnl.hpp"

namespace parlab {

struct ConfigError : std::runtime_error {
  int line;
  ConfigError(const std::string& msg, int line_)
      : std::runtime_error("config:" + std::to_string(line_) + ": " + msg), line(line_) {}
};

// Flat typed key/value store; keys keep their source line for error anchors.
class Config {
 public:
  static Config parse_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      auto trim = [](std::string s) {
        size_t a = s.find_first_not_of(" \t\r");
        size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      std::string t = trim(line);
      if (t.empty()) continue;
      size_t eq = t.find('=');
      if (eq == std::string::npos) throw ConfigError("expected 'key = value'", lineno);
      std::string key = trim(t.substr(0, eq));
      std::string value = trim(t.substr(eq + 1));
      if (key.empty()) throw ConfigError("empty key", lineno);
      if (cfg.entries_.count(key)) throw ConfigError("duplicate key '" + key + "'", lineno);
      cfg.entries_[key] = {value, lineno};
      cfg.order_.push_back(key);
    }
    return cfg;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open '" + path + "'", 0);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_string(ss.str());
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::string get_string(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'", 0);
    used_.insert(key);
    return it->second.first;
  }
  std::string get_string(const std::string& key, const std::string& dflt) const {
    return has(key) ? get_string(key) : dflt;
  }

  double get_double(const std::string& key) const {
    std::string v = get_string(key);
    try {
      size_t used = 0;
      double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument("");
      return d;
    } catch (...) {
      throw ConfigError("key '" + key + "' expects a number, got '" + v + "'", line_of(key));
    }
  }
  double get_double(const std::string& key, double dflt) const {
    return has(key) ? get_double(key) : dflt;
  }

  int get_int(const std::string& key) const {
    double d = get_double(key);
    int i = static_cast<int>(std::lround(d));
    if (std::abs(d - i) > 1e-9) throw ConfigError("key '" + key + "' expects an integer", line_of(key));
    return i;
  }
  int get_int(const std::string& key, int dflt) const { return has(key) ? get_int(key) : dflt; }

  std::vector<double> get_list(const std::string& key) const {
    std::string v = get_string(key);
    std::vector<double> out;
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        out.push_back(std::stod(item));
      } catch (...) {
        throw ConfigError("key '" + key + "' expects a comma list of numbers", line_of(key));
      }
    }
    return out;
  }

  std::vector<std::string> get_names(const std::string& key) const {
    std::string v = get_string(key, "");
    used_.insert(key);
    std::vector<std::string> out;
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      size_t a = item.find_first_not_of(" \t");
      size_t b = item.find_last_not_of(" \t");
      if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
    }
    return out;
  }

  int line_of(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.second;
  }

  // Normalized echo; reparsing it yields an identical configuration.
  std::string echo() const {
    std::ostringstream os;
    for (const std::string& key : order_) os << key << " = " << entries_.at(key).first << "\n";
    return os.str();
  }

  // Every key must have been consumed by the schema; unknown keys are errors.
  void finish() const {
    for (const std::string& key : order_)
      if (!used_.count(key))
        throw ConfigError("unknown key '" + key + "'", entries_.at(key).second);
  }

  void override_value(const std::string& key, const std::string& value) {
    if (!entries_.count(key)) order_.push_back(key);
    entries_[key] = {value, 0};
  }

 private:
  std::map<std::string, std::pair<std::string, int>> entries_;
  std::vector<std::string> order_;
  mutable std::set<std::string> used_;
};

enum class ReportFormat { csv, json, both };

struct Scenario {
  std::string name;
  std::string kind;  // plaplace | dnl
  Grid grid;
  std::optional<PLaplaceProblem> plaplace;
  std::optional<DNLProblem> dnl;
  std::string oracle;  // empty when data is given by expressions or file
  std::function<double(const SpaceVec&, double)> exact;  // scalar oracle value
  SolverParams solver;
  std::vector<std::string> checks;
};

namespace detail {

inline SpaceVec cfg_point(const Config& cfg, const std::string& prefix, int dim,
                          double dflt0 = 0.5, double dflt1 = 0.5) {
  if (dim == 1) return SpaceVec(cfg.get_double(prefix + ".x0", dflt0));
  return SpaceVec(cfg.get_double(prefix + ".x0", dflt0), cfg.get_double(prefix + ".y0", dflt1));
}

inline CoefficientField build_coefficient(const Config& cfg, const Grid& grid) {
  std::string kind = cfg.get_string("coefficient.kind", "constant");
  if (kind == "constant") return constant_coefficient(cfg.get_double("coefficient.value", 1.0));
  if (kind == "holder_bump" || kind == "mollified") {
    double alpha = cfg.get_double("coefficient.alpha", 0.5);
    double amp = cfg.get_double("coefficient.amplitude", 0.5);
    SpaceVec x0 = cfg_point(cfg, "coefficient", grid.dim);
    CoefficientField base = holder_bump_coefficient(alpha, x0, amp, grid);
    if (kind == "mollified")
      return mollify_coefficient(base, cfg.get_double("coefficient.eps", 0.05), grid);
    return base;
  }
  throw ConfigError("unknown coefficient.kind '" + kind + "'", cfg.line_of("coefficient.kind"));
}

}  // namespace detail

inline Scenario load_scenario(const Config& cfg) {
  Scenario sc;
  sc.name = cfg.get_string("scenario.name", "scenario");
  sc.kind = cfg.get_string("problem.kind");
  if (sc.kind != "plaplace" && sc.kind != "dnl")
    throw ConfigError("problem.kind must be 'plaplace' or 'dnl'", cfg.line_of("problem.kind"));

  int dim = cfg.get_int("grid.dim");
  double lo0 = cfg.get_double("grid.lo"), hi0 = cfg.get_double("grid.hi");
  double lo1 = cfg.get_double("grid.lo1", lo0), hi1 = cfg.get_double("grid.hi1", hi0);
  int n0 = cfg.get_int("grid.n");
  int n1 = cfg.get_int("grid.n1", n0);
  double t_end = cfg.get_double("grid.t_end");
  double dt = cfg.get_double("grid.dt");
  try {
    sc.grid = dim == 1 ? make_grid_1d(lo0, hi0, n0, t_end, dt)
                       : make_grid_2d(lo0, hi0, n0, lo1, hi1, n1, t_end, dt);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), cfg.line_of("grid.n"));
  }

  sc.solver.newton_tol = cfg.get_double("solver.newton_tol", 1e-11);
  sc.solver.max_newton_iters = cfg.get_int("solver.max_iters", 60);
  sc.solver.damping = cfg.get_double("solver.damping", 1.0);
  sc.solver.eps_reg = cfg.get_double("solver.eps_reg", -1.0);

  double p = cfg.get_double("problem.p");
  std::string data_kind = cfg.get_string("data.kind", "oracle");

  std::function<double(const SpaceVec&, double)> value_fn;
  if (data_kind == "oracle") {
    std::string oracle = cfg.get_string("data.oracle");
    sc.oracle = oracle;
    if (oracle == "heat_sine") {
      value_fn = [](const SpaceVec& x, double t) { return std::exp(-t) * std::sin(x[0]); };
    } else if (oracle == "dnl_critical") {
      if (dim != 2) throw ConfigError("dnl_critical oracle needs grid.dim = 2", cfg.line_of("data.oracle"));
      CriticalSolution sol(2, p);
      double t0 = cfg.get_double("data.t0", 0.0);
      value_fn = [sol, t0](const SpaceVec& x, double t) { return sol.value(x, t + t0); };
    } else if (oracle == "dnl_borderline") {
      double t0 = cfg.get_double("data.t0", 0.5);
      double amp = cfg.get_double("data.amplitude", 1.0);
      int N = dim;
      value_fn = [amp, N, p, t0](const SpaceVec& x, double t) {
        return explicit_borderline(amp, N, p, x, t + t0);
      };
    } else if (oracle == "zero") {
      value_fn = [](const SpaceVec&, double) { return 0.0; };
    } else {
      throw ConfigError("unknown data.oracle '" + oracle + "'", cfg.line_of("data.oracle"));
    }
    sc.exact = value_fn;
  } else if (data_kind == "expression") {
    auto initial = std::make_shared<Expression>(cfg.get_string("data.initial"));
    std::shared_ptr<Expression> boundary =
        cfg.has("data.boundary") ? std::make_shared<Expression>(cfg.get_string("data.boundary"))
                                 : initial;
    value_fn = [initial, boundary](const SpaceVec& x, double t) {
      double y = x.dim == 2 ? x[1] : 0.0;
      return t == 0.0 ? initial->eval(x[0], y, 0.0) : boundary->eval(x[0], y, t);
    };
  } else if (data_kind == "file") {
    auto field = std::make_shared<SpaceTimeField>(read_field_binary(cfg.get_string("data.file")));
    value_fn = [field](const SpaceVec& x, double t) {
      std::array<double, 1> buf{};
      field->interpolate(x, t, buf);
      return buf[0];
    };
  } else {
    throw ConfigError("unknown data.kind '" + data_kind + "'", cfg.line_of("data.kind"));
  }

  if (sc.kind == "plaplace") {
    PLaplaceProblem prob;
    prob.p = p;
    prob.mu = cfg.get_double("problem.mu", 0.0);
    prob.k = cfg.get_int("problem.k", 1);
    prob.grid = sc.grid;
    prob.coeff = detail::build_coefficient(cfg, sc.grid);
    int k = prob.k;
    prob.initial = [value_fn, k](const SpaceVec& x, std::span<double> out) {
      double v = value_fn(x, 0.0);
      for (int c = 0; c < k; ++c) out[static_cast<size_t>(c)] = v / (1.0 + c);
    };
    prob.boundary = [value_fn, k](const SpaceVec& x, double t, std::span<double> out) {
      double v = value_fn(x, t);
      for (int c = 0; c < k; ++c) out[static_cast<size_t>(c)] = v / (1.0 + c);
    };
    sc.plaplace = std::move(prob);
  } else {
    DNLProblem prob;
    prob.p = p;
    prob.q = cfg.get_double("problem.q");
    prob.grid = sc.grid;
    prob.initial = [value_fn](const SpaceVec& x) { return value_fn(x, 0.0); };
    prob.boundary = value_fn;
    sc.dnl = std::move(prob);
  }

  sc.checks = cfg.get_names("checks");
  return sc;
}

namespace detail {

// Componentwise extremes of w over the parabolic boundary of its region.
inline void parabolic_boundary_extremes(const SpaceTimeField& w, const SpaceVec& center,
                                        double radius, CrossSection cs, std::vector<double>& hi,
                                        std::vector<double>& lo) {
  const Grid& g = w.grid();
  int k = w.components();
  hi.assign(static_cast<size_t>(k), -std::numeric_limits<double>::infinity());
  lo.assign(static_cast<size_t>(k), std::numeric_limits<double>::infinity());
  std::vector<int> nodes = region_nodes(g, center, radius, cs);
  std::vector<uint8_t> active(static_cast<size_t>(g.num_nodes()), 0);
  for (int node : nodes) active[static_cast<size_t>(node)] = 1;
  auto touch = [&](int m, int node) {
    for (int c = 0; c < k; ++c) {
      hi[static_cast<size_t>(c)] = std::max(hi[static_cast<size_t>(c)], w.value(m, node, c));
      lo[static_cast<size_t>(c)] = std::min(lo[static_cast<size_t>(c)], w.value(m, node, c));
    }
  };
  for (int node : nodes) touch(0, node);
  for (int node : nodes) {
    bool ring = g.is_boundary_node(node);
    if (!ring) {
      int i = g.ix(node), j = g.iy(node);
      std::vector<int> nbs = {g.node_index(i - 1, j), g.node_index(i + 1, j)};
      if (g.dim == 2) {
        nbs.push_back(g.node_index(i, j - 1));
        nbs.push_back(g.node_index(i, j + 1));
      }
      for (int nb : nbs)
        if (!active[static_cast<size_t>(nb)]) ring = true;
    }
    if (ring)
      for (int m = 0; m < g.num_levels(); ++m) touch(m, node);
  }
}

inline std::vector<Point> inset_point_cloud(const Grid& g, double inset, int per_axis,
                                            int time_samples) {
  std::vector<Point> K;
  std::array<double, 2> lo{}, hi{};
  for (int a = 0; a < g.dim; ++a) {
    double extent = g.hi[static_cast<size_t>(a)] - g.lo[static_cast<size_t>(a)];
    lo[static_cast<size_t>(a)] = g.lo[static_cast<size_t>(a)] + inset * extent;
    hi[static_cast<size_t>(a)] = g.hi[static_cast<size_t>(a)] - inset * extent;
  }
  double t_lo = g.t_end * std::max(inset, 0.2);
  for (int s = 0; s < time_samples; ++s) {
    double t = t_lo + (g.t_end - t_lo) * (s + 1.0) / time_samples;
    for (int i = 0; i < per_axis; ++i) {
      double x = lo[0] + (hi[0] - lo[0]) * i / std::max(1, per_axis - 1);
      if (g.dim == 1) {
        K.emplace_back(x, t);
      } else {
        for (int j = 0; j < per_axis; ++j)
          K.emplace_back(x, lo[1] + (hi[1] - lo[1]) * j / std::max(1, per_axis - 1), t);
      }
    }
  }
  return K;
}

struct CheckContext {
  const Scenario& sc;
  const Config& cfg;
  const SolveResult& solution;
  uint64_t seed;
};

inline EstimateReport run_oracle_error(const CheckContext& ctx, const std::string& id) {
  const Config& cfg = ctx.cfg;
  if (!ctx.sc.exact) throw ConfigError("check '" + id + "' requires oracle data", 0);
  double tol = cfg.get_double("check." + id + ".tolerance", 1e-3);
  bool relative = cfg.get_int("check." + id + ".relative", 0) != 0;
  const SpaceTimeField& u = ctx.solution.field;
  const Grid& g = u.grid();
  double err = 0, scale = 0;
  for (int m = 0; m < g.num_levels(); ++m)
    for (int node = 0; node < g.num_nodes(); ++node) {
      double exact = ctx.sc.exact(g.node_coord(node), g.time(m));
      err = std::max(err, std::abs(u.value(m, node) - exact));
      scale = std::max(scale, std::abs(exact));
    }
  EstimateReport r;
  r.name = "oracle_error";
  r.anchor = "solver-vs-closed-form";
  r.lhs = relative && scale > 0 ? err / scale : err;
  r.rhs_kernel = 1.0;
  r.implied_constant = r.lhs;
  r.params = {{"relative", relative ? 1.0 : 0.0}, {"scale", scale}};
  r.grid_descriptor = describe(g);
  r.budget = tol;
  r.status = r.lhs <= tol ? CheckStatus::pass : CheckStatus::fail;
  return r;
}

inline void run_one_check(const CheckContext& ctx, const std::string& id,
                          std::vector<EstimateReport>& out) {
  const Config& cfg = ctx.cfg;
  const Scenario& sc = ctx.sc;
  const Grid& g = sc.grid;
  std::string key = "check." + id + ".";
  std::string type = cfg.get_string(key + "type", id);
  auto cylinder_from_cfg = [&](double dflt_radius, double dflt_duration) {
    SpaceVec x0 = cfg_point(cfg, "check." + id, g.dim);
    double t0 = cfg.get_double(key + "t0", 0.75 * g.t_end);
    double radius = cfg.get_double(key + "radius", dflt_radius);
    double duration = cfg.get_double(key + "duration", dflt_duration);
    return standard_cylinder(Point(x0, t0), radius, duration);
  };

  if (type == "oracle_error") {
    out.push_back(run_oracle_error(ctx, id));
    return;
  }

  if (type == "comparison_principle" || type == "osc_comparison" || type == "campanato") {
    if (!sc.plaplace) throw ConfigError("check '" + id + "' needs a plaplace scenario", 0);
    Cylinder Q = cylinder_from_cfg(0.3, 0.09);
    PLaplaceProblem frozen = freeze_coefficients(*sc.plaplace, ctx.solution.field, Q.center.x, Q);
    SolveResult wres = solve_cauchy_dirichlet(frozen, sc.solver);
    if (type == "comparison_principle") {
      std::vector<double> hi, lo;
      parabolic_boundary_extremes(wres.field, Q.center.x, Q.radius, Q.cross_section, hi, lo);
      double budget = cfg.get_double(key + "budget", 1e-8);
      EstimateReport r = check_comparison_principle(wres.field, Q.center.x, Q.radius,
                                                    Q.cross_section, hi, lo, budget);
      r.name = id;
      out.push_back(r);
    } else if (type == "osc_comparison") {
      double budget = cfg.get_double(key + "budget", 1e-6);
      EstimateReport r =
          check_osc_comparison(ctx.solution.field, wres.field, Q, wres.level_offset, budget);
      r.name = id;
      out.push_back(r);
    } else {
      const Grid& wg = wres.field.grid();
      double t_top = cfg.get_double(key + "t_top", wg.t_end - 2 * wg.dt);
      double r_frak = cfg.get_double(key + "r_frak", Q.radius / 3.0);
      std::vector<double> taus = cfg.has(key + "taus")
                                     ? cfg.get_list(key + "taus")
                                     : std::vector<double>{r_frak, r_frak / 2, r_frak / 4};
      NodeSet probe = cylinder_nodes(
          wg, standard_cylinder(Point(Q.center.x, t_top), 2 * r_frak, std::pow(2 * r_frak, 2)));
      double sup_dw = sup_gradient_magnitude(wres.field, probe);
      double mu = sc.plaplace->mu;
      double lambda = std::max(std::sqrt(mu * mu + sup_dw * sup_dw), 1e-8);
      EstimateReport r = check_campanato_decay(wres.field, Point(Q.center.x, t_top), lambda,
                                               r_frak, taus, sc.plaplace->p, mu);
      r.name = id;
      out.push_back(r);
    }
    return;
  }

  if (type == "comparison_estimate") {
    if (!sc.plaplace) throw ConfigError("check '" + id + "' needs a plaplace scenario", 0);
    SpaceVec x0 = cfg_point(cfg, "check." + id, g.dim);
    double t0 = cfg.get_double(key + "t0", 0.75 * g.t_end);
    std::vector<double> radii = cfg.has(key + "radii") ? cfg.get_list(key + "radii")
                                                       : std::vector<double>{0.4, 0.2, 0.1};
    double ast = alpha_star(sc.plaplace->p, sc.plaplace->coeff.alpha);
    double budget = cfg.get_double(key + "budget", ast * sc.plaplace->p - 0.2);
    EstimateReport r = check_comparison_estimate(ctx.solution.field, *sc.plaplace, Point(x0, t0),
                                                 radii, sc.solver, budget);
    r.name = id;
    out.push_back(r);
    return;
  }

  if (type == "energy") {
    if (!sc.plaplace) throw ConfigError("check '" + id + "' needs a plaplace scenario", 0);
    SpaceVec x0 = cfg_point(cfg, "check." + id, g.dim);
    double t0 = cfg.get_double(key + "t0", 0.75 * g.t_end);
    double r_in = cfg.get_double(key + "r", 0.2);
    double s_in = cfg.get_double(key + "s", 0.05);
    double r_out = cfg.get_double(key + "R", 2 * r_in);
    double s_out = cfg.get_double(key + "S", 2 * s_in);
    Cylinder inner = standard_cylinder(Point(x0, t0), r_in, s_in);
    Cylinder outer = standard_cylinder(Point(x0, t0), r_out, s_out);
    std::vector<double> xi = cylinder_mean(ctx.solution.field, outer);
    double budget = cfg.get_double(key + "budget", 0.0);
    EstimateReport r = check_energy_estimate(ctx.solution.field, *sc.plaplace, inner, outer, xi, budget);
    r.name = id;
    out.push_back(r);
    return;
  }

  if (type == "gluing" || type == "oscillation_lemma") {
    SpaceVec x0 = cfg_point(cfg, "check." + id, g.dim);
    double radius = cfg.get_double(key + "radius", 0.3);
    double t2 = cfg.get_double(key + "t2", 0.9 * g.t_end);
    double t1 = cfg.get_double(key + "t1", 0.6 * g.t_end);
    double budget = cfg.get_double(key + "budget", 0.0);
    double p = sc.plaplace ? sc.plaplace->p : sc.dnl->p;
    double mu = sc.plaplace ? sc.plaplace->mu : 0.0;
    if (type == "gluing") {
      PLaplaceProblem dummy;
      if (sc.plaplace) dummy = *sc.plaplace;
      else {
        dummy.p = p;
        dummy.mu = 0.0;
        dummy.grid = g;
      }
      EstimateReport r = check_gluing(ctx.solution.field, dummy, x0, radius, t1, t2, budget);
      r.name = id;
      out.push_back(r);
    } else {
      EstimateReport r =
          check_oscillation_lemma(ctx.solution.field, x0, radius, t1, t2, mu, p, budget);
      r.name = id;
      out.push_back(r);
    }
    return;
  }

  if (type == "gradient_sup" || type == "holder_fit") {
    double inset = cfg.get_double(key + "inset", 0.25);
    int per_axis = cfg.get_int(key + "points", g.dim == 1 ? 40 : 12);
    int tsamples = cfg.get_int(key + "time_samples", 5);
    std::vector<Point> K = inset_point_cloud(g, inset, per_axis, tsamples);
    BoundaryDistance bd = par_boundary_distance(K, g);
    double mu = sc.plaplace ? sc.plaplace->mu : 0.0;
    double p = sc.plaplace ? sc.plaplace->p : sc.dnl->p;
    if (type == "gradient_sup") {
      double budget = cfg.get_double(key + "budget", 0.0);
      EstimateReport r = check_gradient_sup_bound(ctx.solution.field, K, bd.rho, mu, p, budget);
      r.name = id;
      out.push_back(r);
    } else {
      double osc = oscillation(ctx.solution.field, full_node_set(g));
      double lambda = osc / bd.rho + std::pow(osc / bd.rho, 2.0 / p) + mu;
      EstimateReport r = fit_holder_exponent(ctx.solution.field, K, lambda, bd.rho, p, ctx.seed);
      r.name = id;
      out.push_back(r);
    }
    return;
  }

  if (type == "moser") {
    SpaceVec x0 = cfg_point(cfg, "check." + id, g.dim);
    double t0 = cfg.get_double(key + "t0", 0.75 * g.t_end);
    double R = cfg.get_double(key + "R", 0.3);
    double S = cfg.get_double(key + "S", R * R);
    double sigma = cfg.get_double(key + "sigma", 0.5);
    double eps = cfg.get_double(key + "eps", 1.0);
    double mu = sc.plaplace ? sc.plaplace->mu : 0.0;
    double p = sc.plaplace ? sc.plaplace->p : sc.dnl->p;
    double budget = cfg.get_double(key + "budget", 0.0);
    EstimateReport r =
        check_moser_bound(ctx.solution.field, Point(x0, t0), R, S, sigma, eps, mu, p, budget);
    r.name = id;
    out.push_back(r);
    return;
  }

  if (type == "harnack" || type == "dnl_regularity") {
    if (!sc.dnl) throw ConfigError("check '" + id + "' needs a dnl scenario", 0);
    SpaceVec x0 = cfg_point(cfg, "check." + id, g.dim);
    double t0 = cfg.get_double(key + "t0", 0.5 * g.t_end);
    double rho = cfg.get_double(key + "rho", 0.1);
    if (type == "harnack") {
      EstimateReport r =
          empirical_harnack(ctx.solution.field, Point(x0, t0), rho, sc.dnl->p, sc.dnl->q);
      r.name = id;
      out.push_back(r);
    } else {
      double gamma = cfg.get_double(key + "gamma_tilde", 8.0);
      DnlRegularityReports r = check_dnl_regularity(ctx.solution.field, Point(x0, t0), rho,
                                                    sc.dnl->p, sc.dnl->q, gamma, ctx.seed);
      out.push_back(r.gradient);
      out.push_back(r.lipschitz);
      out.push_back(r.holder);
    }
    return;
  }

  if (type == "extinction") {
    if (!sc.dnl) throw ConfigError("check '" + id + "' needs a dnl scenario", 0);
    double p = sc.dnl->p, q = sc.dnl->q;
    int N = g.dim;
    double c_sob = cfg.get_double(key + "c_sob",
                                  N == 1 ? sobolev_constant_1d() : sobolev_constant_sharp(N, p));
    double tol = cfg.get_double(key + "tol", default_extinction_tol(g));
    double env_tol = cfg.get_double(key + "envelope_tol", 1e-6);
    const SpaceTimeField& u = ctx.solution.field;
    double measure = 1.0;
    for (int a = 0; a < g.dim; ++a) measure *= g.hi[static_cast<size_t>(a)] - g.lo[static_cast<size_t>(a)];
    double v0 = lq1_norm_power(u, 0, q);
    double norm_q1 = std::pow(v0, 1.0 / (q + 1.0));
    std::vector<double> du0 = gradient(u, 0);
    double cell = cell_volume(g);
    double gradp = 0;
    for (int node = 0; node < g.num_nodes(); ++node) {
      double s = 0;
      for (int a = 0; a < g.dim; ++a) {
        double v = du0[static_cast<size_t>(node) * g.dim + a];
        s += v * v;
      }
      gradp += std::pow(s, 0.5 * p) * cell;
    }
    ExtinctionRecord rec =
        extinction_bounds(measure, norm_q1, std::pow(gradp, 1.0 / p), N, p, q, c_sob);
    rec.t_num = detect_extinction(u, tol);

    EstimateReport sandwich;
    sandwich.name = id;
    sandwich.anchor = "extinction-sandwich";
    sandwich.lhs = rec.t_num.value_or(-1.0);
    sandwich.rhs_kernel = rec.t_upper;
    sandwich.implied_constant = rec.t_num ? *rec.t_num / rec.t_upper : -1.0;
    sandwich.params = {{"t_lower", rec.t_lower}, {"t_upper", rec.t_upper},
                       {"c_sob", c_sob}, {"lambda_q1", rec.lambda_q1}, {"tol", tol}};
    sandwich.grid_descriptor = describe(g);
    sandwich.status = rec.t_num && *rec.t_num >= rec.t_lower && *rec.t_num <= rec.t_upper
                          ? CheckStatus::pass
                          : CheckStatus::fail;
    out.push_back(sandwich);

    double rate = lq_envelope_rate(measure, N, p, q, c_sob);
    double worst_gap = -std::numeric_limits<double>::infinity();
    bool monotone = true;
    double prev = std::numeric_limits<double>::infinity();
    for (int m = 0; m < g.num_levels(); ++m) {
      double norm = lq1_norm_power(u, m, q);
      worst_gap = std::max(worst_gap, norm - lq_envelope(g.time(m), v0, rate, p, q));
      if (norm > prev * (1 + 1e-12)) monotone = false;
      prev = norm;
    }
    EstimateReport envelope;
    envelope.name = id + "_envelope";
    envelope.anchor = "lq-envelope-domination";
    envelope.lhs = worst_gap;
    envelope.rhs_kernel = env_tol;
    envelope.implied_constant = worst_gap;
    envelope.params = {{"rate", rate}, {"v0", v0}, {"monotone", monotone ? 1.0 : 0.0}};
    envelope.grid_descriptor = describe(g);
    envelope.budget = env_tol;
    envelope.status = worst_gap <= env_tol && monotone ? CheckStatus::pass : CheckStatus::fail;
    out.push_back(envelope);
    return;
  }

  if (type == "extinction_decay") {
    if (!sc.dnl) throw ConfigError("check '" + id + "' needs a dnl scenario", 0);
    double tol = cfg.get_double(key + "tol", default_extinction_tol(g));
    auto t_num = detect_extinction(ctx.solution.field, tol);
    if (!t_num) throw ConfigError("check '" + id + "': run never goes extinct", 0);
    double t_frac = cfg.get_double(key + "t_frac", 0.75);
    SpaceVec x0 = cfg_point(cfg, "check." + id, g.dim);
    double r = cfg.get_double(key + "r", 0.1);
    double alpha_o = cfg.get_double(key + "alpha_o", 0.5);
    std::vector<EstimateReport> reports = check_extinction_decay(
        ctx.solution.field, *t_num, x0, t_frac * *t_num, r, sc.dnl->p, sc.dnl->q, alpha_o);
    for (auto& rep : reports) out.push_back(rep);
    return;
  }

  if (type == "compact_bounds") {
    if (!sc.dnl) throw ConfigError("check '" + id + "' needs a dnl scenario", 0);
    double inset = cfg.get_double(key + "inset", 0.25);
    int per_axis = cfg.get_int(key + "points", g.dim == 1 ? 20 : 8);
    std::vector<Point> K = inset_point_cloud(g, inset, per_axis, 4);
    CompactBoundsReports r = check_compact_bounds(ctx.solution.field, K, sc.dnl->p, sc.dnl->q, ctx.seed);
    out.push_back(r.gradient);
    out.push_back(r.holder);
    return;
  }

  throw ConfigError("unknown check type '" + type + "' for check '" + id + "'", 0);
}

}  // namespace detail

struct RunResult {
  std::vector<EstimateReport> reports;
  bool all_passed = true;
  std::optional<SpaceTimeField> field;
};

// Solves the scenario and runs its checkers. Throws ConfigError on schema
// violations and SolverFailure when a solve diverges.
inline RunResult run_scenario(const Config& cfg, const std::string& out_dir = "",
                              ReportFormat format = ReportFormat::both, uint64_t seed = 42,
                              bool export_fields = false) {
  Scenario sc = load_scenario(cfg);
  RunResult result;
  SolveResult solved = sc.plaplace ? solve_cauchy_dirichlet(*sc.plaplace, sc.solver)
                                   : solve_dnl(*sc.dnl, sc.solver);
  detail::CheckContext ctx{sc, cfg, solved, seed};
  for (const std::string& id : sc.checks) detail::run_one_check(ctx, id, result.reports);
  std::string prefix = cfg.get_string("output.prefix", sc.name);
  cfg.finish();
  for (const EstimateReport& r : result.reports)
    if (!r.passed()) result.all_passed = false;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::string base = out_dir + "/" + prefix;
    if (format != ReportFormat::csv) write_reports_json(base + ".reports.json", result.reports);
    if (format != ReportFormat::json) write_reports_csv(base + ".reports.csv", result.reports);
    if (export_fields) {
      write_field_binary(base + ".field.bin", solved.field);
      export_slice_csv(base + ".final.csv", solved.field, solved.field.grid().num_levels() - 1);
    }
  }
  result.field = std::move(solved.field);
  return result;
}

// Reruns the scenario at (h, dt)/2^l for l = 0..levels-1 and appends fitted
// convergence slopes for the oracle-error checkers plus stability ratios for
// every implied constant.
inline RunResult study_scenario(const Config& cfg, int levels, const std::string& out_dir = "",
                                ReportFormat format = ReportFormat::both, uint64_t seed = 42) {
  if (levels < 1) throw ConfigError("study: levels must be >= 1", 0);
  Scenario probe = load_scenario(cfg);  // validate once up front
  (void)probe;
  int n0 = cfg.get_int("grid.n");
  int n1 = cfg.get_int("grid.n1", n0);
  double dt = cfg.get_double("grid.dt");
  constexpr int kMaxNodesPerAxis = 1 << 20;
  long finest = static_cast<long>(std::max(n0, n1) - 1) * (1L << (levels - 1)) + 1;
  if (finest > kMaxNodesPerAxis)
    throw ConfigError("study: refinement level " + std::to_string(levels) +
                          " exceeds the supported grid size",
                      cfg.line_of("grid.n"));

  RunResult combined;
  std::vector<double> hs;
  std::map<std::string, std::vector<double>> errors;     // oracle-error lhs per level
  std::map<std::string, std::vector<double>> constants;  // implied constants per level
  for (int lvl = 0; lvl < levels; ++lvl) {
    Config leveled = cfg;
    leveled.override_value("grid.n", std::to_string((n0 - 1) * (1 << lvl) + 1));
    leveled.override_value("grid.n1", std::to_string((n1 - 1) * (1 << lvl) + 1));
    std::ostringstream dts;
    dts << std::setprecision(17) << dt / (1 << lvl);
    leveled.override_value("grid.dt", dts.str());
    RunResult level_result = run_scenario(leveled, "", ReportFormat::both, seed, false);
    Scenario lsc = load_scenario(leveled);
    hs.push_back(lsc.grid.h_max());
    for (EstimateReport& r : level_result.reports) {
      r.params["study_level"] = lvl;
      if (r.name == "oracle_error" || r.anchor == "solver-vs-closed-form")
        errors[r.name].push_back(r.lhs);
      if (std::isfinite(r.implied_constant) && r.implied_constant > 0)
        constants[r.name + "/" + r.anchor].push_back(r.implied_constant);
      combined.reports.push_back(r);
      if (!r.passed()) combined.all_passed = false;
    }
  }
  for (const auto& [name, errs] : errors) {
    if (errs.size() < 2) continue;
    EstimateReport slope;
    slope.name = name + "_order";
    slope.anchor = "study-convergence-order";
    slope.exponents["order"] = loglog_slope(hs, errs);
    slope.lhs = errs.back();
    slope.rhs_kernel = hs.back();
    slope.implied_constant = errs.back() / (hs.back() * hs.back());
    slope.grid_descriptor = "study levels=" + std::to_string(levels);
    slope.status = CheckStatus::report_only;
    combined.reports.push_back(slope);
  }
  for (const auto& [name, vals] : constants) {
    if (vals.size() < 2) continue;
    double lo = *std::min_element(vals.begin(), vals.end());
    double hi = *std::max_element(vals.begin(), vals.end());
    EstimateReport stab;
    stab.name = name.substr(0, name.find('/')) + "_stability";
    stab.anchor = "study-refinement-stability";
    stab.lhs = hi;
    stab.rhs_kernel = lo;
    stab.implied_constant = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
    stab.grid_descriptor = "study levels=" + std::to_string(levels);
    stab.status = CheckStatus::report_only;
    combined.reports.push_back(stab);
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::string prefix = cfg.get_string("output.prefix", cfg.get_string("scenario.name", "scenario"));
    std::string base = out_dir + "/" + prefix + ".study";
    if (format != ReportFormat::csv) write_reports_json(base + ".json", combined.reports);
    if (format != ReportFormat::json) write_reports_csv(base + ".csv", combined.reports);
  }
  return combined;
}

}  // namespace parlab
