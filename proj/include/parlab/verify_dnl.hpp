#pragma once

// Checkers for the doubly non-linear estimates: empirical Harnack ratio,
// intrinsic gradient/Lipschitz/Hölder constants, extinction-time decay and
// compact-subset gradient bounds.

#include <random>
#include <span>
#include <vector>

#include "parlab/dnl.hpp"
#include "parlab/report.hpp"
#include "parlab/verify.hpp"

namespace parlab {

// gamma_hat = max(sup u / u0, u0 / inf u) over the intrinsic cylinder at z_o.
inline EstimateReport empirical_harnack(const SpaceTimeField& u, const Point& z_o, double rho,
                                        double p, double q, double tol = 1e-12) {
  const Grid& g = u.grid();
  int node = g.nearest_node(z_o.x);
  int lvl = g.nearest_level(z_o.t);
  double u0 = u.value(lvl, node);
  if (!(u0 > tol)) throw std::invalid_argument("empirical_harnack: u(z_o) not positive");
  Cylinder Q = dnl_intrinsic_cylinder(z_o, rho, u0, p, q);
  if (!cylinder_inside_grid(g, Q))
    throw std::invalid_argument("empirical_harnack: cylinder exceeds domain");
  NodeSet set = cylinder_nodes(g, Q);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int m : set.levels)
    for (int nd : set.nodes) {
      double v = u.value(m, nd);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  double gamma = std::max(hi / u0, lo > 0 ? u0 / lo : std::numeric_limits<double>::infinity());
  EstimateReport r;
  r.name = "empirical_harnack";
  r.anchor = "harnack-ratio";
  r.lhs = gamma;
  r.rhs_kernel = 1.0;
  r.implied_constant = gamma;
  r.params = {{"p", p}, {"q", q}, {"rho", rho}, {"u0", u0}, {"sup", hi}, {"inf", lo}};
  r.grid_descriptor = describe(g);
  r.status = CheckStatus::report_only;  // the constant has no in-repo budget
  return r;
}

struct DnlRegularityReports {
  EstimateReport gradient;
  EstimateReport lipschitz;
  EstimateReport holder;
};

// Intrinsic-geometry constants at z_o with u0 = u(z_o):
//   C_grad = sup_{Q_o} |grad u| rho / u0,
//   C_lip  = max |u(z1)-u(z2)| / (u0 [ |dx|/rho + sqrt(|dt| / (u0^{q+1-p} rho^p)) ]),
//   C_hol and alpha from the fit of gradient differences against that modulus.
// Requires the gamma-enlarged cylinder inside the domain.
inline DnlRegularityReports check_dnl_regularity(const SpaceTimeField& u, const Point& z_o,
                                                 double rho, double p, double q,
                                                 double gamma_tilde = 8.0, uint64_t seed = 42,
                                                 size_t max_pairs = 40000, double tol = 1e-12) {
  const Grid& g = u.grid();
  int node0 = g.nearest_node(z_o.x);
  int lvl0 = g.nearest_level(z_o.t);
  double u0 = u.value(lvl0, node0);
  if (!(u0 > tol)) throw std::invalid_argument("check_dnl_regularity: u(z_o) not positive");
  Cylinder big = dnl_intrinsic_cylinder(z_o, gamma_tilde * rho, u0, p, q);
  if (!cylinder_inside_grid(g, big))
    throw std::invalid_argument("check_dnl_regularity: enlarged cylinder exceeds domain");
  Cylinder Q = dnl_intrinsic_cylinder(z_o, rho, u0, p, q);
  NodeSet set = cylinder_nodes(g, Q);

  GradientCache cache(u);
  int d = g.dim;
  double sup_grad = 0;
  for (int m : set.levels) {
    const std::vector<double>& du = cache.level(m);
    for (int nd : set.nodes) {
      double s = 0;
      for (int j = 0; j < d; ++j) s += du[static_cast<size_t>(nd) * d + j] * du[static_cast<size_t>(nd) * d + j];
      sup_grad = std::max(sup_grad, s);
    }
  }
  sup_grad = std::sqrt(sup_grad);

  double t_scale = std::pow(u0, q + 1.0 - p) * std::pow(rho, p);
  auto modulus = [&](int n1, int m1, int n2, int m2) {
    double dx = (g.node_coord(n1) - g.node_coord(n2)).norm();
    double dt = std::abs(g.time(m1) - g.time(m2));
    return dx / rho + std::sqrt(dt / t_scale);
  };

  // sampled node/level pairs inside Q
  std::vector<std::pair<std::pair<int, int>, std::pair<int, int>>> pairs;
  size_t total = set.nodes.size() * set.levels.size();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, total - 1);
  auto unpack = [&](size_t idx) {
    return std::pair<int, int>{set.nodes[idx % set.nodes.size()],
                               set.levels[idx / set.nodes.size()]};
  };
  size_t want = std::min(max_pairs, total * (total - 1) / 2);
  if (total * (total - 1) / 2 <= max_pairs) {
    for (size_t a = 0; a < total; ++a)
      for (size_t b = a + 1; b < total; ++b) pairs.emplace_back(unpack(a), unpack(b));
  } else {
    while (pairs.size() < want) {
      size_t a = pick(rng), b = pick(rng);
      if (a != b) pairs.emplace_back(unpack(a), unpack(b));
    }
  }

  double c_lip = 0;
  std::vector<double> xs, ys;
  double min_mod = 2.0 * std::max(g.h_max() / rho, std::sqrt(g.dt / t_scale));
  for (const auto& [za, zb] : pairs) {
    auto [n1, m1] = za;
    auto [n2, m2] = zb;
    double mod = modulus(n1, m1, n2, m2);
    if (mod <= 0) continue;
    double dv = std::abs(u.value(m1, n1) - u.value(m2, n2));
    c_lip = std::max(c_lip, dv / (u0 * mod));
    if (mod < min_mod) continue;
    const std::vector<double>& dua = cache.level(m1);
    const std::vector<double>& dub = cache.level(m2);
    double s = 0;
    for (int j = 0; j < d; ++j) {
      double diff = dua[static_cast<size_t>(n1) * d + j] - dub[static_cast<size_t>(n2) * d + j];
      s += diff * diff;
    }
    double dg = std::sqrt(s);
    if (dg > 1e-14 * std::max(1.0, sup_grad)) {
      xs.push_back(mod);
      ys.push_back(dg);
    }
  }

  DnlRegularityReports out;
  out.gradient.name = "dnl_gradient_bound";
  out.gradient.anchor = "dnl-intrinsic-gradient";
  out.gradient.lhs = sup_grad;
  out.gradient.rhs_kernel = u0 / rho;
  out.gradient.implied_constant = implied(sup_grad, u0 / rho);
  out.gradient.params = {{"p", p}, {"q", q}, {"rho", rho}, {"u0", u0}};
  out.gradient.grid_descriptor = describe(g);
  out.gradient.status = CheckStatus::report_only;

  out.lipschitz = out.gradient;
  out.lipschitz.name = "dnl_lipschitz";
  out.lipschitz.anchor = "dnl-intrinsic-lipschitz";
  out.lipschitz.lhs = c_lip * u0;
  out.lipschitz.rhs_kernel = u0;
  out.lipschitz.implied_constant = c_lip;

  out.holder = out.gradient;
  out.holder.name = "dnl_gradient_holder";
  out.holder.anchor = "dnl-intrinsic-gradient-holder";
  if (xs.size() >= 30) {
    double alpha_hat = loglog_slope(xs, ys);
    double c_hol = 0;
    for (size_t i = 0; i < xs.size(); ++i)
      c_hol = std::max(c_hol, ys[i] / ((u0 / rho) * std::pow(xs[i], alpha_hat)));
    out.holder.exponents["alpha_o"] = alpha_hat;
    out.holder.implied_constant = c_hol;
    out.holder.lhs = ys.back();
    out.holder.rhs_kernel = u0 / rho;
  } else {
    out.holder.status = CheckStatus::skipped;
    out.holder.note = "too few pairs with distinguishable gradients";
  }
  return out;
}

// The four decay estimates at an interior point close to the extinction time:
// value, gradient, oscillation of u and oscillation of grad u, all against
// [(T - t_o)/d(x_o)^p]^{1/(q+1-p)} kernels.
inline std::vector<EstimateReport> check_extinction_decay(const SpaceTimeField& u, double T_num,
                                                          const SpaceVec& x_o, double t_o,
                                                          double r, double p, double q,
                                                          double alpha_o) {
  const Grid& g = u.grid();
  if (!(t_o > 0.5 * T_num) || !(t_o < T_num))
    throw std::invalid_argument("extinction_decay: t_o must lie in (T/2, T)");
  double dist = std::numeric_limits<double>::infinity();
  for (int a = 0; a < g.dim; ++a) {
    dist = std::min(dist, x_o[a] - g.lo[static_cast<size_t>(a)]);
    dist = std::min(dist, g.hi[static_cast<size_t>(a)] - x_o[a]);
  }
  if (!(dist > 0)) throw std::invalid_argument("extinction_decay: x_o on the boundary");
  int node = g.nearest_node(x_o);
  int lvl = g.nearest_level(t_o);
  double kernel = std::pow((T_num - t_o) / std::pow(dist, p), 1.0 / (q + 1.0 - p));

  std::vector<double> du = gradient(u, lvl);
  int d = g.dim;
  double grad0 = 0;
  for (int j = 0; j < d; ++j) grad0 += du[static_cast<size_t>(node) * d + j] * du[static_cast<size_t>(node) * d + j];
  grad0 = std::sqrt(grad0);

  std::vector<int> cube = region_nodes(g, x_o, r, CrossSection::cube);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::vector<double> grad_pts;
  for (int nd : cube) {
    double v = u.value(lvl, nd);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    for (int j = 0; j < d; ++j) grad_pts.push_back(du[static_cast<size_t>(nd) * d + j]);
  }
  double osc_u = hi - lo;
  double osc_grad = diameter(grad_pts, d);

  auto mk = [&](const std::string& name, const std::string& anchor, double lhs, double rhs) {
    EstimateReport rep;
    rep.name = name;
    rep.anchor = anchor;
    rep.lhs = lhs;
    rep.rhs_kernel = rhs;
    rep.implied_constant = implied(lhs, rhs);
    rep.params = {{"p", p}, {"q", q}, {"T", T_num}, {"t_o", t_o}, {"r", r}, {"d", dist}};
    rep.grid_descriptor = describe(g);
    rep.status = CheckStatus::report_only;
    return rep;
  };
  std::vector<EstimateReport> out;
  out.push_back(mk("extinction_value", "extinction-value-decay", u.value(lvl, node), kernel));
  out.push_back(mk("extinction_gradient", "extinction-gradient-decay", grad0, kernel / dist));
  out.push_back(mk("extinction_osc_u", "extinction-osc-decay", osc_u, (r / dist) * kernel));
  out.push_back(mk("extinction_osc_grad", "extinction-osc-gradient-decay", osc_grad,
                   std::pow(r / dist, alpha_o) * kernel / dist));
  return out;
}

struct CompactBoundsReports {
  EstimateReport gradient;
  EstimateReport holder;
};

// Gradient bounds on a compact subset K in terms of M = max{1, sup_K u} and
// the boundary distance rho_o measured with the p-th root of time gaps.
inline CompactBoundsReports check_compact_bounds(const SpaceTimeField& u, std::span<const Point> K,
                                                 double p, double q, uint64_t seed = 42,
                                                 size_t max_pairs = 40000) {
  const Grid& g = u.grid();
  double rho_o = boundary_distance(K, g, 1.0 / p);
  if (!(rho_o > 0)) throw std::invalid_argument("check_compact_bounds: K touches the boundary");
  GradientCache cache(u);
  int d = g.dim;
  double sup_u = 0, sup_grad = 0;
  for (const Point& z : K) {
    int node = g.nearest_node(z.x);
    int m = g.nearest_level(z.t);
    sup_u = std::max(sup_u, u.value(m, node));
    const std::vector<double>& du = cache.level(m);
    double s = 0;
    for (int j = 0; j < d; ++j) s += du[static_cast<size_t>(node) * d + j] * du[static_cast<size_t>(node) * d + j];
    sup_grad = std::max(sup_grad, std::sqrt(s));
  }
  double M = std::max(1.0, sup_u);

  CompactBoundsReports out;
  out.gradient.name = "compact_gradient_bound";
  out.gradient.anchor = "compact-gradient";
  out.gradient.lhs = sup_grad;
  out.gradient.rhs_kernel = std::pow(M, (q + 1.0) / p) / rho_o;
  out.gradient.implied_constant = implied(sup_grad, out.gradient.rhs_kernel);
  out.gradient.params = {{"p", p}, {"q", q}, {"rho_o", rho_o}, {"M", M}};
  out.gradient.grid_descriptor = describe(g);
  out.gradient.status = CheckStatus::report_only;

  // Hölder variant with the M-weighted spatial modulus
  std::vector<double> xs, ys;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, K.size() - 1);
  size_t all = K.size() * (K.size() - 1) / 2;
  auto push_pair = [&](size_t a, size_t b) {
    double dx = (K[a].x - K[b].x).norm();
    double dt = std::abs(K[a].t - K[b].t);
    double mod = std::pow(M, (q + 1.0 - p) / p) * dx / rho_o + std::sqrt(dt / std::pow(rho_o, p));
    if (mod < 2.0 * g.h_max() / rho_o) return;
    const std::vector<double>& dua = cache.level(g.nearest_level(K[a].t));
    const std::vector<double>& dub = cache.level(g.nearest_level(K[b].t));
    int na = g.nearest_node(K[a].x), nb = g.nearest_node(K[b].x);
    double s = 0;
    for (int j = 0; j < d; ++j) {
      double diff = dua[static_cast<size_t>(na) * d + j] - dub[static_cast<size_t>(nb) * d + j];
      s += diff * diff;
    }
    double dg = std::sqrt(s);
    if (dg > 1e-14 * std::max(1.0, sup_grad)) {
      xs.push_back(mod);
      ys.push_back(dg);
    }
  };
  if (all <= max_pairs) {
    for (size_t a = 0; a < K.size(); ++a)
      for (size_t b = a + 1; b < K.size(); ++b) push_pair(a, b);
  } else {
    for (size_t it = 0; it < max_pairs; ++it) {
      size_t a = pick(rng), b = pick(rng);
      if (a != b) push_pair(a, b);
    }
  }
  out.holder = out.gradient;
  out.holder.name = "compact_gradient_holder";
  out.holder.anchor = "compact-gradient-holder";
  if (xs.size() >= 30) {
    double alpha1 = loglog_slope(xs, ys);
    double c_hol = 0;
    for (size_t i = 0; i < xs.size(); ++i)
      c_hol = std::max(c_hol, ys[i] / (out.gradient.rhs_kernel * std::pow(xs[i], alpha1)));
    out.holder.exponents["alpha_1"] = alpha1;
    out.holder.implied_constant = c_hol;
  } else {
    out.holder.status = CheckStatus::skipped;
    out.holder.note = "too few pairs with distinguishable gradients";
  }
  return out;
}

}  // namespace parlab
