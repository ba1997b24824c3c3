#pragma once

// Doubly non-linear fast diffusion d_t u^q = div(|grad u|^{p-2} grad u):
// implicit solver, rescaling to unit cylinders, the v = u^q substitution that
// produces a p-Laplace equation with coefficients, closed-form solutions, and
// extinction-time machinery.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "parlab/coefficient.hpp"
#include "parlab/detail/stepper.hpp"
#include "parlab/field.hpp"
#include "parlab/geometry.hpp"
#include "parlab/plaplace.hpp"

namespace parlab {

struct DNLProblem {
  double p = 2.0;
  double q = 2.0;  // fast diffusion: q > p - 1 > 0
  Grid grid;
  std::function<double(const SpaceVec&)> initial;          // u_o >= 0
  std::function<double(const SpaceVec&, double)> boundary;  // >= 0

  bool supercritical() const {
    int N = grid.dim;
    if (p >= N) return true;  // (N-p)_+ = 0: no upper restriction
    return q < N * (p - 1) / (N - p);
  }
};

namespace detail {

inline void validate_dnl(const DNLProblem& prob) {
  if (!(prob.p > 1)) throw std::invalid_argument("DNLProblem: p must exceed 1");
  // the borderline q = p-1 (heat equation at p=2, q=1) is admitted by the
  // solver; the extinction machinery requires the strict fast-diffusion range
  if (prob.q < prob.p - 1.0 - 1e-12) throw std::invalid_argument("DNLProblem: need q >= p - 1");
}

constexpr double kDnlFloor = 1e-12;  // lower bound for the q u^{q-1} diagonal

}  // namespace detail

// Backward Euler on u^q with Newton in u; iterates are projected onto u >= 0.
inline SolveResult solve_dnl(const DNLProblem& prob, const SolverParams& params) {
  detail::validate_dnl(prob);
  const Grid& g = prob.grid;
  double q = prob.q;
  detail::TimeTerm tt{
      [q](double v) { return std::pow(std::max(v, 0.0), q); },
      [q](double v) { return q * std::pow(std::max(v, detail::kDnlFloor), q - 1.0); }};
  double eps_reg = params.eps_reg >= 0 ? params.eps_reg : g.h_max() * g.h_max();
  std::vector<uint8_t> active(static_cast<size_t>(g.num_nodes()), 1);
  detail::Stepper stepper(g, 1, prob.p, eps_reg, std::move(active), constant_coefficient(1.0),
                          true, tt);
  std::vector<double> state(static_cast<size_t>(g.num_nodes()));
  for (int node = 0; node < g.num_nodes(); ++node) {
    state[static_cast<size_t>(node)] = prob.initial(g.node_coord(node));
    if (state[static_cast<size_t>(node)] < 0)
      throw std::invalid_argument("solve_dnl: initial data must be non-negative");
  }
  auto bdry = [&](int node, double t, std::span<double> out) {
    out[0] = prob.boundary(g.node_coord(node), t);
  };
  std::vector<double> values;
  values.reserve(static_cast<size_t>(g.num_levels()) * g.num_nodes());
  values.insert(values.end(), state.begin(), state.end());
  std::vector<int> iter_counts;
  for (int m = 1; m < g.num_levels(); ++m) {
    int iters = 0;
    state = stepper.step(state, (m - 1) * g.dt, g.dt, params, bdry, &iters);
    iter_counts.push_back(iters);
    values.insert(values.end(), state.begin(), state.end());
  }
  return SolveResult{SpaceTimeField(g, 1, std::move(values)), std::move(iter_counts), 0};
}

// u~(y,s) = u(x_o + rho y, t_o + u0^{q+1-p} rho^p s) / u0 resampled onto a
// unit cube cylinder [-1,1]^d x (-1,1) by multilinear interpolation.
inline SpaceTimeField rescale(const SpaceTimeField& u, const Point& z_o, double rho, double u0,
                              double p, double q, int n_space = 0, int n_time = 0) {
  const Grid& g = u.grid();
  Cylinder c = dnl_intrinsic_cylinder(z_o, rho, u0, p, q);
  if (!cylinder_inside_grid(g, c)) throw std::invalid_argument("rescale: cylinder outside domain");
  double t_scale = std::pow(u0, q + 1.0 - p) * std::pow(rho, p);
  if (n_space <= 0) n_space = std::max(9, 2 * static_cast<int>(std::floor(rho / g.h_max())) + 1);
  if (n_time <= 0)
    n_time = std::max(9, 2 * static_cast<int>(std::floor(t_scale / g.dt)) + 1);
  double ds = 2.0 / (n_time - 1);
  Grid unit = g.dim == 1 ? make_grid_1d(-1, 1, n_space, 2.0, ds)
                         : make_grid_2d(-1, 1, n_space, -1, 1, n_space, 2.0, ds);
  std::vector<double> vals(static_cast<size_t>(unit.num_levels()) * unit.num_nodes());
  std::array<double, 1> buf{};
  for (int m = 0; m < unit.num_levels(); ++m) {
    double s = -1.0 + m * ds;
    double t = z_o.t + t_scale * s;
    for (int node = 0; node < unit.num_nodes(); ++node) {
      SpaceVec y = unit.node_coord(node);
      SpaceVec x = z_o.x;
      for (int ax = 0; ax < g.dim; ++ax) x[ax] += rho * y[ax];
      u.interpolate(x, t, buf);
      vals[static_cast<size_t>(m) * unit.num_nodes() + node] = buf[0] / u0;
    }
  }
  return SpaceTimeField(unit, 1, std::move(vals));
}

struct CoefficientForm {
  SpaceTimeField v;       // v = u~^q
  CoefficientField a;     // (1/q)^{p-1} u~^{(p-1)(1-q)} with bounds from k_bound
  double k_bound = 1.0;   // max(sup u~, 1/inf u~)
};

// Substitution v = u~^q turning the doubly non-linear equation into a
// p-Laplace equation with measurable coefficients bounded in terms of k_bound.
inline CoefficientForm to_coefficient_form(const SpaceTimeField& ut, double p, double q) {
  const Grid& g = ut.grid();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : ut.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(lo > 0)) throw std::invalid_argument("to_coefficient_form: field must be positive");
  std::vector<double> vals(ut.data().begin(), ut.data().end());
  for (double& v : vals) v = std::pow(v, q);
  double kb = std::max(hi, 1.0 / lo);
  double front = std::pow(1.0 / q, p - 1.0);
  auto shared = std::make_shared<SpaceTimeField>(ut);
  CoefficientField a;
  a.eval = [shared, front, p, q](const SpaceVec& x, double t) {
    std::array<double, 1> buf{};
    shared->interpolate(x, t, buf);
    return front * std::pow(buf[0], (p - 1.0) * (1.0 - q));
  };
  a.c_lower = front * std::pow(kb, -(p - 1.0) * std::abs(1.0 - q));
  a.c_upper = front * std::pow(kb, (p - 1.0) * std::abs(1.0 - q));
  a.alpha = 0.5;  // nominal; the substitution only guarantees the bound box
  a.time_independent = false;
  return CoefficientForm{SpaceTimeField(g, 1, std::move(vals)), a, kb};
}

// Closed-form solution for the borderline exponent q = p - 1:
//   u = C t^{-N/(p(p-1))} exp( -((p-1)/p) (|x|^p / (p t))^{1/(p-1)} ).
inline double explicit_borderline(double c_amp, int N, double p, const SpaceVec& x, double t) {
  if (!(t > 0)) throw std::invalid_argument("explicit_borderline: t must be positive");
  if (!(p > 1)) throw std::invalid_argument("explicit_borderline: p must exceed 1");
  double r = x.norm();
  double arg = std::pow(std::pow(r, p) / (p * t), 1.0 / (p - 1.0));
  return c_amp * std::pow(t, -N / (p * (p - 1.0))) * std::exp(-(p - 1.0) / p * arg);
}

struct CriticalSolution {
  int N;
  double p, q, b;

  CriticalSolution(int N_, double p_) : N(N_), p(p_) {
    if (N < 2 || !(static_cast<double>(N) > p))
      throw std::invalid_argument("critical solution: need N >= 2 and N > p");
    q = N * (p - 1.0) / (N - p);
    // the rate that makes u an exact solution (checked by substitution):
    // radial flux divergence equals -(N(q+1)/(q(N-1))) (N/q)^{p-1} e^{bt} (.)^{-mq-1}
    b = N * (q + 1.0) / (q * (N - 1.0)) * std::pow(N / q, p - 1.0);
  }

  // u = (|x|^{N(q+1)/(q(N-1))} + e^{bt})^{-(N-1)/(q+1)}
  double value(const SpaceVec& x, double t) const {
    double r = x.norm();
    double base = std::pow(r, N * (q + 1.0) / (q * (N - 1.0))) + std::exp(b * t);
    return std::pow(base, -(N - 1.0) / (q + 1.0));
  }

  // |grad u| = (N/q) |x|^{(N+q)/(q(N-1))} / [ |x|^{N(q+1)/(q(N-1))} + e^{bt} ]^{(N+q)/(q+1)}
  double gradient_magnitude(const SpaceVec& x, double t) const {
    double r = x.norm();
    double base = std::pow(r, N * (q + 1.0) / (q * (N - 1.0))) + std::exp(b * t);
    return (N / q) * std::pow(r, (N + q) / (q * (N - 1.0))) / std::pow(base, (N + q) / (q + 1.0));
  }
};

struct ExtinctionRecord {
  std::optional<double> t_num;  // detected extinction time
  double t_upper = 0.0;
  double t_lower = 0.0;
  double sobolev_constant = 0.0;
  double lambda_q1 = 0.0;  // N(p-q-1) + p(q+1)
};

// Upper and lower extinction-time bounds for zero lateral data:
//   T <= q C^p/(q+1-p) |E|^{lambda/(N(q+1))} ||u_o||_{q+1}^{q+1-p}
//   T >= q/(q+1-p) ||u_o||_{q+1}^{q+1} / ||grad u_o||_p^p.
inline ExtinctionRecord extinction_bounds(double measure_E, double norm_u0_q1,
                                          double grad_norm_u0_p, int N, double p, double q,
                                          double c_sob) {
  if (!(p > 1) || !(q > p - 1)) throw std::invalid_argument("extinction_bounds: need q > p-1 > 0");
  if (static_cast<double>(N) > p) {
    double upper = (N * (p - 1.0) + p) / (N - p);
    if (!(q < upper)) throw std::invalid_argument("extinction_bounds: q out of the admissible range");
  }
  if (!(c_sob > 0)) throw std::invalid_argument("extinction_bounds: invalid Sobolev constant");
  ExtinctionRecord r;
  r.sobolev_constant = c_sob;
  r.lambda_q1 = N * (p - q - 1.0) + p * (q + 1.0);
  r.t_upper = q * std::pow(c_sob, p) / (q + 1.0 - p) *
              std::pow(measure_E, r.lambda_q1 / (N * (q + 1.0))) *
              std::pow(norm_u0_q1, q + 1.0 - p);
  r.t_lower = grad_norm_u0_p > 0
                  ? q / (q + 1.0 - p) * std::pow(norm_u0_q1, q + 1.0) / std::pow(grad_norm_u0_p, p)
                  : 0.0;
  return r;
}

// Envelope dominating ||u(.,t)||_{q+1}^{q+1}:
//   w(t) = v0 [ 1 - rate (q+1-p) t / ((q+1) v0^{(q+1-p)/(q+1)}) ]_+^{(q+1)/(q+1-p)}.
inline double lq_envelope(double t, double v0, double rate, double p, double q) {
  if (v0 <= 0) return 0.0;
  double bracket = 1.0 - rate * (q + 1.0 - p) * t / ((q + 1.0) * std::pow(v0, (q + 1.0 - p) / (q + 1.0)));
  if (bracket <= 0) return 0.0;
  return v0 * std::pow(bracket, (q + 1.0) / (q + 1.0 - p));
}

// Decay rate used by the envelope: (q+1) / (q C^p |E|^{lambda/(N(q+1))}).
inline double lq_envelope_rate(double measure_E, int N, double p, double q, double c_sob) {
  double lambda = N * (p - q - 1.0) + p * (q + 1.0);
  return (q + 1.0) / (q * std::pow(c_sob, p) * std::pow(measure_E, lambda / (N * (q + 1.0))));
}

// First time level with sup |u| <= tol, linearly interpolated between levels.
inline std::optional<double> detect_extinction(const SpaceTimeField& u, double tol) {
  const Grid& g = u.grid();
  double prev = u.max_abs_level(0);
  if (prev <= tol) return 0.0;
  for (int m = 1; m < g.num_levels(); ++m) {
    double cur = u.max_abs_level(m);
    if (cur <= tol) {
      double th = prev > cur ? (prev - tol) / (prev - cur) : 1.0;
      return g.time(m - 1) + th * g.dt;
    }
    prev = cur;
  }
  return std::nullopt;
}

// Default extinction tolerance: below scheme accuracy, extinction cannot be
// told apart from truncation error.
inline double default_extinction_tol(const Grid& g) {
  return 10.0 * std::max(g.h_max() * g.h_max(), g.dt);
}

// Exact constant for ||v||_inf <= C ||v'||_{L^1} over W^{1,1}_0 of an interval
// (sharp for the tent function); valid in the 1D Sobolev chain after Hölder.
inline double sobolev_constant_1d() { return 0.5; }

// Sharp constant of ||v||_{L^{p*}(R^N)} <= C ||grad v||_{L^p(R^N)}, p < N.
inline double sobolev_constant_sharp(int N, double p) {
  if (!(p < N) || !(p > 1)) throw std::invalid_argument("sobolev_constant_sharp: need 1 < p < N");
  double n = N;
  using std::tgamma;
  double factor = std::pow(M_PI, -0.5) * std::pow(n, -1.0 / p) *
                  std::pow((p - 1.0) / (n - p), 1.0 - 1.0 / p);
  double gam = tgamma(1.0 + n / 2.0) * tgamma(n) / (tgamma(n / p) * tgamma(1.0 + n - n / p));
  return factor * std::pow(gam, 1.0 / n);
}

// Discrete value of the weak-form pairing for the doubly non-linear equation,
//   int int [ -u^q d_t zeta + |grad u|^{p-2} grad u . grad zeta ],
// trapezoid in time, midpoint in space. zeta must vanish on the lateral
// boundary and at both time ends.
inline double dnl_weak_form_residual(const SpaceTimeField& u, double p, double q,
                                     const SpaceTimeField& zeta) {
  const Grid& g = u.grid();
  if (zeta.grid().num_nodes() != g.num_nodes() || zeta.grid().num_levels() != g.num_levels())
    throw std::invalid_argument("dnl_weak_form_residual: zeta shape mismatch");
  double zscale = std::max(1e-30, zeta.max_abs());
  int last = g.num_levels() - 1;
  for (int m = 0; m < g.num_levels(); ++m)
    for (int node = 0; node < g.num_nodes(); ++node) {
      if (!(g.is_boundary_node(node) || m == 0 || m == last)) continue;
      if (std::abs(zeta.value(m, node)) > 1e-10 * zscale)
        throw std::invalid_argument("dnl_weak_form_residual: zeta violates support conditions");
    }
  double cell = 1.0;
  for (int a = 0; a < g.dim; ++a) cell *= g.h(a);
  auto dt_zeta = [&](int m, int node) {
    if (m == 0)
      return (-3.0 * zeta.value(0, node) + 4.0 * zeta.value(1, node) - zeta.value(2, node)) /
             (2.0 * g.dt);
    if (m == last)
      return (3.0 * zeta.value(last, node) - 4.0 * zeta.value(last - 1, node) +
              zeta.value(last - 2, node)) /
             (2.0 * g.dt);
    return (zeta.value(m + 1, node) - zeta.value(m - 1, node)) / (2.0 * g.dt);
  };
  double acc = 0;
  int d = g.dim;
  for (int m = 0; m < g.num_levels(); ++m) {
    double wt = (m == 0 || m == last) ? 0.5 * g.dt : g.dt;
    std::vector<double> du = gradient(u, m);
    std::vector<double> dz = gradient(zeta, m);
    for (int node = 0; node < g.num_nodes(); ++node) {
      double rho2 = 0;
      for (int ax = 0; ax < d; ++ax) {
        double v = du[static_cast<size_t>(node) * d + ax];
        rho2 += v * v;
      }
      double s = rho2 > 0 ? std::pow(rho2, 0.5 * (p - 2.0)) : 0.0;
      double local = -std::pow(std::max(u.value(m, node), 0.0), q) * dt_zeta(m, node);
      for (int ax = 0; ax < d; ++ax)
        local += s * du[static_cast<size_t>(node) * d + ax] * dz[static_cast<size_t>(node) * d + ax];
      acc += wt * cell * local;
    }
  }
  return acc;
}

// Discrete ||u(.,t)||_{q+1}^{q+1} (node quadrature) at one level.
inline double lq1_norm_power(const SpaceTimeField& u, int level, double q) {
  const Grid& g = u.grid();
  double cell = 1.0;
  for (int a = 0; a < g.dim; ++a) cell *= g.h(a);
  double acc = 0;
  for (int node = 0; node < g.num_nodes(); ++node)
    acc += std::pow(std::abs(u.value(level, node)), q + 1.0);
  return acc * cell;
}

}  // namespace parlab
