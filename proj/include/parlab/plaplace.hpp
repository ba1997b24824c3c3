#pragma once

// Implicit solver for the vector-valued parabolic p-Laplace system
//   d_t u = div( a(x,t) (mu^2 + |Du|^2)^{(p-2)/2} Du ),
// the frozen-coefficient comparison problem on sub-cylinders, and the discrete
// weak-form residual.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "parlab/coefficient.hpp"
#include "parlab/detail/stepper.hpp"
#include "parlab/field.hpp"
#include "parlab/flux.hpp"
#include "parlab/geometry.hpp"

namespace parlab {

struct PLaplaceProblem {
  double p = 2.0;
  double mu = 0.0;
  int k = 1;
  Grid grid;
  CoefficientField coeff = constant_coefficient(1.0);
  std::function<void(const SpaceVec&, std::span<double>)> initial;
  std::function<void(const SpaceVec&, double, std::span<double>)> boundary;
  // When set, the solve is restricted to this cylinder with Cauchy-Dirichlet
  // data read off region_data (freeze_coefficients wires these up).
  std::optional<Cylinder> region;
  const SpaceTimeField* region_data = nullptr;
};

struct SolveResult {
  SpaceTimeField field;
  std::vector<int> newton_iters;  // per time step
  int level_offset = 0;           // parent level of this field's level 0 (region solves)
};

namespace detail {

inline double effective_regularization(const SolverParams& params, const Grid& g, double mu,
                                       double p) {
  if (params.eps_reg >= 0) return params.eps_reg;
  if (mu == 0.0 && p < 2.0) return g.h_max() * g.h_max();
  return 0.0;
}

inline void validate_plaplace(const PLaplaceProblem& prob) {
  if (!(prob.p > 1)) throw std::invalid_argument("PLaplaceProblem: p must exceed 1");
  if (prob.mu < 0 || prob.mu > 1) throw std::invalid_argument("PLaplaceProblem: mu must lie in [0,1]");
  if (prob.k < 1) throw std::invalid_argument("PLaplaceProblem: k must be >= 1");
}

}  // namespace detail

// One backward-Euler step from the given state. The state spans all nodes
// (k values each); Dirichlet data is imposed strongly at t_prev + dt.
inline std::vector<double> step_implicit(std::span<const double> state, double dt,
                                         const PLaplaceProblem& prob, const SolverParams& params,
                                         double t_prev = 0.0) {
  detail::validate_plaplace(prob);
  const Grid& g = prob.grid;
  double mu_eff = std::max(prob.mu, detail::effective_regularization(params, g, prob.mu, prob.p));
  std::vector<uint8_t> active(static_cast<size_t>(g.num_nodes()), 1);
  detail::Stepper stepper(g, prob.k, prob.p, mu_eff, std::move(active), prob.coeff, false,
                          detail::identity_time_term());
  auto bdry = [&](int node, double t, std::span<double> out) {
    prob.boundary(g.node_coord(node), t, out);
  };
  return stepper.step(state, t_prev, dt, params, bdry);
}

// Marches the implicit step to t_end (or over the problem's region cylinder).
inline SolveResult solve_cauchy_dirichlet(const PLaplaceProblem& prob, const SolverParams& params) {
  detail::validate_plaplace(prob);
  const Grid& g = prob.grid;

  if (prob.region) {
    if (!prob.region_data) throw std::invalid_argument("solve: region set without data field");
    const SpaceTimeField& u = *prob.region_data;
    const Cylinder& c = *prob.region;
    if (!cylinder_inside_grid(g, c)) throw std::invalid_argument("solve: region exceeds the domain");
    int level0 = g.nearest_level(c.t_lo());
    int level1 = g.nearest_level(c.t_hi());
    if (level1 - level0 < 1) throw std::invalid_argument("solve: region has fewer than 2 time levels");
    std::vector<int> cross = region_nodes(g, c.center.x, c.radius, c.cross_section);
    std::vector<uint8_t> active(static_cast<size_t>(g.num_nodes()), 0);
    for (int node : cross) active[static_cast<size_t>(node)] = 1;
    double mu_eff = std::max(prob.mu, detail::effective_regularization(params, g, prob.mu, prob.p));
    detail::Stepper stepper(g, prob.k, prob.p, mu_eff, active, prob.coeff, false,
                            detail::identity_time_term());
    Grid sub = g;
    sub.t_end = (level1 - level0) * g.dt;
    int k = prob.k;
    std::vector<double> values;
    values.reserve(static_cast<size_t>(level1 - level0 + 1) * g.num_nodes() * k);
    std::vector<double> state(static_cast<size_t>(g.num_nodes()) * k);
    for (int node = 0; node < g.num_nodes(); ++node)
      for (int c2 = 0; c2 < k; ++c2) state[static_cast<size_t>(node) * k + c2] = u.value(level0, node, c2);
    values.insert(values.end(), state.begin(), state.end());
    auto bdry = [&](int node, double t, std::span<double> out) {
      int lvl = level0 + static_cast<int>(std::lround(t / g.dt));
      for (int c2 = 0; c2 < k; ++c2) out[static_cast<size_t>(c2)] = u.value(lvl, node, c2);
    };
    std::vector<int> iter_counts;
    for (int m = 1; m <= level1 - level0; ++m) {
      int iters = 0;
      state = stepper.step(state, (m - 1) * g.dt, g.dt, params, bdry, &iters);
      iter_counts.push_back(iters);
      // keep parent values at nodes outside the mask so the field is total
      for (int node = 0; node < g.num_nodes(); ++node)
        if (!active[static_cast<size_t>(node)])
          for (int c2 = 0; c2 < k; ++c2)
            state[static_cast<size_t>(node) * k + c2] = u.value(level0 + m, node, c2);
      values.insert(values.end(), state.begin(), state.end());
    }
    return SolveResult{SpaceTimeField(sub, k, std::move(values)), std::move(iter_counts), level0};
  }

  if (!prob.initial || !prob.boundary) throw std::invalid_argument("solve: initial/boundary data required");
  int k = prob.k;
  std::vector<double> state(static_cast<size_t>(g.num_nodes()) * k);
  std::vector<double> buf(static_cast<size_t>(k));
  for (int node = 0; node < g.num_nodes(); ++node) {
    prob.initial(g.node_coord(node), buf);
    for (int c = 0; c < k; ++c) state[static_cast<size_t>(node) * k + c] = buf[static_cast<size_t>(c)];
  }
  // compatibility of initial and lateral data at t = 0
  std::vector<double> bbuf(static_cast<size_t>(k));
  double scale = 1.0;
  for (double v : state) scale = std::max(scale, std::abs(v));
  for (int node = 0; node < g.num_nodes(); ++node) {
    if (!g.is_boundary_node(node)) continue;
    prob.boundary(g.node_coord(node), 0.0, bbuf);
    for (int c = 0; c < k; ++c)
      if (std::abs(bbuf[static_cast<size_t>(c)] - state[static_cast<size_t>(node) * k + c]) > 1e-7 * scale)
        throw std::invalid_argument("solve: initial and boundary data incompatible at t = 0");
  }

  double mu_eff = std::max(prob.mu, detail::effective_regularization(params, g, prob.mu, prob.p));
  std::vector<uint8_t> active(static_cast<size_t>(g.num_nodes()), 1);
  detail::Stepper stepper(g, prob.k, prob.p, mu_eff, std::move(active), prob.coeff, false,
                          detail::identity_time_term());
  auto bdry = [&](int node, double t, std::span<double> out) {
    prob.boundary(g.node_coord(node), t, out);
  };
  std::vector<double> values;
  values.reserve(static_cast<size_t>(g.num_levels()) * g.num_nodes() * k);
  values.insert(values.end(), state.begin(), state.end());
  std::vector<int> iter_counts;
  for (int m = 1; m < g.num_levels(); ++m) {
    int iters = 0;
    state = stepper.step(state, (m - 1) * g.dt, g.dt, params, bdry, &iters);
    iter_counts.push_back(iters);
    values.insert(values.end(), state.begin(), state.end());
  }
  return SolveResult{SpaceTimeField(g, k, std::move(values)), std::move(iter_counts), 0};
}

// Cauchy-Dirichlet problem on the cylinder Q with the coefficient frozen at
// x_o, b(x,t) := a(x_o,t), and data w = u on the parabolic boundary of Q.
inline PLaplaceProblem freeze_coefficients(const PLaplaceProblem& prob, const SpaceTimeField& u,
                                           const SpaceVec& x_o, const Cylinder& Q) {
  if (!cylinder_inside_grid(prob.grid, Q))
    throw std::invalid_argument("freeze_coefficients: cylinder exceeds the domain");
  if (!node_in_cross_section(prob.grid, prob.grid.nearest_node(x_o), Q.center.x, Q.radius,
                             Q.cross_section))
    throw std::invalid_argument("freeze_coefficients: x_o must lie in the cylinder");
  PLaplaceProblem frozen = prob;
  CoefficientField base = prob.coeff;
  frozen.coeff.eval = [base, x_o](const SpaceVec&, double t) { return base(x_o, t); };
  frozen.coeff.time_independent = base.time_independent;
  frozen.region = Q;
  frozen.region_data = &u;
  frozen.initial = nullptr;
  frozen.boundary = nullptr;
  return frozen;
}

// Discrete value of the weak-form pairing
//   int int [ (u_o - u) . d_t zeta + a (mu^2+|Du|^2)^{(p-2)/2} Du . D zeta ]
// (trapezoid in time, midpoint in space). zeta must vanish on the lateral
// boundary and at the final time; u_o is taken from the problem data.
inline double weak_form_residual(const SpaceTimeField& u, const PLaplaceProblem& prob,
                                 const SpaceTimeField& zeta) {
  const Grid& g = u.grid();
  int k = u.components();
  if (zeta.components() != k || zeta.grid().num_nodes() != g.num_nodes() ||
      zeta.grid().num_levels() != g.num_levels())
    throw std::invalid_argument("weak_form_residual: zeta shape mismatch");
  double zscale = std::max(1e-30, zeta.max_abs());
  int last = g.num_levels() - 1;
  for (int m = 0; m < g.num_levels(); ++m)
    for (int node = 0; node < g.num_nodes(); ++node) {
      bool must_vanish = g.is_boundary_node(node) || m == last;
      if (!must_vanish) continue;
      for (int c = 0; c < k; ++c)
        if (std::abs(zeta.value(m, node, c)) > 1e-10 * zscale)
          throw std::invalid_argument("weak_form_residual: zeta violates support conditions");
    }
  std::vector<double> u0(static_cast<size_t>(g.num_nodes()) * k);
  std::vector<double> buf(static_cast<size_t>(k));
  for (int node = 0; node < g.num_nodes(); ++node) {
    prob.initial(g.node_coord(node), buf);
    for (int c = 0; c < k; ++c) u0[static_cast<size_t>(node) * k + c] = buf[static_cast<size_t>(c)];
  }
  double cell = 1.0;
  for (int a = 0; a < g.dim; ++a) cell *= g.h(a);
  auto dt_zeta = [&](int m, int node, int c) {
    if (m == 0)
      return (-3.0 * zeta.value(0, node, c) + 4.0 * zeta.value(1, node, c) - zeta.value(2, node, c)) /
             (2.0 * g.dt);
    if (m == last)
      return (3.0 * zeta.value(last, node, c) - 4.0 * zeta.value(last - 1, node, c) +
              zeta.value(last - 2, node, c)) /
             (2.0 * g.dt);
    return (zeta.value(m + 1, node, c) - zeta.value(m - 1, node, c)) / (2.0 * g.dt);
  };
  double acc = 0;
  int d = g.dim;
  for (int m = 0; m < g.num_levels(); ++m) {
    double wt = (m == 0 || m == last) ? 0.5 * g.dt : g.dt;
    std::vector<double> du = gradient(u, m);
    std::vector<double> dz = gradient(zeta, m);
    double t = g.time(m);
    for (int node = 0; node < g.num_nodes(); ++node) {
      double a = prob.coeff(g.node_coord(node), t);
      double rho2 = 0;
      for (int c = 0; c < k; ++c)
        for (int ax = 0; ax < d; ++ax) {
          double v = du[(static_cast<size_t>(node) * k + c) * d + ax];
          rho2 += v * v;
        }
      double s = (rho2 == 0 && prob.mu == 0) ? 0.0 : flux_scalar_factor(rho2, prob.mu, prob.p);
      double local = 0;
      for (int c = 0; c < k; ++c) {
        local += (u0[static_cast<size_t>(node) * k + c] - u.value(m, node, c)) * dt_zeta(m, node, c);
        for (int ax = 0; ax < d; ++ax)
          local += a * s * du[(static_cast<size_t>(node) * k + c) * d + ax] *
                   dz[(static_cast<size_t>(node) * k + c) * d + ax];
      }
      acc += wt * cell * local;
    }
  }
  return acc;
}

}  // namespace parlab
