#pragma once

// Backward-Euler stepper shared by the p-Laplace and doubly non-linear
// solvers. Gradients live on cell edges (exact differences along the edge,
// averaged central differences transversally); the discrete divergence is the
// exact negative adjoint of the edge-difference operator under the node inner
// product, so testing the scheme with the solution reproduces the energy
// identity. Newton uses the symmetric per-edge linearization with residual
// line search and a lagged-coefficient (Picard) fallback.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "parlab/coefficient.hpp"
#include "parlab/geometry.hpp"

namespace parlab {

struct SolverParams {
  double newton_tol = 1e-11;   // residual sup-norm, in solution units
  int max_newton_iters = 60;
  double damping = 1.0;        // initial step fraction, halved on rejection
  bool picard_fallback = true;
  double eps_reg = -1.0;       // <0: h^2 when mu == 0 and p < 2, else 0
};

struct SolverFailure : std::runtime_error {
  double time;
  double residual;
  SolverFailure(double t, double res)
      : std::runtime_error("solver failed to converge at t = " + std::to_string(t) +
                           ", residual = " + std::to_string(res)),
        time(t),
        residual(res) {}
};

namespace detail {

struct TimeTerm {
  // T(v) and T'(v); backward Euler solves T(u+) - T(u) = dt * div flux(u+).
  std::function<double(double)> value;
  std::function<double(double)> deriv;
};

inline TimeTerm identity_time_term() {
  return {[](double v) { return v; }, [](double) { return 1.0; }};
}

struct Edge {
  int left, right;  // flat node indices
  int axis;
  double coeff;     // a at the edge midpoint
};

class Stepper {
 public:
  Stepper(const Grid& g, int k, double p, double mu_eff, std::vector<uint8_t> active,
          const CoefficientField& coeff, bool nonneg, TimeTerm tt)
      : g_(g), k_(k), p_(p), mu_(mu_eff), active_(std::move(active)), coeff_(coeff),
        nonneg_(nonneg), tt_(std::move(tt)) {
    if (static_cast<int>(active_.size()) != g_.num_nodes())
      throw std::invalid_argument("Stepper: mask size mismatch");
    classify_nodes();
    build_edges();
  }

  int num_unknowns() const { return static_cast<int>(unknown_nodes_.size()); }
  const std::vector<uint8_t>& dirichlet_mask() const { return dirichlet_; }
  const std::vector<uint8_t>& active_mask() const { return active_; }

  // One implicit step. prev holds all node values (k per node); boundary
  // fills Dirichlet values at the new time. Returns the new node values and
  // the Newton iteration count through iters_out.
  std::vector<double> step(std::span<const double> prev, double t_prev, double dt,
                           const SolverParams& params,
                           const std::function<void(int, double, std::span<double>)>& boundary,
                           int* iters_out = nullptr) {
    double t_next = t_prev + dt;
    sample_coefficients(t_prev + 0.5 * dt);
    std::vector<double> u(prev.begin(), prev.end());
    std::vector<double> bb(static_cast<size_t>(k_));
    for (int node = 0; node < g_.num_nodes(); ++node) {
      if (!active_[static_cast<size_t>(node)]) continue;
      if (dirichlet_[static_cast<size_t>(node)]) {
        boundary(node, t_next, bb);
        for (int c = 0; c < k_; ++c) u[static_cast<size_t>(node) * k_ + c] = bb[static_cast<size_t>(c)];
      }
    }
    if (nonneg_) project(u);
    if (unknown_nodes_.empty()) {
      if (iters_out) *iters_out = 0;
      return u;
    }

    std::vector<double> residual(unknown_nodes_.size() * static_cast<size_t>(k_));
    std::vector<double> trial(u.size());
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(residual.size()));
    bool picard_mode = false;
    int iters = 0;
    double res_norm = compute_residual(u, prev, dt, residual);
    while (res_norm > params.newton_tol) {
      if (iters >= params.max_newton_iters) throw SolverFailure(t_next, res_norm);
      assemble(u, dt, picard_mode);
      for (size_t i = 0; i < residual.size(); ++i) rhs[static_cast<Eigen::Index>(i)] = -residual[i];
      if (!factorized_pattern_) {
        ldlt_.analyzePattern(mat_);
        factorized_pattern_ = true;
      }
      ldlt_.factorize(mat_);
      if (ldlt_.info() != Eigen::Success) {
        if (!picard_mode && params.picard_fallback) {
          picard_mode = true;
          ++iters;
          continue;
        }
        throw SolverFailure(t_next, res_norm);
      }
      Eigen::VectorXd d = ldlt_.solve(rhs);
      double step_frac = params.damping;
      bool accepted = false;
      for (int halve = 0; halve <= 20; ++halve) {
        trial = u;
        for (size_t s = 0; s < unknown_nodes_.size(); ++s) {
          int node = unknown_nodes_[s];
          for (int c = 0; c < k_; ++c)
            trial[static_cast<size_t>(node) * k_ + c] += step_frac * d[static_cast<Eigen::Index>(s * static_cast<size_t>(k_) + c)];
        }
        if (nonneg_) project(trial);
        double trial_norm = compute_residual(trial, prev, dt, residual);
        if (trial_norm < res_norm || trial_norm <= params.newton_tol) {
          u.swap(trial);
          res_norm = trial_norm;
          accepted = true;
          break;
        }
        step_frac *= 0.5;
      }
      ++iters;
      if (!accepted) {
        if (!picard_mode && params.picard_fallback) {
          picard_mode = true;  // lagged-coefficient iterations for this step
          res_norm = compute_residual(u, prev, dt, residual);
          continue;
        }
        throw SolverFailure(t_next, res_norm);
      }
    }
    if (iters_out) *iters_out = iters;
    return u;
  }

 private:
  Grid g_;
  int k_;
  double p_, mu_;
  std::vector<uint8_t> active_;
  CoefficientField coeff_;
  bool nonneg_;
  TimeTerm tt_;

  std::vector<uint8_t> dirichlet_;
  std::vector<int> unknown_nodes_;
  std::vector<int> slot_;  // node -> unknown slot, -1 otherwise
  std::vector<Edge> edges_;
  std::vector<std::array<int, 4>> node_edges_;  // per node: [x-, x+, y-, y+], -1 if absent
  bool coeff_sampled_ = false;

  Eigen::SparseMatrix<double> mat_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  bool factorized_pattern_ = false;
  std::vector<Eigen::Triplet<double>> triplets_;

  void classify_nodes() {
    int nn = g_.num_nodes();
    dirichlet_.assign(static_cast<size_t>(nn), 0);
    slot_.assign(static_cast<size_t>(nn), -1);
    auto neighbor = [&](int node, int axis, int dir) -> int {
      int i = g_.ix(node), j = g_.iy(node);
      if (axis == 0) i += dir;
      else j += dir;
      if (i < 0 || i >= g_.n[0] || j < 0 || j >= g_.n[1]) return -1;
      return g_.node_index(i, j);
    };
    for (int node = 0; node < nn; ++node) {
      if (!active_[static_cast<size_t>(node)]) continue;
      bool interior = !g_.is_boundary_node(node);
      for (int axis = 0; axis < g_.dim && interior; ++axis)
        for (int dir : {-1, 1}) {
          int nb = neighbor(node, axis, dir);
          if (nb < 0 || !active_[static_cast<size_t>(nb)]) {
            interior = false;
            break;
          }
        }
      if (!interior) dirichlet_[static_cast<size_t>(node)] = 1;
    }
    for (int node = 0; node < nn; ++node)
      if (active_[static_cast<size_t>(node)] && !dirichlet_[static_cast<size_t>(node)]) {
        slot_[static_cast<size_t>(node)] = static_cast<int>(unknown_nodes_.size());
        unknown_nodes_.push_back(node);
      }
  }

  void build_edges() {
    node_edges_.assign(static_cast<size_t>(g_.num_nodes()), {-1, -1, -1, -1});
    for (int axis = 0; axis < g_.dim; ++axis) {
      int step = axis == 0 ? 1 : g_.n[0];
      for (int node = 0; node < g_.num_nodes(); ++node) {
        int i = axis == 0 ? g_.ix(node) : g_.iy(node);
        if (i + 1 >= g_.n[static_cast<size_t>(axis)]) continue;
        int right = node + step;
        if (!active_[static_cast<size_t>(node)] || !active_[static_cast<size_t>(right)]) continue;
        Edge e{node, right, axis, 1.0};
        int id = static_cast<int>(edges_.size());
        edges_.push_back(e);
        node_edges_[static_cast<size_t>(node)][static_cast<size_t>(2 * axis + 1)] = id;
        node_edges_[static_cast<size_t>(right)][static_cast<size_t>(2 * axis)] = id;
      }
    }
  }

  void sample_coefficients(double t_mid) {
    if (coeff_sampled_ && coeff_.time_independent) return;
    for (Edge& e : edges_) {
      SpaceVec a = g_.node_coord(e.left);
      SpaceVec b = g_.node_coord(e.right);
      SpaceVec mid = a;
      for (int ax = 0; ax < g_.dim; ++ax) mid[ax] = 0.5 * (a[ax] + b[ax]);
      e.coeff = coeff_(mid, t_mid);
    }
    coeff_sampled_ = true;
  }

  void project(std::vector<double>& u) const {
    for (int node : unknown_nodes_)
      for (int c = 0; c < k_; ++c) {
        double& v = u[static_cast<size_t>(node) * k_ + c];
        if (v < 0) v = 0;
      }
  }

  // Node derivative along an axis using the active mask (central when both
  // neighbors are active, one-sided otherwise); feeds the transverse part of
  // the edge gradient magnitude only.
  double node_derivative(std::span<const double> u, int node, int axis, int c) const {
    int step = axis == 0 ? 1 : g_.n[0];
    int i = axis == 0 ? g_.ix(node) : g_.iy(node);
    int nmax = g_.n[static_cast<size_t>(axis)];
    double h = g_.h(axis);
    bool has_lo = i > 0 && active_[static_cast<size_t>(node - step)];
    bool has_hi = i + 1 < nmax && active_[static_cast<size_t>(node + step)];
    auto val = [&](int nd) { return u[static_cast<size_t>(nd) * k_ + c]; };
    if (has_lo && has_hi) return (val(node + step) - val(node - step)) / (2 * h);
    if (has_hi) return (val(node + step) - val(node)) / h;
    if (has_lo) return (val(node) - val(node - step)) / h;
    return 0.0;
  }

  // |G_e|_F^2 together with the normal differences per component.
  void edge_gradient(std::span<const double> u, const Edge& e, std::span<double> delta,
                     double* rho2_out) const {
    double h = g_.h(e.axis);
    double rho2 = 0;
    for (int c = 0; c < k_; ++c) {
      double d = (u[static_cast<size_t>(e.right) * k_ + c] - u[static_cast<size_t>(e.left) * k_ + c]) / h;
      delta[static_cast<size_t>(c)] = d;
      rho2 += d * d;
    }
    if (g_.dim == 2) {
      int trans = 1 - e.axis;
      for (int c = 0; c < k_; ++c) {
        double d = 0.5 * (node_derivative(u, e.left, trans, c) + node_derivative(u, e.right, trans, c));
        rho2 += d * d;
      }
    }
    *rho2_out = rho2;
  }

  double scalar_factor(double rho2) const {
    double s2 = mu_ * mu_ + rho2;
    if (s2 <= 0) return 0.0;
    return std::pow(s2, 0.5 * (p_ - 2.0));
  }

  double compute_residual(std::span<const double> u, std::span<const double> prev, double dt,
                          std::vector<double>& residual) const {
    std::vector<double> flux(edges_.size() * static_cast<size_t>(k_));
    std::vector<double> delta(static_cast<size_t>(k_));
    for (size_t ei = 0; ei < edges_.size(); ++ei) {
      const Edge& e = edges_[ei];
      double rho2 = 0;
      edge_gradient(u, e, delta, &rho2);
      double s = e.coeff * scalar_factor(rho2);
      for (int c = 0; c < k_; ++c) flux[ei * static_cast<size_t>(k_) + c] = s * delta[static_cast<size_t>(c)];
    }
    double norm = 0;
    for (size_t sidx = 0; sidx < unknown_nodes_.size(); ++sidx) {
      int node = unknown_nodes_[sidx];
      for (int c = 0; c < k_; ++c) {
        double div = 0;
        for (int axis = 0; axis < g_.dim; ++axis) {
          int elo = node_edges_[static_cast<size_t>(node)][static_cast<size_t>(2 * axis)];
          int ehi = node_edges_[static_cast<size_t>(node)][static_cast<size_t>(2 * axis + 1)];
          double h = g_.h(axis);
          double f_lo = elo >= 0 ? flux[static_cast<size_t>(elo) * k_ + c] : 0.0;
          double f_hi = ehi >= 0 ? flux[static_cast<size_t>(ehi) * k_ + c] : 0.0;
          div += (f_hi - f_lo) / h;
        }
        double r = tt_.value(u[static_cast<size_t>(node) * k_ + c]) -
                   tt_.value(prev[static_cast<size_t>(node) * k_ + c]) - dt * div;
        residual[sidx * static_cast<size_t>(k_) + c] = r;
        norm = std::max(norm, std::abs(r));
      }
    }
    return norm;
  }

  void assemble(std::span<const double> u, double dt, bool picard) {
    int nun = static_cast<int>(unknown_nodes_.size());
    triplets_.clear();
    for (size_t sidx = 0; sidx < unknown_nodes_.size(); ++sidx) {
      int node = unknown_nodes_[sidx];
      for (int c = 0; c < k_; ++c) {
        double td = tt_.deriv(u[static_cast<size_t>(node) * k_ + c]);
        triplets_.emplace_back(static_cast<int>(sidx) * k_ + c, static_cast<int>(sidx) * k_ + c, td);
      }
    }
    std::vector<double> delta(static_cast<size_t>(k_));
    for (const Edge& e : edges_) {
      int sl = slot_[static_cast<size_t>(e.left)];
      int sr = slot_[static_cast<size_t>(e.right)];
      if (sl < 0 && sr < 0) continue;
      double rho2 = 0;
      edge_gradient(u, e, delta, &rho2);
      double s = scalar_factor(rho2);
      double sp = 0.0;  // d s / d(rho2), dropped in picard mode
      if (!picard) {
        double s2 = mu_ * mu_ + rho2;
        sp = s2 > 0 ? 0.5 * (p_ - 2.0) * std::pow(s2, 0.5 * (p_ - 4.0)) : 0.0;
      }
      double w = dt * e.coeff / (g_.h(e.axis) * g_.h(e.axis));
      for (int c = 0; c < k_; ++c)
        for (int cc = 0; cc < k_; ++cc) {
          double b = w * (2.0 * sp * delta[static_cast<size_t>(c)] * delta[static_cast<size_t>(cc)] +
                          (c == cc ? s : 0.0));
          // entries are always emitted so the sparsity pattern stays fixed
          if (sl >= 0) triplets_.emplace_back(sl * k_ + c, sl * k_ + cc, b);
          if (sr >= 0) triplets_.emplace_back(sr * k_ + c, sr * k_ + cc, b);
          if (sl >= 0 && sr >= 0) {
            triplets_.emplace_back(sl * k_ + c, sr * k_ + cc, -b);
            triplets_.emplace_back(sr * k_ + c, sl * k_ + cc, -b);
          }
        }
    }
    mat_.resize(nun * k_, nun * k_);
    mat_.setFromTriplets(triplets_.begin(), triplets_.end());
  }
};

}  // namespace detail
}  // namespace parlab
