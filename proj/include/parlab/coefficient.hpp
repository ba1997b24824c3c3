#pragma once

// Scalar coefficients a(x,t) with declared bounds and spatial Hölder exponent,
// and their mollification.

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "parlab/geometry.hpp"

namespace parlab {

struct CoefficientField {
  std::function<double(const SpaceVec&, double)> eval;
  double c_lower = 1.0;  // lower bound on a
  double c_upper = 1.0;  // upper bound, also bounds the spatial Hölder seminorm
  double alpha = 0.5;    // spatial Hölder exponent in (0,1)
  bool time_independent = true;

  double operator()(const SpaceVec& x, double t) const { return eval(x, t); }
};

inline CoefficientField constant_coefficient(double c) {
  if (!(c > 0)) throw std::invalid_argument("constant_coefficient: must be positive");
  CoefficientField a;
  a.eval = [c](const SpaceVec&, double) { return c; };
  a.c_lower = c;
  a.c_upper = c;
  a.alpha = 0.5;
  return a;
}

// a(x) = base + amplitude * |x - x0|^alpha. The Hölder seminorm of |x-x0|^alpha
// is 1, so the declared upper bound covers both the sup and the seminorm.
inline CoefficientField holder_bump_coefficient(double alpha, const SpaceVec& x0, double amplitude,
                                                const Grid& g, double base = 1.0) {
  if (!(alpha > 0) || !(alpha < 1)) throw std::invalid_argument("holder_bump: alpha must be in (0,1)");
  if (!(base > 0) || amplitude < 0) throw std::invalid_argument("holder_bump: invalid base/amplitude");
  CoefficientField a;
  a.eval = [=](const SpaceVec& x, double) { return base + amplitude * std::pow((x - x0).norm(), alpha); };
  a.alpha = alpha;
  a.c_lower = base;
  double diam2 = 0;
  for (int ax = 0; ax < g.dim; ++ax) {
    double e = g.hi[static_cast<size_t>(ax)] - g.lo[static_cast<size_t>(ax)];
    diam2 += e * e;
  }
  // allow the evaluator to be sampled slightly outside the box (mollification)
  double reach = std::sqrt(diam2) + 1.0;
  a.c_upper = std::max(base + amplitude * std::pow(reach, alpha), amplitude);
  return a;
}

// Checks C_o <= a <= C_1 on all grid nodes and the spatial Hölder quotient at
// exponent alpha on (sampled) node pairs. Throws on violation.
inline void validate_coefficient(const CoefficientField& a, const Grid& g, int level_samples = 3,
                                 int pair_samples = 20000, uint64_t seed = 17) {
  std::vector<double> times;
  for (int s = 0; s < level_samples; ++s)
    times.push_back(g.t_end * s / std::max(1, level_samples - 1));
  double tol = 1e-9 * std::max(1.0, a.c_upper);
  for (double t : times)
    for (int node = 0; node < g.num_nodes(); ++node) {
      double v = a(g.node_coord(node), t);
      if (v < a.c_lower - tol || v > a.c_upper + tol)
        throw std::invalid_argument("coefficient bounds violated at a grid node");
    }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, g.num_nodes() - 1);
  for (double t : times)
    for (int s = 0; s < pair_samples; ++s) {
      int n1 = pick(rng), n2 = pick(rng);
      if (n1 == n2) continue;
      SpaceVec x1 = g.node_coord(n1), x2 = g.node_coord(n2);
      double gap = (x1 - x2).norm();
      double quot = std::abs(a(x1, t) - a(x2, t)) / std::pow(gap, a.alpha);
      if (quot > a.c_upper + tol)
        throw std::invalid_argument("coefficient Hölder seminorm violated on a node pair");
    }
}

namespace detail {

struct MollifierQuadrature {
  std::vector<SpaceVec> points;  // inside the unit ball
  std::vector<double> weights;   // normalized to unit sum
};

// Midpoint quadrature of the standard bump exp(-1/(1-|y|^2)) on a 101^d grid
// over [-1,1]^d, normalized numerically; cached per dimension.
inline const MollifierQuadrature& mollifier_quadrature(int dim) {
  static MollifierQuadrature cache[3];
  MollifierQuadrature& q = cache[dim];
  if (!q.points.empty()) return q;
  const int n = 101;
  double cell = 2.0 / n;
  auto phi = [](double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; };
  double total = 0;
  if (dim == 1) {
    for (int i = 0; i < n; ++i) {
      double y = -1.0 + (i + 0.5) * cell;
      double w = phi(y * y);
      if (w > 0) {
        q.points.emplace_back(y);
        q.weights.push_back(w);
        total += w;
      }
    }
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double y0 = -1.0 + (i + 0.5) * cell;
        double y1 = -1.0 + (j + 0.5) * cell;
        double w = phi(y0 * y0 + y1 * y1);
        if (w > 0) {
          q.points.emplace_back(y0, y1);
          q.weights.push_back(w);
          total += w;
        }
      }
  }
  for (double& w : q.weights) w /= total;
  return q;
}

}  // namespace detail

// a_eps(x,t) = int a(x-y,t) phi_eps(y) dy with the numerically normalized
// standard bump. A convex combination of samples of a, so the declared bounds
// carry over; the result keeps C_o, C_1 and alpha.
inline CoefficientField mollify_coefficient(const CoefficientField& a, double eps, const Grid& g) {
  if (!(eps > 0)) throw std::invalid_argument("mollify_coefficient: eps must be positive");
  for (int ax = 0; ax < g.dim; ++ax)
    if (eps >= 0.5 * (g.hi[static_cast<size_t>(ax)] - g.lo[static_cast<size_t>(ax)]))
      throw std::invalid_argument("mollify_coefficient: eps too large for the domain inset");
  const auto& q = detail::mollifier_quadrature(g.dim);
  CoefficientField out = a;
  std::function<double(const SpaceVec&, double)> base = a.eval;
  out.eval = [base, eps, &q](const SpaceVec& x, double t) {
    double acc = 0;
    for (size_t j = 0; j < q.points.size(); ++j) {
      SpaceVec y = x;
      for (int ax = 0; ax < x.dim; ++ax) y[ax] -= eps * q.points[j][ax];
      acc += q.weights[j] * base(y, t);
    }
    return acc;
  };
  return out;
}

}  // namespace parlab
