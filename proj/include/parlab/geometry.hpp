#pragma once

// Structured grids, space-time cylinders (standard and intrinsic) and the
// parabolic distances used by every estimate checker.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace parlab {

// Spatial vector for dimensions 1 and 2.
struct SpaceVec {
  std::array<double, 2> v{0.0, 0.0};
  int dim = 1;

  SpaceVec() = default;
  explicit SpaceVec(double x) : v{x, 0.0}, dim(1) {}
  SpaceVec(double x, double y) : v{x, y}, dim(2) {}

  double operator[](int i) const { return v[static_cast<size_t>(i)]; }
  double& operator[](int i) { return v[static_cast<size_t>(i)]; }

  double norm() const {
    double s = 0;
    for (int i = 0; i < dim; ++i) s += v[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
    return std::sqrt(s);
  }
  double norm_inf() const {
    double s = 0;
    for (int i = 0; i < dim; ++i) s = std::max(s, std::abs(v[static_cast<size_t>(i)]));
    return s;
  }
};

inline SpaceVec operator-(const SpaceVec& a, const SpaceVec& b) {
  if (a.dim != b.dim) throw std::invalid_argument("SpaceVec dimension mismatch");
  SpaceVec r = a;
  for (int i = 0; i < a.dim; ++i) r[i] -= b[i];
  return r;
}

// Space-time point z = (x, t).
struct Point {
  SpaceVec x;
  double t = 0.0;

  Point() = default;
  Point(SpaceVec x_, double t_) : x(x_), t(t_) {}
  Point(double x_, double t_) : x(x_), t(t_) {}
  Point(double x0, double x1, double t_) : x(x0, x1), t(t_) {}
};

inline double par_distance(const Point& z1, const Point& z2) {
  return (z1.x - z2.x).norm() + std::sqrt(std::abs(z1.t - z2.t));
}

// Intrinsic parabolic distance |dx| + sqrt(lambda^{p-2} |dt|).
inline double intrinsic_par_distance(const Point& z1, const Point& z2, double lambda, double p) {
  if (!(lambda > 0)) throw std::invalid_argument("intrinsic_par_distance: lambda must be positive");
  return (z1.x - z2.x).norm() + std::sqrt(std::pow(lambda, p - 2.0) * std::abs(z1.t - z2.t));
}

// Uniform tensor grid on a box, plus a uniform time axis t = 0..t_end.
struct Grid {
  int dim = 1;
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{1.0, 1.0};
  std::array<int, 2> n{2, 1};  // nodes per axis; n[1] == 1 when dim == 1
  double t_end = 1.0;
  double dt = 1.0;

  double h(int axis) const {
    return (hi[static_cast<size_t>(axis)] - lo[static_cast<size_t>(axis)]) /
           (n[static_cast<size_t>(axis)] - 1);
  }
  double h_min() const {
    double m = h(0);
    if (dim == 2) m = std::min(m, h(1));
    return m;
  }
  double h_max() const {
    double m = h(0);
    if (dim == 2) m = std::max(m, h(1));
    return m;
  }
  int num_nodes() const { return n[0] * n[1]; }
  int num_levels() const { return static_cast<int>(std::lround(t_end / dt)) + 1; }

  double coord(int axis, int i) const { return lo[static_cast<size_t>(axis)] + h(axis) * i; }
  double time(int level) const { return dt * level; }

  int node_index(int i, int j = 0) const { return i + n[0] * j; }
  int ix(int node) const { return node % n[0]; }
  int iy(int node) const { return node / n[0]; }
  SpaceVec node_coord(int node) const {
    if (dim == 1) return SpaceVec(coord(0, ix(node)));
    return SpaceVec(coord(0, ix(node)), coord(1, iy(node)));
  }
  bool is_boundary_node(int node) const {
    int i = ix(node);
    if (i == 0 || i == n[0] - 1) return true;
    if (dim == 2) {
      int j = iy(node);
      if (j == 0 || j == n[1] - 1) return true;
    }
    return false;
  }
  // Nearest node to x; throws if x lies outside the box by more than a spacing.
  int nearest_node(const SpaceVec& x) const {
    std::array<int, 2> idx{0, 0};
    for (int a = 0; a < dim; ++a) {
      double s = (x[a] - lo[static_cast<size_t>(a)]) / h(a);
      long i = std::lround(s);
      if (i < -1 || i > n[static_cast<size_t>(a)]) throw std::invalid_argument("nearest_node: point outside grid");
      idx[static_cast<size_t>(a)] = static_cast<int>(std::clamp<long>(i, 0, n[static_cast<size_t>(a)] - 1));
    }
    return node_index(idx[0], idx[1]);
  }
  int nearest_level(double t) const {
    long m = std::lround(t / dt);
    return static_cast<int>(std::clamp<long>(m, 0, num_levels() - 1));
  }
};

inline Grid make_grid(int dim, std::array<double, 2> lo, std::array<double, 2> hi,
                      std::array<int, 2> n, double t_end, double dt) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("Grid: dim must be 1 or 2");
  if (!(dt > 0)) throw std::invalid_argument("Grid: dt must be positive");
  Grid g;
  g.dim = dim;
  g.lo = lo;
  g.hi = hi;
  g.n = n;
  if (dim == 1) {
    g.n[1] = 1;
    g.lo[1] = 0;
    g.hi[1] = 0;
  }
  for (int a = 0; a < dim; ++a) {
    if (g.n[static_cast<size_t>(a)] < 8) throw std::invalid_argument("Grid: need at least 8 nodes per axis");
    if (!(g.hi[static_cast<size_t>(a)] > g.lo[static_cast<size_t>(a)]))
      throw std::invalid_argument("Grid: empty extent");
  }
  long levels = std::lround(t_end / dt);
  if (levels < 1 || std::abs(levels * dt - t_end) > 1e-9 * std::max(1.0, t_end))
    throw std::invalid_argument("Grid: t_end must be a positive multiple of dt");
  g.t_end = levels * dt;
  g.dt = dt;
  return g;
}

inline Grid make_grid_1d(double lo, double hi, int n, double t_end, double dt) {
  return make_grid(1, {lo, 0}, {hi, 0}, {n, 1}, t_end, dt);
}
inline Grid make_grid_2d(double lo0, double hi0, int n0, double lo1, double hi1, int n1,
                         double t_end, double dt) {
  return make_grid(2, {lo0, lo1}, {hi0, hi1}, {n0, n1}, t_end, dt);
}

enum class CrossSection { ball, cube };
enum class TimeKind { backward, symmetric };

struct Scaling {
  enum class Kind { none, intrinsic, dnl } kind = Kind::none;
  double lambda = 1.0;
  double p = 2.0;
  double u0 = 1.0;
  double q = 1.0;
};

// Space-time region: ball or cube cross-section of radius rho around the
// center, times a backward window (t0-S, t0] or a symmetric one (t0-S, t0+S).
struct Cylinder {
  Point center;
  double radius = 0.0;
  double duration = 0.0;  // S; half-duration per side for symmetric cylinders
  CrossSection cross_section = CrossSection::ball;
  TimeKind time_kind = TimeKind::backward;
  Scaling scaling;

  double t_lo() const { return center.t - duration; }
  double t_hi() const { return time_kind == TimeKind::backward ? center.t : center.t + duration; }
};

inline Cylinder standard_cylinder(const Point& z0, double radius, double duration,
                                  CrossSection cs = CrossSection::ball,
                                  TimeKind tk = TimeKind::backward) {
  if (!(radius > 0) || !(duration > 0))
    throw std::invalid_argument("Cylinder: radius and duration must be positive");
  Cylinder c;
  c.center = z0;
  c.radius = radius;
  c.duration = duration;
  c.cross_section = cs;
  c.time_kind = tk;
  return c;
}

// Backward ball cylinder B_rho(x0) x (t0 - lambda^{2-p} rho^2, t0].
inline Cylinder intrinsic_cylinder(const Point& z0, double rho, double lambda, double p) {
  if (!(rho > 0)) throw std::invalid_argument("intrinsic_cylinder: rho must be positive");
  if (!(lambda > 0)) throw std::invalid_argument("intrinsic_cylinder: lambda must be positive");
  if (!(p > 1)) throw std::invalid_argument("intrinsic_cylinder: p must exceed 1");
  Cylinder c = standard_cylinder(z0, rho, std::pow(lambda, 2.0 - p) * rho * rho);
  c.scaling.kind = Scaling::Kind::intrinsic;
  c.scaling.lambda = lambda;
  c.scaling.p = p;
  return c;
}

// Symmetric cube cylinder K_rho(x0) x (t0 - u0^{q+1-p} rho^p, t0 + u0^{q+1-p} rho^p).
inline Cylinder dnl_intrinsic_cylinder(const Point& z0, double rho, double u0, double p, double q) {
  if (!(u0 > 0)) throw std::invalid_argument("dnl_intrinsic_cylinder: u0 must be positive");
  if (!(rho > 0)) throw std::invalid_argument("dnl_intrinsic_cylinder: rho must be positive");
  if (!(q > p - 1) || !(p > 1)) throw std::invalid_argument("dnl_intrinsic_cylinder: need q > p-1 > 0");
  Cylinder c = standard_cylinder(z0, rho, std::pow(u0, q + 1.0 - p) * std::pow(rho, p),
                                 CrossSection::cube, TimeKind::symmetric);
  c.scaling.kind = Scaling::Kind::dnl;
  c.scaling.p = p;
  c.scaling.q = q;
  c.scaling.u0 = u0;
  return c;
}

// Node/level index set of a region, snapped to the grid.
struct NodeSet {
  std::vector<int> nodes;
  std::vector<int> levels;
};

inline bool node_in_cross_section(const Grid& g, int node, const SpaceVec& center, double radius,
                                  CrossSection cs) {
  SpaceVec d = g.node_coord(node) - center;
  double tol = 1e-9 * g.h_min();
  return cs == CrossSection::ball ? d.norm() <= radius + tol : d.norm_inf() <= radius + tol;
}

// Spatial node set of a ball/cube around a center.
inline std::vector<int> region_nodes(const Grid& g, const SpaceVec& center, double radius,
                                     CrossSection cs) {
  std::vector<int> out;
  for (int node = 0; node < g.num_nodes(); ++node)
    if (node_in_cross_section(g, node, center, radius, cs)) out.push_back(node);
  return out;
}

// Node x level set of a cylinder. Time windows are closed at the snapped
// endpoints; discrete estimates do not distinguish half-open windows.
// Rejects regions with fewer than 3 nodes per spatial axis or 2 time levels.
inline NodeSet cylinder_nodes(const Grid& g, const Cylinder& c) {
  NodeSet s;
  s.nodes = region_nodes(g, c.center.x, c.radius, c.cross_section);
  double tol = 1e-9 * std::max(g.dt, 1.0);
  for (int m = 0; m < g.num_levels(); ++m) {
    double t = g.time(m);
    if (t >= c.t_lo() - tol && t <= c.t_hi() + tol) s.levels.push_back(m);
  }
  for (int a = 0; a < g.dim; ++a) {
    int count = 0;
    for (int i = 0; i < g.n[static_cast<size_t>(a)]; ++i)
      if (std::abs(g.coord(a, i) - c.center.x[a]) <= c.radius + 1e-9 * g.h(a)) ++count;
    if (count < 3) throw std::invalid_argument("cylinder_nodes: fewer than 3 nodes on axis " + std::to_string(a));
  }
  if (s.levels.size() < 2) throw std::invalid_argument("cylinder_nodes: fewer than 2 time levels");
  if (s.nodes.empty()) throw std::invalid_argument("cylinder_nodes: empty cross-section");
  return s;
}

inline bool cylinder_inside_grid(const Grid& g, const Cylinder& c) {
  for (int a = 0; a < g.dim; ++a) {
    if (c.center.x[a] - c.radius < g.lo[static_cast<size_t>(a)] - 1e-12) return false;
    if (c.center.x[a] + c.radius > g.hi[static_cast<size_t>(a)] + 1e-12) return false;
  }
  return c.t_lo() >= -1e-12 && c.t_hi() <= g.t_end + 1e-12;
}

// Distance of a compact node set to the parabolic boundary (lateral + initial),
// sampled one point per grid node per boundary face; |dt| enters with the given
// power (1/2 for the parabolic distance).
inline double boundary_distance(std::span<const Point> K, const Grid& g, double time_power) {
  if (K.empty()) throw std::invalid_argument("boundary_distance: empty set");
  std::vector<Point> samples;
  for (int node = 0; node < g.num_nodes(); ++node) {
    if (g.is_boundary_node(node))
      for (int m = 0; m < g.num_levels(); ++m) samples.emplace_back(g.node_coord(node), g.time(m));
  }
  for (int node = 0; node < g.num_nodes(); ++node) samples.emplace_back(g.node_coord(node), 0.0);
  double best = std::numeric_limits<double>::infinity();
  for (const Point& z : K)
    for (const Point& b : samples) {
      double d = (z.x - b.x).norm() + std::pow(std::abs(z.t - b.t), time_power);
      best = std::min(best, d);
    }
  return best;
}

struct BoundaryDistance {
  double distance = 0.0;
  double rho = 0.0;  // 1/4 min{1, distance}
};

// dist_par(K, parabolic boundary of the grid box) and the derived radius rho.
inline BoundaryDistance par_boundary_distance(std::span<const Point> K, const Grid& g) {
  BoundaryDistance r;
  r.distance = boundary_distance(K, g, 0.5);
  r.rho = 0.25 * std::min(1.0, r.distance);
  return r;
}

}  // namespace parlab
