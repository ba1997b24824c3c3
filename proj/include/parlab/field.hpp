#pragma once

// Discrete k-component fields on grid nodes x time levels, and the measurement
// operations built on them: gradients, means, oscillations, L^p means, Steklov
// averages and Hölder seminorms.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "parlab/geometry.hpp"

namespace parlab {

// Immutable after construction; values laid out [level][node][component].
class SpaceTimeField {
 public:
  SpaceTimeField(Grid grid, int k, std::vector<double> values)
      : grid_(grid), k_(k), values_(std::move(values)) {
    if (k_ < 1) throw std::invalid_argument("SpaceTimeField: k must be >= 1");
    size_t expect = static_cast<size_t>(grid_.num_levels()) * grid_.num_nodes() * k_;
    if (values_.size() != expect) throw std::invalid_argument("SpaceTimeField: value count mismatch");
    for (double v : values_)
      if (!std::isfinite(v)) throw std::invalid_argument("SpaceTimeField: non-finite value");
  }

  using Sampler = std::function<void(const SpaceVec&, double, std::span<double>)>;

  static SpaceTimeField sample(const Grid& g, int k, const Sampler& fn) {
    std::vector<double> vals(static_cast<size_t>(g.num_levels()) * g.num_nodes() * k);
    std::vector<double> buf(static_cast<size_t>(k));
    for (int m = 0; m < g.num_levels(); ++m) {
      double t = g.time(m);
      for (int node = 0; node < g.num_nodes(); ++node) {
        fn(g.node_coord(node), t, buf);
        for (int c = 0; c < k; ++c)
          vals[(static_cast<size_t>(m) * g.num_nodes() + node) * k + c] = buf[static_cast<size_t>(c)];
      }
    }
    return SpaceTimeField(g, k, std::move(vals));
  }

  static SpaceTimeField sample_scalar(const Grid& g, const std::function<double(const SpaceVec&, double)>& fn) {
    return sample(g, 1, [&](const SpaceVec& x, double t, std::span<double> out) { out[0] = fn(x, t); });
  }

  const Grid& grid() const { return grid_; }
  int components() const { return k_; }

  double value(int level, int node, int c = 0) const {
    return values_[(static_cast<size_t>(level) * grid_.num_nodes() + node) * k_ + c];
  }
  std::span<const double> level_data(int level) const {
    size_t stride = static_cast<size_t>(grid_.num_nodes()) * k_;
    return {values_.data() + stride * level, stride};
  }
  std::span<const double> data() const { return values_; }

  double max_abs() const {
    double m = 0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }
  double max_abs_level(int level) const {
    double m = 0;
    for (double v : level_data(level)) m = std::max(m, std::abs(v));
    return m;
  }

  // Multilinear in space, linear in time.
  void interpolate(const SpaceVec& x, double t, std::span<double> out) const {
    int lv = static_cast<int>(std::floor(t / grid_.dt));
    lv = std::clamp(lv, 0, grid_.num_levels() - 2);
    double th = (t - grid_.time(lv)) / grid_.dt;
    th = std::clamp(th, 0.0, 1.0);
    std::vector<double> a(static_cast<size_t>(k_)), b(static_cast<size_t>(k_));
    interpolate_level(lv, x, a);
    interpolate_level(lv + 1, x, b);
    for (int c = 0; c < k_; ++c) out[static_cast<size_t>(c)] = (1 - th) * a[static_cast<size_t>(c)] + th * b[static_cast<size_t>(c)];
  }

  void interpolate_level(int level, const SpaceVec& x, std::span<double> out) const {
    const Grid& g = grid_;
    std::array<int, 2> i0{0, 0};
    std::array<double, 2> w{0.0, 0.0};
    for (int a = 0; a < g.dim; ++a) {
      double s = (x[a] - g.lo[static_cast<size_t>(a)]) / g.h(a);
      int i = static_cast<int>(std::floor(s));
      i = std::clamp(i, 0, g.n[static_cast<size_t>(a)] - 2);
      i0[static_cast<size_t>(a)] = i;
      w[static_cast<size_t>(a)] = std::clamp(s - i, 0.0, 1.0);
    }
    for (int c = 0; c < k_; ++c) {
      if (g.dim == 1) {
        double v0 = value(level, g.node_index(i0[0]), c);
        double v1 = value(level, g.node_index(i0[0] + 1), c);
        out[static_cast<size_t>(c)] = (1 - w[0]) * v0 + w[0] * v1;
      } else {
        double v00 = value(level, g.node_index(i0[0], i0[1]), c);
        double v10 = value(level, g.node_index(i0[0] + 1, i0[1]), c);
        double v01 = value(level, g.node_index(i0[0], i0[1] + 1), c);
        double v11 = value(level, g.node_index(i0[0] + 1, i0[1] + 1), c);
        out[static_cast<size_t>(c)] = (1 - w[0]) * (1 - w[1]) * v00 + w[0] * (1 - w[1]) * v10 +
                                      (1 - w[0]) * w[1] * v01 + w[0] * w[1] * v11;
      }
    }
  }

 private:
  Grid grid_;
  int k_;
  std::vector<double> values_;
};

// Spatial gradient of one time level, layout [node][component][axis].
// Second-order central differences at interior nodes, one-sided second-order
// stencils at the boundary; exact on affine and quadratic data.
inline std::vector<double> gradient(const SpaceTimeField& u, int level) {
  const Grid& g = u.grid();
  if (g.n[0] < 3 || (g.dim == 2 && g.n[1] < 3))
    throw std::invalid_argument("gradient: need at least 3 nodes per axis");
  int k = u.components();
  int d = g.dim;
  std::vector<double> out(static_cast<size_t>(g.num_nodes()) * k * d);
  auto deriv = [&](int node, int axis, int c) {
    int i = axis == 0 ? g.ix(node) : g.iy(node);
    int nn = g.n[static_cast<size_t>(axis)];
    int step = axis == 0 ? 1 : g.n[0];
    double h = g.h(axis);
    if (i == 0)
      return (-3.0 * u.value(level, node, c) + 4.0 * u.value(level, node + step, c) -
              u.value(level, node + 2 * step, c)) /
             (2.0 * h);
    if (i == nn - 1)
      return (3.0 * u.value(level, node, c) - 4.0 * u.value(level, node - step, c) +
              u.value(level, node - 2 * step, c)) /
             (2.0 * h);
    return (u.value(level, node + step, c) - u.value(level, node - step, c)) / (2.0 * h);
  };
  for (int node = 0; node < g.num_nodes(); ++node)
    for (int c = 0; c < k; ++c)
      for (int a = 0; a < d; ++a)
        out[(static_cast<size_t>(node) * k + c) * d + a] = deriv(node, a, c);
  return out;
}

inline double frobenius_norm(std::span<const double> m) {
  double s = 0;
  for (double v : m) s += v * v;
  return std::sqrt(s);
}

// Node-average of u(.,t) over a spatial node set (midpoint quadrature).
inline std::vector<double> slicewise_mean(const SpaceTimeField& u, std::span<const int> nodes, int level) {
  if (nodes.empty()) throw std::invalid_argument("slicewise_mean: empty region");
  std::vector<double> mean(static_cast<size_t>(u.components()), 0.0);
  for (int node : nodes)
    for (int c = 0; c < u.components(); ++c) mean[static_cast<size_t>(c)] += u.value(level, node, c);
  for (double& m : mean) m /= static_cast<double>(nodes.size());
  return mean;
}

inline std::vector<double> cylinder_mean(const SpaceTimeField& u, const NodeSet& s) {
  if (s.nodes.empty() || s.levels.empty()) throw std::invalid_argument("cylinder_mean: empty region");
  std::vector<double> mean(static_cast<size_t>(u.components()), 0.0);
  for (int m : s.levels)
    for (int node : s.nodes)
      for (int c = 0; c < u.components(); ++c) mean[static_cast<size_t>(c)] += u.value(m, node, c);
  double cnt = static_cast<double>(s.nodes.size()) * static_cast<double>(s.levels.size());
  for (double& v : mean) v /= cnt;
  return mean;
}

inline std::vector<double> cylinder_mean(const SpaceTimeField& u, const Cylinder& c) {
  return cylinder_mean(u, cylinder_nodes(u.grid(), c));
}

// Diameter of a packed set of k-vectors: sup over pairs of the Euclidean
// distance. Exact for k == 1 and for small sets; for large sets it is computed
// among extreme points along a fixed direction set (always containing the
// coordinate axes), which never exceeds the true value.
inline double diameter(std::span<const double> pts, int k) {
  size_t m = pts.size() / static_cast<size_t>(k);
  if (m == 0) throw std::invalid_argument("diameter: empty set");
  if (k == 1) {
    double lo = pts[0], hi = pts[0];
    for (double v : pts) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return hi - lo;
  }
  auto brute = [&](std::span<const size_t> idx) {
    double best = 0;
    for (size_t a = 0; a < idx.size(); ++a)
      for (size_t b = a + 1; b < idx.size(); ++b) {
        double s = 0;
        for (int c = 0; c < k; ++c) {
          double d = pts[idx[a] * k + c] - pts[idx[b] * k + c];
          s += d * d;
        }
        best = std::max(best, s);
      }
    return std::sqrt(best);
  };
  if (m <= 3000) {
    std::vector<size_t> all(m);
    for (size_t i = 0; i < m; ++i) all[i] = i;
    return brute(all);
  }
  std::vector<std::vector<double>> dirs;
  for (int c = 0; c < k; ++c) {
    std::vector<double> e(static_cast<size_t>(k), 0.0);
    e[static_cast<size_t>(c)] = 1.0;
    dirs.push_back(e);
  }
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int r = 0; r < 192; ++r) {
    std::vector<double> e(static_cast<size_t>(k));
    double nrm = 0;
    for (double& v : e) {
      v = nd(rng);
      nrm += v * v;
    }
    nrm = std::sqrt(nrm);
    for (double& v : e) v /= nrm;
    dirs.push_back(e);
  }
  std::vector<size_t> cand;
  for (const auto& e : dirs) {
    size_t lo = 0, hi = 0;
    double plo = std::numeric_limits<double>::infinity(), phi = -plo;
    for (size_t i = 0; i < m; ++i) {
      double prj = 0;
      for (int c = 0; c < k; ++c) prj += e[static_cast<size_t>(c)] * pts[i * k + c];
      if (prj < plo) {
        plo = prj;
        lo = i;
      }
      if (prj > phi) {
        phi = prj;
        hi = i;
      }
    }
    cand.push_back(lo);
    cand.push_back(hi);
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  return brute(cand);
}

// sup over node pairs of |u(z) - u(z')|, Euclidean norm in R^k.
inline double oscillation(const SpaceTimeField& u, const NodeSet& s) {
  if (s.nodes.empty() || s.levels.empty()) throw std::invalid_argument("oscillation: empty region");
  int k = u.components();
  std::vector<double> pts;
  pts.reserve(s.nodes.size() * s.levels.size() * static_cast<size_t>(k));
  for (int m : s.levels)
    for (int node : s.nodes)
      for (int c = 0; c < k; ++c) pts.push_back(u.value(m, node, c));
  return diameter(pts, k);
}

inline double oscillation(const SpaceTimeField& u, const Cylinder& c) {
  return oscillation(u, cylinder_nodes(u.grid(), c));
}

inline NodeSet full_node_set(const Grid& g) {
  NodeSet s;
  s.nodes.resize(static_cast<size_t>(g.num_nodes()));
  for (int i = 0; i < g.num_nodes(); ++i) s.nodes[static_cast<size_t>(i)] = i;
  s.levels.resize(static_cast<size_t>(g.num_levels()));
  for (int m = 0; m < g.num_levels(); ++m) s.levels[static_cast<size_t>(m)] = m;
  return s;
}

// Average over the node x level set of |u|^p (Euclidean norm over components).
inline double lp_mean(const SpaceTimeField& u, const NodeSet& s, double p) {
  if (s.nodes.empty() || s.levels.empty()) throw std::invalid_argument("lp_mean: empty region");
  double acc = 0;
  for (int m : s.levels)
    for (int node : s.nodes) {
      double n2 = 0;
      for (int c = 0; c < u.components(); ++c) {
        double v = u.value(m, node, c);
        n2 += v * v;
      }
      acc += std::pow(n2, 0.5 * p);
    }
  return acc / (static_cast<double>(s.nodes.size()) * static_cast<double>(s.levels.size()));
}

inline double lp_mean(const SpaceTimeField& u, const Cylinder& c, double p) {
  return lp_mean(u, cylinder_nodes(u.grid(), c), p);
}

// Forward Steklov average: [v]_h(x,t) = (1/h) int_t^{t+h} v(x,s) ds for
// t <= t_end - h, and 0 on the tail (t_end - h, t_end]. The integral is the
// exact one of the piecewise-linear interpolant in time (trapezoid rule).
inline SpaceTimeField steklov_average(const SpaceTimeField& u, double h) {
  const Grid& g = u.grid();
  if (!(h > 0) || !(h < g.t_end)) throw std::invalid_argument("steklov_average: need 0 < h < t_end");
  int k = u.components();
  std::vector<double> vals(static_cast<size_t>(g.num_levels()) * g.num_nodes() * k, 0.0);
  double tol = 1e-12 * std::max(1.0, g.t_end);
  for (int m = 0; m < g.num_levels(); ++m) {
    double t = g.time(m);
    if (t > g.t_end - h + tol) continue;  // zero tail
    double tb = t + h;
    int m_last = static_cast<int>(std::floor(tb / g.dt + 1e-12));
    m_last = std::min(m_last, g.num_levels() - 1);
    for (int node = 0; node < g.num_nodes(); ++node)
      for (int c = 0; c < k; ++c) {
        double acc = 0;
        for (int j = m; j < m_last; ++j)
          acc += 0.5 * g.dt * (u.value(j, node, c) + u.value(j + 1, node, c));
        double rem = tb - g.time(m_last);
        if (rem > tol && m_last + 1 < g.num_levels()) {
          double th = rem / g.dt;
          double vend = (1 - th) * u.value(m_last, node, c) + th * u.value(m_last + 1, node, c);
          acc += 0.5 * rem * (u.value(m_last, node, c) + vend);
        }
        vals[(static_cast<size_t>(m) * g.num_nodes() + node) * k + c] = acc / h;
      }
  }
  return SpaceTimeField(g, k, std::move(vals));
}

enum class SeminormAxis { space, time };

// max over admissible node pairs of |u(z)-u(z')| / gap^alpha along one axis.
// Pairs closer than 2 grid cells are excluded. Pair enumeration is strided
// deterministically when the full pair count would be excessive.
inline double holder_seminorm(const SpaceTimeField& u, double alpha, const NodeSet& s,
                              SeminormAxis axis) {
  const Grid& g = u.grid();
  int k = u.components();
  auto pair_value = [&](int m1, int n1, int m2, int n2) {
    double s2 = 0;
    for (int c = 0; c < k; ++c) {
      double d = u.value(m1, n1, c) - u.value(m2, n2, c);
      s2 += d * d;
    }
    return std::sqrt(s2);
  };
  double best = -1.0;
  if (axis == SeminormAxis::space) {
    double min_gap = 2.0 * g.h_max();
    size_t nn = s.nodes.size();
    size_t pair_count = nn * (nn - 1) / 2 * s.levels.size();
    size_t stride = std::max<size_t>(1, pair_count / 2000000);
    size_t counter = 0;
    for (int m : s.levels)
      for (size_t a = 0; a < nn; ++a)
        for (size_t b = a + 1; b < nn; ++b) {
          if (stride > 1 && (counter++ % stride) != 0) continue;
          double gap = (g.node_coord(s.nodes[a]) - g.node_coord(s.nodes[b])).norm();
          if (gap < min_gap) continue;
          best = std::max(best, pair_value(m, s.nodes[a], m, s.nodes[b]) / std::pow(gap, alpha));
        }
  } else {
    double min_gap = 2.0 * g.dt;
    for (int node : s.nodes)
      for (size_t a = 0; a < s.levels.size(); ++a)
        for (size_t b = a + 1; b < s.levels.size(); ++b) {
          double gap = std::abs(g.time(s.levels[a]) - g.time(s.levels[b]));
          if (gap < min_gap) continue;
          best = std::max(best, pair_value(s.levels[a], node, s.levels[b], node) / std::pow(gap, alpha));
        }
  }
  if (best < 0) throw std::invalid_argument("holder_seminorm: no admissible pair in region");
  return best;
}

}  // namespace parlab
