#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "parlab/plaplace.hpp"
#include "parlab/report.hpp"

using namespace parlab;

namespace {

// Dense Gaussian elimination with partial pivoting; test-side linear oracle.
std::vector<double> dense_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
  size_t n = b.size();
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    for (size_t r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    std::swap(A[col], A[piv]);
    std::swap(b[col], b[piv]);
    for (size_t r = col + 1; r < n; ++r) {
      double f = A[r][col] / A[col][col];
      for (size_t c = col; c < n; ++c) A[r][c] -= f * A[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (size_t c = ri + 1; c < n; ++c) s -= A[ri][c] * x[c];
    x[ri] = s / A[ri][ri];
  }
  return x;
}

PLaplaceProblem heat_problem(int n, double t_end, double dt) {
  PLaplaceProblem prob;
  prob.p = 2.0;
  prob.mu = 0.0;
  prob.k = 1;
  prob.grid = make_grid_1d(0.0, M_PI, n, t_end, dt);
  prob.coeff = constant_coefficient(1.0);
  prob.initial = [](const SpaceVec& x, std::span<double> out) { out[0] = std::sin(x[0]); };
  prob.boundary = [](const SpaceVec&, double, std::span<double> out) { out[0] = 0.0; };
  return prob;
}

double heat_exact(double x, double t) { return std::exp(-t) * std::sin(x); }

double heat_max_error(int n, double dt, double t_end) {
  PLaplaceProblem prob = heat_problem(n, t_end, dt);
  SolveResult res = solve_cauchy_dirichlet(prob, SolverParams{});
  const Grid& g = prob.grid;
  double err = 0;
  for (int m = 0; m < g.num_levels(); ++m)
    for (int node = 0; node < g.num_nodes(); ++node)
      err = std::max(err, std::abs(res.field.value(m, node) - heat_exact(g.coord(0, node), g.time(m))));
  return err;
}

}  // namespace

TEST(StepImplicit, ConstantIsFixedPoint) {
  PLaplaceProblem prob;
  prob.p = 3.0;
  prob.mu = 0.2;
  prob.grid = make_grid_1d(0.0, 1.0, 17, 0.1, 0.05);
  prob.coeff = constant_coefficient(1.0);
  prob.boundary = [](const SpaceVec&, double, std::span<double> out) { out[0] = 2.5; };
  std::vector<double> state(17, 2.5);
  std::vector<double> next = step_implicit(state, 0.05, prob, SolverParams{});
  for (double v : next) EXPECT_NEAR(v, 2.5, 1e-14);
}

TEST(StepImplicit, MatchesTridiagonalHeatOracle) {
  int n = 41;
  PLaplaceProblem prob;
  prob.p = 2.0;
  prob.mu = 0.0;
  prob.grid = make_grid_1d(0.0, 1.0, n, 0.1, 0.01);
  prob.coeff = constant_coefficient(1.0);
  prob.boundary = [](const SpaceVec&, double, std::span<double> out) { out[0] = 0.0; };
  std::vector<double> state(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = prob.grid.coord(0, i);
    state[static_cast<size_t>(i)] = x * (1 - x) * std::exp(x);
  }
  state[0] = state[static_cast<size_t>(n - 1)] = 0.0;
  double dt = 0.01, h = prob.grid.h(0);

  std::vector<double> mine = step_implicit(state, dt, prob, SolverParams{});

  size_t ni = static_cast<size_t>(n - 2);
  std::vector<std::vector<double>> A(ni, std::vector<double>(ni, 0.0));
  std::vector<double> b(ni);
  double r = dt / (h * h);
  for (size_t i = 0; i < ni; ++i) {
    A[i][i] = 1.0 + 2.0 * r;
    if (i > 0) A[i][i - 1] = -r;
    if (i + 1 < ni) A[i][i + 1] = -r;
    b[i] = state[i + 1];
  }
  std::vector<double> oracle = dense_solve(A, b);
  double scale = 0;
  for (double v : oracle) scale = std::max(scale, std::abs(v));
  for (size_t i = 0; i < ni; ++i)
    EXPECT_NEAR(mine[i + 1], oracle[i], 1e-10 * scale) << "node " << i + 1;
}

TEST(StepImplicit, MatchesFivePointHeatOracle) {
  int n = 9;
  PLaplaceProblem prob;
  prob.p = 2.0;
  prob.mu = 0.0;
  prob.grid = make_grid_2d(0, 1, n, 0, 1, n, 0.02, 0.01);
  prob.coeff = constant_coefficient(1.0);
  prob.boundary = [](const SpaceVec&, double, std::span<double> out) { out[0] = 0.0; };
  const Grid& g = prob.grid;
  std::vector<double> state(static_cast<size_t>(g.num_nodes()), 0.0);
  for (int node = 0; node < g.num_nodes(); ++node) {
    SpaceVec x = g.node_coord(node);
    if (!g.is_boundary_node(node))
      state[static_cast<size_t>(node)] = std::sin(M_PI * x[0]) * x[1] * (1 - x[1]);
  }
  double dt = 0.01, h = g.h(0);
  std::vector<double> mine = step_implicit(state, dt, prob, SolverParams{});

  std::vector<int> interior;
  std::vector<int> slot(static_cast<size_t>(g.num_nodes()), -1);
  for (int node = 0; node < g.num_nodes(); ++node)
    if (!g.is_boundary_node(node)) {
      slot[static_cast<size_t>(node)] = static_cast<int>(interior.size());
      interior.push_back(node);
    }
  size_t ni = interior.size();
  std::vector<std::vector<double>> A(ni, std::vector<double>(ni, 0.0));
  std::vector<double> b(ni);
  double r = dt / (h * h);
  for (size_t s = 0; s < ni; ++s) {
    int node = interior[s];
    A[s][s] = 1.0 + 4.0 * r;
    for (int nb : {node - 1, node + 1, node - g.n[0], node + g.n[0]}) {
      if (slot[static_cast<size_t>(nb)] >= 0) A[s][static_cast<size_t>(slot[static_cast<size_t>(nb)])] = -r;
    }
    b[s] = state[static_cast<size_t>(node)];
  }
  std::vector<double> oracle = dense_solve(A, b);
  double scale = 0;
  for (double v : oracle) scale = std::max(scale, std::abs(v));
  for (size_t s = 0; s < ni; ++s)
    EXPECT_NEAR(mine[static_cast<size_t>(interior[s])], oracle[s], 1e-10 * scale);
}

TEST(StepImplicit, DissipatesL2WithZeroData) {
  PLaplaceProblem prob;
  prob.p = 1.5;
  prob.mu = 0.0;
  prob.k = 2;
  prob.grid = make_grid_1d(0.0, 1.0, 33, 0.05, 0.005);
  prob.coeff = constant_coefficient(1.0);
  prob.initial = [](const SpaceVec& x, std::span<double> out) {
    out[0] = std::sin(M_PI * x[0]);
    out[1] = std::sin(2 * M_PI * x[0]);
  };
  prob.boundary = [](const SpaceVec&, double, std::span<double> out) { out[0] = out[1] = 0.0; };
  SolveResult res = solve_cauchy_dirichlet(prob, SolverParams{});
  const Grid& g = prob.grid;
  for (int c = 0; c < 2; ++c) {
    double prev = 1e300;
    for (int m = 0; m < g.num_levels(); ++m) {
      double norm = 0;
      for (int node = 0; node < g.num_nodes(); ++node) {
        double v = res.field.value(m, node, c);
        norm += v * v;
      }
      EXPECT_LE(norm, prev * (1 + 1e-12)) << "component " << c << " level " << m;
      prev = norm;
    }
  }
}

TEST(SolveCauchyDirichlet, HeatOracleSmall) {
  EXPECT_LE(heat_max_error(65, 1e-3, 0.05), 1e-3);
}

TEST(SolveCauchyDirichlet, MonotoneUnderRefinement) {
  double coarse = heat_max_error(33, 2e-3, 0.04);
  double fine = heat_max_error(65, 1e-3, 0.04);
  EXPECT_LT(fine, coarse);
}

TEST(SolveCauchyDirichlet, ConstantDataStaysConstant) {
  PLaplaceProblem prob;
  prob.p = 3.0;
  prob.mu = 0.1;
  prob.grid = make_grid_1d(0.0, 1.0, 17, 0.1, 0.01);
  prob.coeff = constant_coefficient(2.0);
  prob.initial = [](const SpaceVec&, std::span<double> out) { out[0] = 1.25; };
  prob.boundary = [](const SpaceVec&, double, std::span<double> out) { out[0] = 1.25; };
  SolveResult res = solve_cauchy_dirichlet(prob, SolverParams{});
  for (double v : res.field.data()) EXPECT_NEAR(v, 1.25, 1e-12);
}

TEST(SolveCauchyDirichlet, ScalingCovariance) {
  // u -> c u with data scaled by c, mu by c, time by c^{2-p}
  double p = 3.0, c = 2.0;
  double dt = 1e-3, t_end = 0.02;
  auto mk = [&](double amp, double mu, double dts, double tends) {
    PLaplaceProblem prob;
    prob.p = p;
    prob.mu = mu;
    prob.grid = make_grid_1d(0.0, 1.0, 33, tends, dts);
    prob.coeff = constant_coefficient(1.0);
    prob.initial = [amp](const SpaceVec& x, std::span<double> out) {
      out[0] = amp * std::sin(M_PI * x[0]);
    };
    prob.boundary = [](const SpaceVec&, double, std::span<double> out) { out[0] = 0.0; };
    return prob;
  };
  double scale_t = std::pow(c, 2.0 - p);
  PLaplaceProblem base = mk(1.0, 0.25, dt, t_end);
  PLaplaceProblem scaled = mk(c, c * 0.25, dt * scale_t, t_end * scale_t);
  SolverParams params;
  params.newton_tol = 1e-13;
  SolveResult rb = solve_cauchy_dirichlet(base, params);
  SolveResult rs = solve_cauchy_dirichlet(scaled, params);
  ASSERT_EQ(rb.field.grid().num_levels(), rs.field.grid().num_levels());
  for (int m = 0; m < rb.field.grid().num_levels(); ++m)
    for (int node = 0; node < 33; ++node)
      EXPECT_NEAR(rs.field.value(m, node), c * rb.field.value(m, node), 1e-9);
}

TEST(FreezeCoefficients, ConstantCoefficientReproducesSolution) {
  PLaplaceProblem prob;
  prob.p = 1.5;
  prob.mu = 0.1;
  prob.grid = make_grid_1d(0.0, 1.0, 65, 0.2, 0.005);
  prob.coeff = constant_coefficient(1.0);
  prob.initial = [](const SpaceVec& x, std::span<double> out) { out[0] = std::sin(M_PI * x[0]); };
  prob.boundary = [](const SpaceVec&, double, std::span<double> out) { out[0] = 0.0; };
  SolverParams params;
  params.newton_tol = 1e-12;
  SolveResult res = solve_cauchy_dirichlet(prob, params);
  Cylinder Q = standard_cylinder(Point(0.5, 0.15), 0.25, 0.0625);
  PLaplaceProblem frozen = freeze_coefficients(prob, res.field, SpaceVec(0.5), Q);
  SolveResult wres = solve_cauchy_dirichlet(frozen, params);
  NodeSet set = cylinder_nodes(prob.grid, Q);
  for (int m : set.levels) {
    int s = m - wres.level_offset;
    for (int node : set.nodes)
      EXPECT_NEAR(wres.field.value(s, node), res.field.value(m, node), 1e-9);
  }
}

TEST(FreezeCoefficients, FrozenCoefficientIsSpatiallyConstantAndClose) {
  Grid g = make_grid_1d(0.0, 1.0, 65, 0.2, 0.005);
  PLaplaceProblem prob;
  prob.p = 2.0;
  prob.grid = g;
  prob.coeff = holder_bump_coefficient(0.5, SpaceVec(0.5), 0.5, g);
  prob.initial = [](const SpaceVec&, std::span<double> out) { out[0] = 0.0; };
  prob.boundary = [](const SpaceVec&, double, std::span<double> out) { out[0] = 0.0; };
  SpaceTimeField u = SpaceTimeField::sample_scalar(g, [](const SpaceVec&, double) { return 0.0; });
  double R = 0.25;
  Cylinder Q = standard_cylinder(Point(0.5, 0.15), R, 0.0625);
  PLaplaceProblem frozen = freeze_coefficients(prob, u, SpaceVec(0.5), Q);
  NodeSet set = cylinder_nodes(g, Q);
  double x_independent_dev = 0, gap = 0;
  double ref = frozen.coeff(g.node_coord(set.nodes.front()), 0.1);
  for (int node : set.nodes) {
    SpaceVec x = g.node_coord(node);
    x_independent_dev = std::max(x_independent_dev, std::abs(frozen.coeff(x, 0.1) - ref));
    gap = std::max(gap, std::abs(prob.coeff(x, 0.1) - frozen.coeff(x, 0.1)));
  }
  EXPECT_EQ(x_independent_dev, 0.0);
  EXPECT_LE(gap, prob.coeff.c_upper * std::pow(R, 0.5) + 1e-12);
  EXPECT_THROW(freeze_coefficients(prob, u, SpaceVec(0.9), Q), std::invalid_argument);
}

TEST(WeakFormResidual, ZeroTestFieldAndSupportCheck) {
  PLaplaceProblem prob = heat_problem(33, 0.05, 0.005);
  SpaceTimeField u = SpaceTimeField::sample_scalar(prob.grid, [](const SpaceVec& x, double t) {
    return heat_exact(x[0], t);
  });
  SpaceTimeField zero = SpaceTimeField::sample_scalar(prob.grid, [](const SpaceVec&, double) { return 0.0; });
  EXPECT_DOUBLE_EQ(weak_form_residual(u, prob, zero), 0.0);
  SpaceTimeField bad = SpaceTimeField::sample_scalar(prob.grid, [](const SpaceVec&, double) { return 1.0; });
  EXPECT_THROW(weak_form_residual(u, prob, bad), std::invalid_argument);
}

namespace {

SpaceTimeField bump_test_field(const Grid& g) {
  return SpaceTimeField::sample_scalar(g, [&](const SpaceVec& x, double t) {
    double sx = std::sin(M_PI * (x[0] - g.lo[0]) / (g.hi[0] - g.lo[0]));
    double st = 1.0 - t / g.t_end;  // vanishes at final time
    return sx * sx * st;
  });
}

}  // namespace

TEST(WeakFormResidual, ExactSolutionHasQuadratureLevelResidual) {
  PLaplaceProblem prob = heat_problem(129, 0.05, 0.05 / 64);
  SpaceTimeField u = SpaceTimeField::sample_scalar(prob.grid, [](const SpaceVec& x, double t) {
    return heat_exact(x[0], t);
  });
  double res = weak_form_residual(u, prob, bump_test_field(prob.grid));
  EXPECT_LE(std::abs(res), 5e-4);
}

TEST(WeakFormResidual, SolverOutputConvergesInDt) {
  std::vector<double> dts, errs;
  for (int lvl = 0; lvl < 3; ++lvl) {
    int n = 33 << lvl;
    double dt = 4e-3 / (1 << lvl);
    PLaplaceProblem prob = heat_problem(n + 1, 0.04, dt);
    SolveResult r = solve_cauchy_dirichlet(prob, SolverParams{});
    double res = std::abs(weak_form_residual(r.field, prob, bump_test_field(prob.grid)));
    dts.push_back(dt);
    errs.push_back(res);
  }
  EXPECT_GE(loglog_slope(dts, errs), 0.9);
}

TEST(SolverFailureTest, CarriesState) {
  PLaplaceProblem prob = heat_problem(33, 0.01, 0.01);
  SolverParams params;
  params.max_newton_iters = 0;
  params.picard_fallback = false;
  EXPECT_THROW(solve_cauchy_dirichlet(prob, params), SolverFailure);
}
