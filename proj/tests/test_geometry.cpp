#include <gtest/gtest.h>

#include <random>

#include "parlab/geometry.hpp"

using namespace parlab;

TEST(IntrinsicCylinder, LambdaOneMatchesStandard) {
  Cylinder c = intrinsic_cylinder(Point(0.0, 1.0), 0.5, 1.0, 3.0);
  EXPECT_DOUBLE_EQ(c.duration, 0.25);
  EXPECT_EQ(c.cross_section, CrossSection::ball);
  EXPECT_EQ(c.time_kind, TimeKind::backward);
}

TEST(IntrinsicCylinder, QuadraticCaseIsLambdaIndependent) {
  for (double lambda : {0.1, 1.0, 7.5}) {
    Cylinder c = intrinsic_cylinder(Point(0.0, 1.0), 0.5, lambda, 2.0);
    EXPECT_DOUBLE_EQ(c.duration, 0.25);
  }
}

TEST(IntrinsicCylinder, HandEvaluatedDuration) {
  // lambda^{2-p} rho^2 = 4^{-1} * 1 = 0.25
  Cylinder c = intrinsic_cylinder(Point(0.0, 1.0), 1.0, 4.0, 3.0);
  EXPECT_NEAR(c.duration, 0.25, 1e-15);
}

TEST(IntrinsicCylinder, DurationMonotoneInLambda) {
  double prev_deg = 1e300, prev_sing = 0.0;
  for (double lambda : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    double deg = intrinsic_cylinder(Point(0.0, 1.0), 0.3, lambda, 3.0).duration;
    double sing = intrinsic_cylinder(Point(0.0, 1.0), 0.3, lambda, 1.5).duration;
    EXPECT_LT(deg, prev_deg);   // strictly decreasing for p > 2
    EXPECT_GT(sing, prev_sing); // strictly increasing for p < 2
    prev_deg = deg;
    prev_sing = sing;
  }
}

TEST(IntrinsicCylinder, RejectsBadArguments) {
  EXPECT_THROW(intrinsic_cylinder(Point(0.0, 0.0), -1.0, 1.0, 2.0), std::invalid_argument);
  EXPECT_THROW(intrinsic_cylinder(Point(0.0, 0.0), 1.0, 0.0, 2.0), std::invalid_argument);
}

TEST(DnlCylinder, UnitValueGivesRhoToP) {
  Cylinder c = dnl_intrinsic_cylinder(Point(0.0, 0.0), 0.5, 1.0, 1.5, 2.0);
  EXPECT_NEAR(c.duration, std::pow(0.5, 1.5), 1e-15);
  EXPECT_EQ(c.cross_section, CrossSection::cube);
  EXPECT_EQ(c.time_kind, TimeKind::symmetric);
}

TEST(DnlCylinder, HandEvaluatedHalfDuration) {
  // u0^{q+1-p} rho^p = 4^{1} * 1 = 4
  Cylinder c = dnl_intrinsic_cylinder(Point(0.0, 0.0), 1.0, 4.0, 2.0, 2.0);
  EXPECT_NEAR(c.duration, 4.0, 1e-15);
}

TEST(DnlCylinder, HalfDurationScalesLikeRhoToP) {
  double p = 1.5, q = 2.0;
  double base = dnl_intrinsic_cylinder(Point(0.0, 0.0), 0.2, 3.0, p, q).duration;
  double scaled = dnl_intrinsic_cylinder(Point(0.0, 0.0), 0.4, 3.0, p, q).duration;
  EXPECT_NEAR(scaled / base, std::pow(2.0, p), 1e-12);
}

TEST(DnlCylinder, RejectsNonPositiveValue) {
  EXPECT_THROW(dnl_intrinsic_cylinder(Point(0.0, 0.0), 1.0, 0.0, 2.0, 2.0), std::invalid_argument);
}

TEST(ParDistance, BasicValues) {
  EXPECT_DOUBLE_EQ(par_distance(Point(0.3, 0.7), Point(0.3, 0.7)), 0.0);
  EXPECT_DOUBLE_EQ(par_distance(Point(0.0, 0.0), Point(0.0, 1.0)), 1.0);
  EXPECT_DOUBLE_EQ(par_distance(Point(1.0, 0.0, 0.0), Point(0.0, 0.0, 4.0)), 3.0);
}

TEST(ParDistance, MetricPropertiesOnSampledTriples) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    Point a(dist(rng), dist(rng), dist(rng));
    Point b(dist(rng), dist(rng), dist(rng));
    Point c(dist(rng), dist(rng), dist(rng));
    EXPECT_DOUBLE_EQ(par_distance(a, b), par_distance(b, a));
    EXPECT_LE(par_distance(a, c), par_distance(a, b) + par_distance(b, c) + 1e-12);
    EXPECT_GE(par_distance(a, b), 0.0);
  }
  Point z(0.1, 0.2, 0.3);
  EXPECT_EQ(par_distance(z, z), 0.0);
}

TEST(IntrinsicParDistance, ReducesToParDistance) {
  Point a(0.0, 0.5, 0.1), b(1.0, -0.5, 0.9);
  EXPECT_DOUBLE_EQ(intrinsic_par_distance(a, b, 1.0, 3.0), par_distance(a, b));
  for (double lambda : {0.2, 1.0, 5.0})
    EXPECT_DOUBLE_EQ(intrinsic_par_distance(a, b, lambda, 2.0), par_distance(a, b));
}

TEST(IntrinsicParDistance, HandEvaluated) {
  // sqrt(4^{3-2} * 1) = 2
  Point a(0.0, 0.0), b(0.0, 1.0);
  EXPECT_NEAR(intrinsic_par_distance(a, b, 4.0, 3.0), 2.0, 1e-15);
}

TEST(BoundaryDistance, InteriorPointOnUnitBox) {
  Grid g = make_grid_1d(0.0, 1.0, 21, 1.0, 0.05);
  std::vector<Point> K = {Point(0.5, 0.5)};
  BoundaryDistance b = par_boundary_distance(K, g);
  EXPECT_NEAR(b.distance, 0.5, 1e-12);
  EXPECT_NEAR(b.rho, 0.125, 1e-12);
}

TEST(BoundaryDistance, LateralTouchGivesZero) {
  Grid g = make_grid_1d(0.0, 1.0, 21, 1.0, 0.05);
  std::vector<Point> K = {Point(0.0, 0.5)};
  BoundaryDistance b = par_boundary_distance(K, g);
  EXPECT_NEAR(b.distance, 0.0, 1e-12);
  EXPECT_NEAR(b.rho, 0.0, 1e-12);
}

TEST(BoundaryDistance, ShrinkingSetIsMonotone) {
  Grid g = make_grid_1d(0.0, 1.0, 21, 1.0, 0.05);
  std::vector<Point> big = {Point(0.5, 0.5), Point(0.25, 0.5), Point(0.5, 0.25)};
  std::vector<Point> small = {Point(0.5, 0.5)};
  EXPECT_LE(par_boundary_distance(big, g).distance, par_boundary_distance(small, g).distance);
}

TEST(CylinderNodes, ContainmentUnderRadiusGrowth) {
  Grid g = make_grid_2d(-1, 1, 21, -1, 1, 21, 1.0, 0.01);
  Point z0(0.0, 0.0, 1.0);
  NodeSet small = cylinder_nodes(g, intrinsic_cylinder(z0, 0.3, 2.0, 3.0));
  NodeSet big = cylinder_nodes(g, intrinsic_cylinder(z0, 0.6, 2.0, 3.0));
  for (int node : small.nodes)
    EXPECT_NE(std::find(big.nodes.begin(), big.nodes.end(), node), big.nodes.end());
  for (int lvl : small.levels)
    EXPECT_NE(std::find(big.levels.begin(), big.levels.end(), lvl), big.levels.end());
}

TEST(CylinderNodes, RejectsTooCoarseRegions) {
  Grid g = make_grid_1d(0.0, 1.0, 11, 1.0, 0.1);
  Cylinder tiny = standard_cylinder(Point(0.5, 1.0), 0.05, 0.5);  // one node across
  EXPECT_THROW(cylinder_nodes(g, tiny), std::invalid_argument);
}

TEST(CylinderNodes, TimeWindowInclusive) {
  Grid g = make_grid_1d(0.0, 1.0, 11, 1.0, 0.1);
  Cylinder c = standard_cylinder(Point(0.5, 1.0), 0.3, 1.0);
  NodeSet s = cylinder_nodes(g, c);
  EXPECT_EQ(s.levels.size(), 11u);  // all levels of [0, 1]
}

TEST(Grid, InvariantsEnforced) {
  EXPECT_THROW(make_grid_1d(0.0, 1.0, 4, 1.0, 0.1), std::invalid_argument);
  EXPECT_THROW(make_grid_1d(0.0, 1.0, 11, 1.0, -0.1), std::invalid_argument);
  EXPECT_THROW(make_grid_1d(1.0, 0.0, 11, 1.0, 0.1), std::invalid_argument);
  Grid g = make_grid_1d(0.0, 2.0, 11, 1.0, 0.1);
  EXPECT_DOUBLE_EQ(g.h(0), 0.2);
  EXPECT_EQ(g.num_levels(), 11);
}
