#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hypsep/hyperbolic.hpp"
#include "support/oracles.hpp"

namespace hypsep::poincare {
namespace {

using testing::random_ball_point;

/// Smallest origin distance over an even grid of geodesic parameters.
double grid_lca(const Vector& x, const Vector& y, int steps) {
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s <= steps; ++s) best = std::min(best, distance_to_origin(geodesic_point(x, y, double(s) / steps)));
  return best;
}

TEST(Distance, OriginAndRadialValue) {
  const Vector o = Vector::Zero(3);
  EXPECT_EQ(distance(o, o), 0.0);
  Vector x = Vector::Zero(3);
  x(0) = 0.5;
  EXPECT_NEAR(distance(o, x), 1.0986122886681098, 1e-12);
}

TEST(Distance, SymmetricAndMatchesTextbookFormula) {
  std::mt19937_64 g(1);
  for (int k = 0; k < 500; ++k) {
    const auto x = random_ball_point(g, 4, 0.95), y = random_ball_point(g, 4, 0.95);
    EXPECT_EQ(distance(x, y), distance(y, x));
    EXPECT_NEAR(distance(x, y), testing::naive_poincare_distance(x, y), 1e-9 * (1 + distance(x, y)));
  }
}

TEST(Distance, RadialIdentity) {
  std::mt19937_64 g(2);
  const Vector o = Vector::Zero(5);
  for (int k = 0; k < 1000; ++k) {
    const auto x = random_ball_point(g, 5, 0.99);
    EXPECT_NEAR(distance(o, x), 2.0 * std::atanh(x.norm()), 1e-10);
    EXPECT_NEAR(distance_to_origin(x), 2.0 * std::atanh(x.norm()), 1e-10);
  }
}

TEST(Distance, TriangleInequality) {
  std::mt19937_64 g(3);
  for (int k = 0; k < 10000; ++k) {
    const auto x = random_ball_point(g, 3, 0.99), y = random_ball_point(g, 3, 0.99), z = random_ball_point(g, 3, 0.99);
    EXPECT_LE(distance(x, z), distance(x, y) + distance(y, z) + 1e-9);
  }
}

TEST(Distance, PointsOutsideTheBallAreRejected) {
  Vector x = Vector::Zero(2);
  x(0) = 1.0;
  EXPECT_THROW(distance(x, Vector::Zero(2)), NumericDomain);
}

TEST(Geodesic, EndpointsAndOriginMidpoint) {
  std::mt19937_64 g(4);
  const auto x = random_ball_point(g, 3, 0.9), y = random_ball_point(g, 3, 0.9);
  EXPECT_LE((geodesic_point(x, y, 0.0) - x).norm(), 1e-12);
  EXPECT_LE((geodesic_point(x, y, 1.0) - y).norm(), 1e-12);
  EXPECT_LE(geodesic_point(x, Vector(-x), 0.5).norm(), 1e-12);
  EXPECT_THROW(geodesic_point(x, y, 1.5), NumericDomain);
}

TEST(Geodesic, Additivity) {
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 1000; ++k) {
    const auto x = random_ball_point(g, 4, 0.95), y = random_ball_point(g, 4, 0.95);
    const auto m = geodesic_point(x, y, u(g));
    EXPECT_NEAR(distance(x, m) + distance(m, y), distance(x, y), 1e-9);
  }
}

TEST(LcaDepth, SpecialConfigurations) {
  std::mt19937_64 g(6);
  const auto x = random_ball_point(g, 3, 0.9);
  EXPECT_NEAR(lca_depth(x, x), distance_to_origin(x), 1e-12);
  EXPECT_NEAR(lca_depth(x, Vector(-x)), 0.0, 1e-7);
  // y on the ray through x and further out: x itself is the closest point
  const Vector y = x.normalized() * 0.97;
  EXPECT_NEAR(lca_depth(x, y), distance_to_origin(x), 1e-12);
}

TEST(LcaDepth, MatchesGridSearch) {
  std::mt19937_64 g(7);
  for (int k = 0; k < 100; ++k) {
    const auto x = random_ball_point(g, 3, 0.97), y = random_ball_point(g, 3, 0.97);
    EXPECT_NEAR(lca_depth(x, y), grid_lca(x, y, 100000), 1e-4);
  }
}

TEST(LcaDepth, SymmetricAndBoundedByEndpoints) {
  std::mt19937_64 g(8);
  for (int k = 0; k < 2000; ++k) {
    const auto x = random_ball_point(g, 6, 0.99), y = random_ball_point(g, 6, 0.99);
    const double d = lca_depth(x, y);
    EXPECT_NEAR(d, lca_depth(y, x), 1e-12);
    EXPECT_LE(d, std::min(distance_to_origin(x), distance_to_origin(y)) + 1e-12);
    EXPECT_GE(d, 0.0);
  }
}

TEST(LcaDepth, GradientMatchesValueAndFiniteDifferences) {
  std::mt19937_64 g(9);
  const double h = 1e-6;
  for (int k = 0; k < 200; ++k) {
    const auto x = random_ball_point(g, 3, 0.9), y = random_ball_point(g, 3, 0.9);
    const auto r = lca_depth_with_grad(x, y);
    EXPECT_NEAR(r.value, lca_depth(x, y), 1e-12);
    for (Eigen::Index c = 0; c < 3; ++c) {
      Vector xp = x, xm = x, yp = y, ym = y;
      xp(c) += h;
      xm(c) -= h;
      yp(c) += h;
      ym(c) -= h;
      EXPECT_NEAR(r.grad_x(c), (lca_depth(xp, y) - lca_depth(xm, y)) / (2 * h), 1e-5 * (1 + std::abs(r.grad_x(c))));
      EXPECT_NEAR(r.grad_y(c), (lca_depth(x, yp) - lca_depth(x, ym)) / (2 * h), 1e-5 * (1 + std::abs(r.grad_y(c))));
    }
  }
}

TEST(Project, LeavesInteriorPointsAndClampsOthers) {
  Vector x = Vector::Zero(3);
  x(1) = 0.5;
  EXPECT_EQ(project(x, 1e-5), x);
  x(1) = 2.0;
  EXPECT_DOUBLE_EQ(project(x, 1e-5).norm(), 1.0 - 1e-5);
  project_in_place(x, 1e-5);
  EXPECT_DOUBLE_EQ(x.norm(), 1.0 - 1e-5);
}

TEST(RiemannianGrad, QuarterAtOrigin) {
  const Vector g = Vector::Constant(4, 2.0);
  EXPECT_EQ(riemannian_grad(g, Vector::Zero(4)), Vector::Constant(4, 0.5));
}

}  // namespace
}  // namespace hypsep::poincare
