#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "hypsep/error.hpp"

/// Geometry of the Poincare ball with curvature -1.
namespace hypsep::poincare {

using Vector = Eigen::VectorXd;
using ConstRef = Eigen::Ref<const Eigen::VectorXd>;

inline constexpr double kDefaultBallEps = 1e-5;

namespace detail {
inline void require_inside(double sq_norm) {
  if (!(sq_norm < 1.0)) throw NumericDomain("point on or outside the unit ball");
}
}  // namespace detail

/// arcosh(1 + z), accurate for small z.
inline double acosh1p(double z) { return std::log1p(z + std::sqrt(z * (z + 2.0))); }

inline double distance(ConstRef x, ConstRef y) {
  const double nx = x.squaredNorm(), ny = y.squaredNorm();
  detail::require_inside(nx);
  detail::require_inside(ny);
  const double q = (x - y).squaredNorm();
  return acosh1p(2.0 * q / ((1.0 - nx) * (1.0 - ny)));
}

/// Distance from the origin: 2 artanh |x|.
inline double distance_to_origin(ConstRef x) {
  const double n = x.norm();
  detail::require_inside(n * n);
  return 2.0 * std::atanh(n);
}

/// Mobius addition x (+) y.
inline Vector mobius_add(ConstRef x, ConstRef y) {
  const double xy = x.dot(y), nx = x.squaredNorm(), ny = y.squaredNorm();
  const double den = 1.0 + 2.0 * xy + nx * ny;
  return ((1.0 + 2.0 * xy + ny) * x + (1.0 - nx) * y) / den;
}

/// Mobius scalar multiplication t (x) v.
inline Vector mobius_scale(double t, ConstRef v) {
  const double n = v.norm();
  if (n == 0.0) return v;
  return std::tanh(t * std::atanh(n)) / n * v;
}

/// Point at fraction t of the way from x to y along their geodesic: x (+) (t (x) ((-x) (+) y)).
inline Vector geodesic_point(ConstRef x, ConstRef y, double t) {
  detail::require_inside(x.squaredNorm());
  detail::require_inside(y.squaredNorm());
  if (t < 0.0 || t > 1.0) throw NumericDomain("geodesic parameter outside [0, 1]");
  const Vector minus_x = -x;
  return mobius_add(x, mobius_scale(t, mobius_add(minus_x, y)));
}

/// Depth of the least common ancestor of two leaves: the hyperbolic distance from the origin
/// to the closest point of the geodesic segment [x, y].
///
/// Closed form: the segment is {aX + bY : a, b >= 0} on the hyperboloid. When the foot of the
/// perpendicular from the origin falls inside the segment (both base angles of the triangle
/// o, x, y are non-obtuse) the depth satisfies
///
///     sinh^2(depth) = 4 (|x|^2 |y|^2 - <x,y>^2) / (|x - y|^2 ((1 - |x|^2)(1 - |y|^2) + |x - y|^2)),
///
/// otherwise the nearer endpoint is closest.
struct LcaDepth {
  double value = 0;
  Vector grad_x;
  Vector grad_y;
};

namespace detail {

enum class LcaRegime { same_point, at_x, at_y, interior };

struct LcaScalars {
  double nx, ny, p, q;
};

inline LcaRegime lca_regime(const LcaScalars& s) {
  if (s.q == 0.0) return LcaRegime::same_point;
  // base angle at x is obtuse: closest point of the segment is x itself
  if (s.nx * (1.0 + s.ny) < s.p * (1.0 + s.nx)) return LcaRegime::at_x;
  if (s.ny * (1.0 + s.nx) < s.p * (1.0 + s.ny)) return LcaRegime::at_y;
  return LcaRegime::interior;
}

}  // namespace detail

inline double lca_depth(ConstRef x, ConstRef y) {
  const detail::LcaScalars s{x.squaredNorm(), y.squaredNorm(), x.dot(y), (x - y).squaredNorm()};
  detail::require_inside(s.nx);
  detail::require_inside(s.ny);
  switch (detail::lca_regime(s)) {
    case detail::LcaRegime::same_point:
    case detail::LcaRegime::at_x: return 2.0 * std::atanh(std::sqrt(s.nx));
    case detail::LcaRegime::at_y: return 2.0 * std::atanh(std::sqrt(s.ny));
    case detail::LcaRegime::interior: break;
  }
  const double gram = std::max(0.0, s.nx * s.ny - s.p * s.p);
  const double w = (1.0 - s.nx) * (1.0 - s.ny);
  return std::asinh(std::sqrt(4.0 * gram / (s.q * (w + s.q))));
}

/// lca_depth together with its Euclidean gradient in both arguments.
inline LcaDepth lca_depth_with_grad(ConstRef x, ConstRef y) {
  const detail::LcaScalars s{x.squaredNorm(), y.squaredNorm(), x.dot(y), (x - y).squaredNorm()};
  detail::require_inside(s.nx);
  detail::require_inside(s.ny);
  LcaDepth out{0.0, Vector::Zero(x.size()), Vector::Zero(y.size())};

  auto endpoint = [](ConstRef v, double nv, Vector& grad) {
    const double r = std::sqrt(nv);
    if (r > 0.0) grad = 2.0 / (r * (1.0 - nv)) * v;
    return 2.0 * std::atanh(r);
  };

  switch (detail::lca_regime(s)) {
    case detail::LcaRegime::same_point: {
      // both leaves coincide; split the endpoint gradient evenly between them
      out.value = endpoint(x, s.nx, out.grad_x);
      out.grad_x *= 0.5;
      out.grad_y = out.grad_x;
      return out;
    }
    case detail::LcaRegime::at_x: out.value = endpoint(x, s.nx, out.grad_x); return out;
    case detail::LcaRegime::at_y: out.value = endpoint(y, s.ny, out.grad_y); return out;
    case detail::LcaRegime::interior: break;
  }

  const double gram = std::max(0.0, s.nx * s.ny - s.p * s.p);
  const double w = (1.0 - s.nx) * (1.0 - s.ny);
  const double den = s.q * (w + s.q);
  const double S = 4.0 * gram / den;
  out.value = std::asinh(std::sqrt(S));
  if (S <= 1e-300) return out;  // origin lies on the geodesic: depth has a kink here

  const Vector diff = x - y;
  // gradients of the building blocks with respect to x; y follows by symmetry
  const Vector dgram_x = 2.0 * s.ny * x - 2.0 * s.p * y;
  const Vector dgram_y = 2.0 * s.nx * y - 2.0 * s.p * x;
  const Vector dq_x = 2.0 * diff;
  const Vector dw_x = -2.0 * (1.0 - s.ny) * x;
  const Vector dw_y = -2.0 * (1.0 - s.nx) * y;

  // d den = dq (w + q) + q (dw + dq)
  const Vector dden_x = dq_x * (w + s.q) + s.q * (dw_x + dq_x);
  const Vector dden_y = -dq_x * (w + s.q) + s.q * (dw_y - dq_x);

  const Vector dS_x = 4.0 * (dgram_x * den - gram * dden_x) / (den * den);
  const Vector dS_y = 4.0 * (dgram_y * den - gram * dden_y) / (den * den);

  const double ddepth_dS = 1.0 / (2.0 * std::sqrt(S) * std::sqrt(1.0 + S));
  out.grad_x = ddepth_dS * dS_x;
  out.grad_y = ddepth_dS * dS_y;
  return out;
}

/// Rescales x to norm at most 1 - eps.
inline Vector project(ConstRef x, double eps = kDefaultBallEps) {
  if (!(eps > 0.0 && eps < 1.0)) throw NumericDomain("ball epsilon must lie in (0, 1)");
  const double n = x.norm(), max_norm = 1.0 - eps;
  if (n <= max_norm) return x;
  return x * (max_norm / n);
}

inline void project_in_place(Eigen::Ref<Eigen::VectorXd> x, double eps = kDefaultBallEps) {
  const double n = x.norm(), max_norm = 1.0 - eps;
  if (n > max_norm) x *= max_norm / n;
}

/// Euclidean gradient to Riemannian gradient: scale by the inverse metric ((1 - |x|^2) / 2)^2.
inline Vector riemannian_grad(ConstRef euclidean_grad, ConstRef x) {
  const double f = 0.5 * (1.0 - x.squaredNorm());
  return euclidean_grad * (f * f);
}

}  // namespace hypsep::poincare
