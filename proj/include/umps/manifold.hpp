#pragma once

#include "umps/tensor.hpp"

#include <cstddef>

namespace umps {

/// Point (X, G) of the decoupled manifold
///   M_h = {(X, G) : X G = 0, ||X||_F = 1, G a rank-(n-r) orthogonal projector},
/// stored through its representation X = h v^T, G = I - v v^T with
/// ||h||_F = 1 and v^T v = I. Neither X nor G is kept in memory; the n x n
/// projector is never formed.
struct MhPoint {
  Matrix h;  // m x r
  Matrix v;  // n x r

  std::size_t rank_bound() const { return static_cast<std::size_t>(v.cols()); }

  /// X = h v^T.
  Matrix x() const { return h * v.transpose(); }

  /// G y = y - v (v^T y) for y with n rows.
  Matrix apply_g(const Matrix &y) const { return y - v * (v.transpose() * y); }
};

/// Tangent vector representation (K, V_p): K is tangent to the unit sphere
/// at h (<K, h> = 0) and V_p is orthogonal to v (v^T V_p = 0). The ambient
/// tangent is (K v^T + h V_p^T, -V_p v^T - v V_p^T).
struct TangentRep {
  Matrix k;    // m x r
  Matrix v_p;  // n x r
};

/// Weighting matrix M_{h,omega} = 2 omega I + h^T h of the metric.
struct MetricWeights {
  double omega = 1.0;
  Matrix m_h_omega;

  static MetricWeights at(const MhPoint &p, double omega);
};

inline constexpr double kDefaultOmega = 1.0;

/// Lift a unit-norm matrix of rank <= r onto M_h: h = U Sigma (renormalized),
/// v = the leading r right singular vectors. When the numerical rank is
/// below r, v is completed with further orthonormal singular vectors and the
/// matching columns of h carry the (near-)zero singular values.
///
/// Throws GaugeError when | ||x||_F - 1 | > 1e-6.
MhPoint lift(const Matrix &x, std::size_t r, double rank_tol = kDefaultRankTol);

/// Riemannian gradient of f(X) on M_h from the Euclidean gradient:
///   K = grad V - <grad V, h> h
///   V_p = G grad^T h M_{h,omega}^{-1}
TangentRep riemannian_grad(const MhPoint &p, const Matrix &eucl_grad,
                           double omega = kDefaultOmega);

/// <K1, K2> + <V_p1, V_p2 M_{h,omega}>.
double metric(const MhPoint &p, const TangentRep &t1, const TangentRep &t2,
              double omega = kDefaultOmega);

/// First-order retraction along -step * t:
///   h' = (h + K) / ||h + K||_F,  v' = (v + V_p)(I + V_p^T V_p)^{-1/2}
/// with K = -step t.k and V_p = -step t.v_p.
MhPoint retract(const MhPoint &p, const TangentRep &t, double step);

/// X-component of the ambient tangent, K v^T + h V_p^T.
Matrix ambient_tangent(const MhPoint &p, const TangentRep &t);

/// Numerical check that the unit sphere and the fixed-rank-k manifold meet
/// transversely at x: the normal spaces span{x} and
/// {U_perp Phi V_perp^T} must intersect only at 0, i.e. their stacked
/// bases have full column rank (relative singular-value test at `tol`).
///
/// Throws ShapeError when x is not unit norm or its numerical rank is not k.
bool check_transversal(const Matrix &x, std::size_t k, double tol = 1e-8);

}  // namespace umps
