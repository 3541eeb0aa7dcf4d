#include "umps/manifold.hpp"

#include "umps/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace umps {
namespace {

constexpr double kLiftNormTol = 1e-6;

std::string shape_str(const Matrix &m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

MetricWeights MetricWeights::at(const MhPoint &p, double omega) {
  const Eigen::Index r = p.h.cols();
  return {omega, 2.0 * omega * Matrix::Identity(r, r) + p.h.transpose() * p.h};
}

MhPoint lift(const Matrix &x, std::size_t r, double rank_tol) {
  const Eigen::Index m = x.rows();
  const Eigen::Index n = x.cols();
  const auto rr = static_cast<Eigen::Index>(r);
  if (r < 1 || rr > n)
    throw ShapeError("lift: rank bound " + std::to_string(r) +
                     " must lie in [1, " + std::to_string(n) + "]");
  if (!x.allFinite()) throw NonFiniteError("lift: non-finite entries");
  const double norm = x.norm();
  if (std::abs(norm - 1.0) > kLiftNormTol)
    throw GaugeError("lift: ||X||_F = " + std::to_string(norm) +
                     " drifted away from 1");

  const Eigen::Index thin = std::min(m, n);
  const unsigned v_flag = rr > thin ? Eigen::ComputeFullV : Eigen::ComputeThinV;
  Eigen::BDCSVD<Matrix> dec(x, Eigen::ComputeThinU | v_flag);
  const Vector &s = dec.singularValues();

  // At most r singular triplets are kept. Columns past the numerical rank
  // are padding: v keeps orthonormal singular vectors there, h is zero.
  Eigen::Index q = 0;
  while (q < std::min(rr, thin) && s(q) > rank_tol * s(0)) ++q;
  Matrix h = Matrix::Zero(m, rr);
  h.leftCols(q) = dec.matrixU().leftCols(q) * s.head(q).asDiagonal();
  Matrix v = dec.matrixV().leftCols(rr);
  h /= h.norm();
  return {std::move(h), std::move(v)};
}

TangentRep riemannian_grad(const MhPoint &p, const Matrix &eucl_grad,
                           double omega) {
  if (eucl_grad.rows() != p.h.rows() || eucl_grad.cols() != p.v.rows())
    throw ShapeError("riemannian_grad: gradient is " + shape_str(eucl_grad) +
                     ", point is " + std::to_string(p.h.rows()) + "x" +
                     std::to_string(p.v.rows()));
  if (!(omega > 0.0)) throw ShapeError("riemannian_grad: omega must be positive");

  const Matrix gv = eucl_grad * p.v;
  Matrix k = gv - (gv.cwiseProduct(p.h).sum()) * p.h;

  const Matrix gy = p.apply_g(eucl_grad.transpose() * p.h);
  const MetricWeights w = MetricWeights::at(p, omega);
  const Eigen::LLT<Matrix> llt(w.m_h_omega);
  Matrix v_p = llt.solve(gy.transpose()).transpose();
  return {std::move(k), std::move(v_p)};
}

double metric(const MhPoint &p, const TangentRep &t1, const TangentRep &t2,
              double omega) {
  const MetricWeights w = MetricWeights::at(p, omega);
  return t1.k.cwiseProduct(t2.k).sum() +
         t1.v_p.cwiseProduct(t2.v_p * w.m_h_omega).sum();
}

MhPoint retract(const MhPoint &p, const TangentRep &t, double step) {
  if (t.k.rows() != p.h.rows() || t.k.cols() != p.h.cols() ||
      t.v_p.rows() != p.v.rows() || t.v_p.cols() != p.v.cols())
    throw ShapeError("retract: tangent shape does not match the point");
  // Renormalizing h and re-orthonormalizing v would move p by an ulp.
  if (step == 0.0) return p;

  Matrix h = p.h - step * t.k;
  const double norm = h.norm();
  if (!(norm > 1e-300) || !std::isfinite(norm))
    throw StepError("retract: ||h + K||_F vanished; step too large");
  h /= norm;

  const Matrix v_p = -step * t.v_p;
  const Eigen::Index r = p.v.cols();
  const Matrix gram = Matrix::Identity(r, r) + v_p.transpose() * v_p;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Matrix inv_sqrt = eig.eigenvectors() *
                          eig.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                          eig.eigenvectors().transpose();
  Matrix v = (p.v + v_p) * inv_sqrt;
  return {std::move(h), std::move(v)};
}

Matrix ambient_tangent(const MhPoint &p, const TangentRep &t) {
  return t.k * p.v.transpose() + p.h * t.v_p.transpose();
}

bool check_transversal(const Matrix &x, std::size_t k, double tol) {
  const Eigen::Index m = x.rows();
  const Eigen::Index n = x.cols();
  const auto kk = static_cast<Eigen::Index>(k);
  if (k < 1 || kk > std::min(m, n))
    throw ShapeError("check_transversal: rank k out of range");
  if (std::abs(x.norm() - 1.0) > kLiftNormTol)
    throw ShapeError("check_transversal: x is not on the unit sphere");

  Eigen::JacobiSVD<Matrix> dec(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector &s = dec.singularValues();
  Eigen::Index numerical_rank = 0;
  while (numerical_rank < s.size() && s(numerical_rank) > tol * s(0))
    ++numerical_rank;
  if (numerical_rank != kk)
    throw ShapeError("check_transversal: numerical rank " +
                     std::to_string(numerical_rank) + " differs from k = " +
                     std::to_string(k) + " (rank deficient input)");

  const Matrix u_perp = dec.matrixU().rightCols(m - kk);
  const Matrix v_perp = dec.matrixV().rightCols(n - kk);

  // Columns: vec(x), then vec(u_perp_i v_perp_j^T) for every (i, j).
  const Eigen::Index normal_dim = 1 + (m - kk) * (n - kk);
  Matrix basis(m * n, normal_dim);
  basis.col(0) = Eigen::Map<const Vector>(x.data(), m * n);
  Eigen::Index col = 1;
  for (Eigen::Index i = 0; i < m - kk; ++i) {
    for (Eigen::Index j = 0; j < n - kk; ++j, ++col) {
      const Matrix w = u_perp.col(i) * v_perp.col(j).transpose();
      basis.col(col) = Eigen::Map<const Vector>(w.data(), m * n);
    }
  }
  const Vector sv = Eigen::JacobiSVD<Matrix>(basis).singularValues();
  return sv(sv.size() - 1) > tol * sv(0);
}

}  // namespace umps
