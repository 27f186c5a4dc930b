#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "psdmanopt/cost_models.hpp"
#include "psdmanopt/matrix_kernel.hpp"

namespace psdmanopt {

/// Point on the fixed-rank Hermitian PSD manifold, stored as the compact
/// eigenpair X = U diag(sigma) U* with sigma descending and positive.
class EigenPoint {
 public:
  EigenPoint(CMatrix U, RVector sigma)
      : U_(std::move(U)), sigma_(std::move(sigma)) {
    const Index n = U_.rows(), p = U_.cols();
    if (sigma_.size() != p)
      throw std::invalid_argument("EigenPoint: sigma length mismatch");
    if (!U_.allFinite() || !sigma_.allFinite())
      throw std::invalid_argument("EigenPoint: non-finite entries");
    if ((U_.adjoint() * U_ - CMatrix::Identity(p, p)).norm() > 1e-8 * std::sqrt(double(p)))
      throw std::invalid_argument("EigenPoint: U does not have orthonormal columns");
    for (Index i = 0; i < p; ++i) {
      if (!(sigma_(i) > 0))
        throw BoundaryError("EigenPoint: eigenvalue not positive");
      if (i > 0 && sigma_(i) > sigma_(i - 1) * (1 + 1e-12))
        throw std::invalid_argument("EigenPoint: sigma not descending");
    }
    if (sigma_(p - 1) <= kRankTol * sigma_(0))
      throw BoundaryError("EigenPoint: numerically rank-deficient");
    (void)n;
  }

  Index n() const { return U_.rows(); }
  Index p() const { return U_.cols(); }
  const CMatrix& U() const { return U_; }
  const RVector& sigma() const { return sigma_; }

  /// Dense X = U diag(sigma) U* (small-n / test use).
  CMatrix embed() const {
    return U_ * sigma_.asDiagonal() * U_.adjoint();
  }

  /// A factor Y with Y Y* = X.
  CMatrix factor() const {
    return U_ * sigma_.cwiseSqrt().asDiagonal();
  }

 private:
  CMatrix U_;
  RVector sigma_;
};

/// Tangent vector at an EigenPoint, encoding U H U* + Up U* + U Up* with H
/// Hermitian p x p and U* Up = 0. The perpendicular factor Up = U_perp K is
/// stored directly; U_perp itself is never formed.
struct EmbeddedTangent {
  CMatrix H;
  CMatrix Up;

  static EmbeddedTangent zero(Index n, Index p) {
    return {CMatrix::Zero(p, p), CMatrix::Zero(n, p)};
  }

  EmbeddedTangent scaled(double t) const { return {t * H, t * Up}; }
};

/// Dense embedding of a tangent vector (small-n / test use).
inline CMatrix embed_tangent(const EigenPoint& X, const EmbeddedTangent& xi) {
  return X.U() * xi.H * X.U().adjoint() + xi.Up * X.U().adjoint() +
         X.U() * xi.Up.adjoint();
}

/// Riemannian metric on T_X, inherited from the real inner product:
/// <xi, eta> = <H_xi, H_eta> + 2 <Up_xi, Up_eta>.
inline double embedded_inner(const EmbeddedTangent& a,
                             const EmbeddedTangent& b) {
  return real_inner(a.H, b.H) + 2.0 * real_inner(a.Up, b.Up);
}

inline double embedded_norm(const EmbeddedTangent& a) {
  return std::sqrt(std::max(embedded_inner(a, a), 0.0));
}

inline EmbeddedTangent embedded_combine(double ca, const EmbeddedTangent& a,
                                        double cb, const EmbeddedTangent& b) {
  return {ca * a.H + cb * b.H, ca * a.Up + cb * b.Up};
}

/// Construct a valid tangent from raw blocks: H is re-hermitized and Up is
/// projected against U.
inline EmbeddedTangent make_tangent(const EigenPoint& X, const CMatrix& Hraw,
                                    const CMatrix& Upraw) {
  CMatrix Up = Upraw - X.U() * (X.U().adjoint() * Upraw);
  return {herm(Hraw), std::move(Up)};
}

/// Orthogonal projection of a dense Z onto T_X:
/// H = U* Herm(Z) U, Up = (I - U U*) Herm(Z) U.
inline EmbeddedTangent tangent_project(const EigenPoint& X, const CMatrix& Z) {
  if (Z.rows() != X.n() || Z.cols() != X.n())
    throw std::invalid_argument("tangent_project: dimension mismatch");
  const CMatrix T = 0.5 * (Z * X.U() + Z.adjoint() * X.U());
  CMatrix H = herm(X.U().adjoint() * T);
  CMatrix Up = T - X.U() * (X.U().adjoint() * T);
  return {std::move(H), std::move(Up)};
}

/// Riemannian gradient grad f(X) = P^t_X(grad f): T = Herm(grad f) U,
/// H = U* T, Up = T - U H.
inline EmbeddedTangent riemannian_grad(const EigenPoint& X,
                                       const CostModel& cost) {
  const CMatrix Y = X.factor();
  const GradPair g = cost.grad_times(Y, X.U());
  const CMatrix T = 0.5 * (g.gV + g.gAdjV);
  CMatrix H = herm(X.U().adjoint() * T);
  CMatrix Up = T - X.U() * (X.U().adjoint() * T);
  return {std::move(H), std::move(Up)};
}

/// Metric-projection retraction: the top-p eigenpair of X + t Z, computed
/// from a compact QR of Up and a 2p x 2p Hermitian eigensolve. Throws
/// BoundaryError when the p-th eigenvalue falls below the rank tolerance.
inline EigenPoint retract(const EigenPoint& X, const EmbeddedTangent& Z,
                          double t = 1.0) {
  const Index n = X.n(), p = X.p();
  auto [Q, R] = qr_compact(CMatrix(t * Z.Up));
  CMatrix M(2 * p, 2 * p);
  M.topLeftCorner(p, p) = t * Z.H;
  for (Index i = 0; i < p; ++i) M(i, i) += X.sigma()(i);
  M.topRightCorner(p, p) = R.adjoint();
  M.bottomLeftCorner(p, p) = R;
  M.bottomRightCorner(p, p).setZero();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm(M));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("retract: eigendecomposition failed");

  const RVector& lam = es.eigenvalues();  // ascending
  RVector sigma(p);
  for (Index j = 0; j < p; ++j) sigma(j) = lam(2 * p - 1 - j);
  if (!(sigma(p - 1) > 0) || sigma(p - 1) <= kRankTol * sigma(0))
    throw BoundaryError("retract: rank collapsed at the requested step");

  CMatrix W(n, 2 * p);
  W.leftCols(p) = X.U();
  W.rightCols(p) = Q;
  CMatrix V1(2 * p, p);
  for (Index j = 0; j < p; ++j) V1.col(j) = es.eigenvectors().col(2 * p - 1 - j);
  CMatrix Uplus = W * V1;
  fix_column_phases(Uplus);
  return EigenPoint(std::move(Uplus), std::move(sigma));
}

/// Simplified vector transport, keeping only the leading term of the
/// projection transport: H2 = (U2* U1) H1 (U1* U2), Up2 = (I - U2 U2*) Up1 (U1* U2).
inline EmbeddedTangent vector_transport(const EigenPoint& X1,
                                        const EigenPoint& X2,
                                        const EmbeddedTangent& nu) {
  const CMatrix A = X1.U().adjoint() * X2.U();  // p x p
  CMatrix H2 = herm(A.adjoint() * nu.H * A);
  CMatrix UpA = nu.Up * A;
  CMatrix Up2 = UpA - X2.U() * (X2.U().adjoint() * UpA);
  return {std::move(H2), std::move(Up2)};
}

/// Second-order retraction R^(2)_X(xi) = w X^dagger w* with
/// w = X + xi^s/2 + xi^p - xi^s X^dagger xi^s / 8 - xi^p X^dagger xi^s / 2.
/// Dense evaluation; this is analysis/test machinery, not a solver move.
inline EigenPoint second_order_retract(const EigenPoint& X,
                                       const EmbeddedTangent& xi) {
  const CMatrix& U = X.U();
  const CMatrix Xd = X.embed();
  const CMatrix Xdag =
      U * X.sigma().cwiseInverse().asDiagonal() * U.adjoint();
  const CMatrix xis = U * xi.H * U.adjoint();
  const CMatrix xip = xi.Up * U.adjoint() + U * xi.Up.adjoint();
  const CMatrix w = Xd + 0.5 * xis + xip - 0.125 * xis * Xdag * xis -
                    0.5 * xip * Xdag * xis;
  const CMatrix R = w * Xdag * w.adjoint();
  EigResult e = compact_eig_psd(herm(R), X.p());
  if (e.sigma(X.p() - 1) <= kRankTol * e.sigma(0) || !(e.sigma(X.p() - 1) > 0))
    throw BoundaryError("second_order_retract: rank collapsed");
  return EigenPoint(std::move(e.U), std::move(e.sigma));
}

/// Riemannian Hessian application
///   Hess f(X)[xi] = P^t_X(grad^2 f(X)[xi])
///                 + P^p_X(grad f(X) (X^dag xi^p)* + (xi^p X^dag)* grad f(X)).
/// With xi^p = Up U* + U Up*, the correction reduces to
/// (I - U U*) Herm(grad f) Up Sigma^{-1} on the Up block.
inline EmbeddedTangent hessian_apply(const EigenPoint& X,
                                     const EmbeddedTangent& xi,
                                     const CostModel& cost) {
  const CMatrix& U = X.U();
  // Factored increment: embed(xi) = P Q* + Q P* with P = U, Q = U H/2 + Up.
  const CMatrix Q = U * (0.5 * xi.H) + xi.Up;
  const CMatrix T1 = cost.hess_times(U, Q, U);
  CMatrix H = herm(U.adjoint() * T1);
  CMatrix Up = T1 - U * (U.adjoint() * T1);

  const CMatrix Y = X.factor();
  const GradPair g = cost.grad_times(Y, xi.Up);
  CMatrix M = 0.5 * (g.gV + g.gAdjV);  // Herm(grad f) Up
  M -= U * (U.adjoint() * M);
  Up += M * X.sigma().cwiseInverse().asDiagonal();
  return {std::move(H), std::move(Up)};
}

}  // namespace psdmanopt
