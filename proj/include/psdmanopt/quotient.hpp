#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "psdmanopt/cost_models.hpp"
#include "psdmanopt/embedded.hpp"
#include "psdmanopt/matrix_kernel.hpp"

namespace psdmanopt {

enum class MetricTag { g1, g2, g3 };

inline const char* to_string(MetricTag t) {
  switch (t) {
    case MetricTag::g1: return "g1";
    case MetricTag::g2: return "g2";
    case MetricTag::g3: return "g3";
  }
  return "?";
}

/// Full-rank factor Y representing the class pi(Y), i.e. X = Y Y*. The Gram
/// matrix Y*Y, its Cholesky factorization and its eigendecomposition are
/// computed once at construction and shared by the metric, projection and
/// gradient formulas.
class FactorPoint {
 public:
  explicit FactorPoint(CMatrix Y) : Y_(std::move(Y)) {
    if (!Y_.allFinite())
      throw std::invalid_argument("FactorPoint: non-finite entries");
    if (Y_.rows() < Y_.cols())
      throw std::invalid_argument("FactorPoint: need n >= p");
    gram_ = herm(Y_.adjoint() * Y_);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(gram_);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("FactorPoint: Gram eigendecomposition failed");
    gram_vecs_ = es.eigenvectors();
    gram_vals_ = es.eigenvalues();  // ascending
    const Index p = Y_.cols();
    // sigma_min(Y)^2 = lambda_min(Y*Y); rank guard on singular values of Y.
    if (!(gram_vals_(0) > 0) ||
        gram_vals_(0) <= kRankTol * kRankTol * gram_vals_(p - 1))
      throw BoundaryError("FactorPoint: numerically rank-deficient factor");
    llt_.compute(gram_);
    if (llt_.info() != Eigen::Success)
      throw std::runtime_error("FactorPoint: Gram Cholesky failed");
  }

  Index n() const { return Y_.rows(); }
  Index p() const { return Y_.cols(); }
  const CMatrix& Y() const { return Y_; }
  const CMatrix& gram() const { return gram_; }

  /// M (Y*Y)^{-1} by Cholesky solves against the cached factorization.
  CMatrix apply_gram_inv_right(const CMatrix& M) const {
    return llt_.solve(M.adjoint()).adjoint();
  }

  /// (Y*Y)^{-1} M.
  CMatrix apply_gram_inv_left(const CMatrix& M) const {
    return llt_.solve(M);
  }

  /// P_Y M = Y (Y*Y)^{-1} Y* M.
  CMatrix project_range(const CMatrix& M) const {
    return Y_ * llt_.solve(Y_.adjoint() * M);
  }

  /// Solve Omega (Y*Y) + (Y*Y) Omega = Z through the cached eigendecomposition.
  CMatrix solve_gram_lyapunov(const CMatrix& Z) const {
    return detail::lyapunov_from_eig(gram_vecs_, gram_vals_, Z);
  }

  /// Compact eigenpair of X = Y Y* without forming an n x n matrix.
  EigenPoint to_eigen_point() const {
    auto [Q, R] = qr_compact(Y_);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(herm(R * R.adjoint()));
    const Index p = Y_.cols();
    RVector sigma(p);
    CMatrix V(p, p);
    for (Index j = 0; j < p; ++j) {
      sigma(j) = es.eigenvalues()(p - 1 - j);
      V.col(j) = es.eigenvectors().col(p - 1 - j);
    }
    CMatrix U = Q * V;
    fix_column_phases(U);
    return EigenPoint(std::move(U), std::move(sigma));
  }

  /// Dense X = Y Y* (small-n / test use).
  CMatrix embed() const { return Y_ * Y_.adjoint(); }

 private:
  CMatrix Y_;
  CMatrix gram_;
  CMatrix gram_vecs_;
  RVector gram_vals_;
  Eigen::LLT<CMatrix> llt_;
};

/// Horizontal vector at a FactorPoint, tagged with the metric whose
/// horizontal space it lives in.
struct HorizontalVector {
  CMatrix V;
  MetricTag tag;

  HorizontalVector scaled(double t) const { return {t * V, tag}; }
};

inline HorizontalVector horizontal_combine(double ca,
                                           const HorizontalVector& a,
                                           double cb,
                                           const HorizontalVector& b) {
  if (a.tag != b.tag)
    throw std::invalid_argument("horizontal_combine: metric tags differ");
  return {ca * a.V + cb * b.V, a.tag};
}

/// Metric evaluation g^i_Y(A, B). Raw (not necessarily horizontal) inputs are
/// allowed; g3 computes the vertical parts it needs internally.
inline double metric_eval(const FactorPoint& Y, const CMatrix& A,
                          const CMatrix& B, MetricTag tag) {
  if (A.rows() != Y.n() || A.cols() != Y.p() || B.rows() != Y.n() ||
      B.cols() != Y.p())
    throw std::invalid_argument("metric_eval: dimension mismatch");
  switch (tag) {
    case MetricTag::g1:
      return real_inner(A, B);
    case MetricTag::g2:
      // Re tr((Y*Y) A* B)
      return real_inner(A, B * Y.gram());
    case MetricTag::g3: {
      // <Y A* + A Y*, Y B* + B Y*> + <P^V(A) Y*, P^V(B) Y*>
      const CMatrix ab = A.adjoint() * B;
      const CMatrix ya = Y.Y().adjoint() * A;
      const CMatrix yb = Y.Y().adjoint() * B;
      const double lead = 2.0 * (ab * Y.gram()).trace().real() +
                          2.0 * (ya * yb).trace().real();
      const CMatrix oa = skew(Y.apply_gram_inv_left(ya));
      const CMatrix ob = skew(Y.apply_gram_inv_left(yb));
      const double vert =
          (oa.adjoint() * Y.gram() * ob * Y.gram()).trace().real();
      return lead + vert;
    }
  }
  throw std::logic_error("metric_eval: unknown tag");
}

inline double metric_eval(const FactorPoint& Y, const HorizontalVector& a,
                          const HorizontalVector& b) {
  if (a.tag != b.tag)
    throw std::invalid_argument("metric_eval: metric tags differ");
  return metric_eval(Y, a.V, b.V, a.tag);
}

/// Projection of A onto the vertical space V_Y = { Y Omega : Omega skew }.
/// g1 solves the Lyapunov equation Omega (Y*Y) + (Y*Y) Omega = Y*A - A*Y;
/// g2 and g3 share Omega = Skew((Y*Y)^{-1} Y* A).
inline CMatrix vertical_project(const FactorPoint& Y, const CMatrix& A,
                                MetricTag tag) {
  const CMatrix ya = Y.Y().adjoint() * A;
  if (tag == MetricTag::g1) {
    const CMatrix rhs = ya - ya.adjoint();
    return Y.Y() * Y.solve_gram_lyapunov(rhs);
  }
  return Y.Y() * skew(Y.apply_gram_inv_left(ya));
}

/// Complementary horizontal projection, A = P^V(A) + P^H(A).
inline HorizontalVector horizontal_project(const FactorPoint& Y,
                                           const CMatrix& A, MetricTag tag) {
  return {A - vertical_project(Y, A, tag), tag};
}

/// Residual of the horizontal-membership condition for the tagged space;
/// zero (to round-off) iff V is horizontal at Y.
inline double horizontal_residual(const FactorPoint& Y, const CMatrix& V,
                                  MetricTag tag) {
  if (tag == MetricTag::g1) {
    const CMatrix yv = Y.Y().adjoint() * V;
    return (yv - yv.adjoint()).norm();
  }
  const CMatrix s = Y.apply_gram_inv_left(Y.Y().adjoint() * V);
  return (s - s.adjoint()).norm();
}

/// Horizontal lift of the Riemannian gradient of h at pi(Y):
///   g1: D,   g2: D (Y*Y)^{-1},   g3: (I - P_Y/2) (D/2) (Y*Y)^{-1},
/// with D = (grad f + grad f*) Y. The result is automatically horizontal for
/// its tag.
inline HorizontalVector grad_F(const FactorPoint& Y, const CostModel& cost,
                               MetricTag tag) {
  const GradPair g = cost.grad_times(Y.Y(), Y.Y());
  const CMatrix D = g.gV + g.gAdjV;
  switch (tag) {
    case MetricTag::g1:
      return {D, tag};
    case MetricTag::g2:
      return {Y.apply_gram_inv_right(D), tag};
    case MetricTag::g3: {
      CMatrix T = 0.5 * Y.apply_gram_inv_right(D);
      T -= 0.5 * Y.project_range(T);
      return {T, tag};
    }
  }
  throw std::logic_error("grad_F: unknown tag");
}

/// Retraction on the quotient: pi(Y + t A), with refreshed Gram caches.
/// Throws BoundaryError when Y + tA loses numerical rank.
inline FactorPoint retract(const FactorPoint& Y, const HorizontalVector& A,
                           double t = 1.0) {
  return FactorPoint(Y.Y() + t * A.V);
}

/// Vector transport by projection onto the horizontal space at the new point.
inline HorizontalVector transport(const FactorPoint& Y1, const FactorPoint& Y2,
                                  const HorizontalVector& xi) {
  (void)Y1;
  return horizontal_project(Y2, xi.V, xi.tag);
}

/// Horizontal lift of the Riemannian Hessian of h applied to a horizontal xi.
inline HorizontalVector hessian_apply(const FactorPoint& Y,
                                      const HorizontalVector& xi,
                                      const CostModel& cost) {
  const CMatrix& Yv = Y.Y();
  const CMatrix& x = xi.V;
  const auto grad_herm = [&](const CMatrix& V) {
    const GradPair g = cost.grad_times(Yv, V);
    return CMatrix(0.5 * (g.gV + g.gAdjV));
  };

  switch (xi.tag) {
    case MetricTag::g1: {
      // P^H1( 2 Herm{grad^2 f[Y xi* + xi Y*]} Y + 2 Herm(grad f) xi )
      const CMatrix T = 2.0 * cost.hess_times(Yv, x, Yv) + 2.0 * grad_herm(x);
      return horizontal_project(Y, T, MetricTag::g1);
    }
    case MetricTag::g2: {
      const CMatrix ygi = Y.apply_gram_inv_right(Yv);  // Y (Y*Y)^{-1}
      const CMatrix t1 = 2.0 * cost.hess_times(Yv, x, ygi);
      const CMatrix xperp = x - Y.project_range(x);
      const CMatrix t2 = Y.apply_gram_inv_right(grad_herm(xperp));
      const CMatrix gx = grad_herm(x);
      const CMatrix t3 = Y.apply_gram_inv_right(gx - Y.project_range(gx));
      // 2 skew(xi Y*) Herm(grad f) Y (Y*Y)^{-2}
      const CMatrix m4 = Y.apply_gram_inv_right(
          Y.apply_gram_inv_right(grad_herm(Yv)));
      const CMatrix t4 = x * (Yv.adjoint() * m4) - Yv * (x.adjoint() * m4);
      // 2 skew(xi (Y*Y)^{-1} Y* Herm(grad f)) Y (Y*Y)^{-1}
      const CMatrix w = Y.apply_gram_inv_right(grad_herm(Yv));  // Herm(g) Y G^{-1}
      const CMatrix t5 = x * Y.apply_gram_inv_left(Yv.adjoint() * w) -
                         w * Y.apply_gram_inv_right(x.adjoint() * Yv);
      return horizontal_project(Y, t1 + t2 + t3 + t4 + t5, MetricTag::g2);
    }
    case MetricTag::g3: {
      const CMatrix ygi = Y.apply_gram_inv_right(Yv);
      CMatrix t1 = cost.hess_times(Yv, x, ygi);
      t1 -= 0.5 * Y.project_range(t1);
      CMatrix m = grad_herm(x - Y.project_range(x));
      m -= Y.project_range(m);
      return {t1 + Y.apply_gram_inv_right(m), MetricTag::g3};
    }
  }
  throw std::logic_error("hessian_apply: unknown tag");
}

/// Isomorphism L between the g3 horizontal space at Y and the embedded
/// tangent space at X = Y Y*: L(xi) = Y xi* + xi Y*, expressed in the (H, Up)
/// representation of the given EigenPoint for X.
inline EmbeddedTangent lift_L(const FactorPoint& Y, const HorizontalVector& xi,
                              const EigenPoint& X) {
  const CMatrix uy = X.U().adjoint() * Y.Y();  // U* Y
  const CMatrix ux = X.U().adjoint() * xi.V;   // U* xi
  CMatrix H = herm(uy * ux.adjoint() + ux * uy.adjoint());
  const CMatrix T = Y.Y() * ux.adjoint() + xi.V * uy.adjoint();  // (Y xi* + xi Y*) U
  CMatrix Up = T - X.U() * (X.U().adjoint() * T);
  return {std::move(H), std::move(Up)};
}

/// Inverse of L on the g3 horizontal space:
/// L^{-1}(zeta) = (I - P_Y/2) zeta Y (Y*Y)^{-1}.
inline HorizontalVector lift_L_inv(const FactorPoint& Y, const EigenPoint& X,
                                   const EmbeddedTangent& zeta) {
  const CMatrix uy = X.U().adjoint() * Y.Y();
  const CMatrix zy =
      X.U() * (zeta.H * uy) + zeta.Up * uy + X.U() * (zeta.Up.adjoint() * Y.Y());
  CMatrix W = Y.apply_gram_inv_right(zy);
  W -= 0.5 * Y.project_range(W);
  return {std::move(W), MetricTag::g3};
}

struct G3RetractResult {
  FactorPoint Y;
  EigenPoint X;
};

/// Retraction that makes the g3 quotient method mirror the embedded method:
/// R^Q(t xi) = beta^{-1}( R^E_{YY*}( L(t xi) ) ). Returns the new factor
/// together with the eigenpair of the retracted X.
inline G3RetractResult g3_embedded_retract(const FactorPoint& Y,
                                           const EigenPoint& X,
                                           const HorizontalVector& xi,
                                           double t = 1.0) {
  const EmbeddedTangent zeta = lift_L(Y, xi, X);
  EigenPoint Xplus = retract(X, zeta, t);
  CMatrix Yplus = Xplus.factor();
  return {FactorPoint(std::move(Yplus)), std::move(Xplus)};
}

/// Companion vector transport: T^Q = L^{-1} ( T^E ( L(.) ) ) with the
/// simplified embedded transport in the middle.
inline HorizontalVector g3_embedded_transport(const FactorPoint& Y1,
                                              const EigenPoint& X1,
                                              const FactorPoint& Y2,
                                              const EigenPoint& X2,
                                              const HorizontalVector& xi) {
  const EmbeddedTangent z1 = lift_L(Y1, xi, X1);
  const EmbeddedTangent z2 = vector_transport(X1, X2, z1);
  return lift_L_inv(Y2, X2, z2);
}

}  // namespace psdmanopt
