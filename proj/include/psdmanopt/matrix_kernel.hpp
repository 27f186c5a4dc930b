#pragma once

#include <atomic>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace psdmanopt {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Relative threshold below which a singular value counts as numerically zero.
/// Full-rank guards on factor points use sigma_min > kRankTol * sigma_max.
inline constexpr double kRankTol = 1e-12;

/// Relative Hermitian drift above which construction of a Hermitian type
/// reports a warning (the input is re-symmetrized either way).
inline constexpr double kHermDriftTol = 1e-10;

/// Raised when a retraction or factor construction leaves the fixed-rank set
/// (the p-th singular value fell below the rank tolerance). Solvers treat it
/// as a failed step and shrink.
class BoundaryError : public std::runtime_error {
 public:
  explicit BoundaryError(const std::string& what) : std::runtime_error(what) {}
};

class SingularEquationError : public std::runtime_error {
 public:
  explicit SingularEquationError(const std::string& what)
      : std::runtime_error(what) {}
};

namespace detail {
inline std::atomic<std::uint64_t>& drift_counter() {
  static std::atomic<std::uint64_t> c{0};
  return c;
}
}  // namespace detail

/// Number of times a Hermitian-typed construction saw drift beyond
/// kHermDriftTol and silently re-symmetrized. Monotone; test hook.
inline std::uint64_t hermitian_drift_warnings() {
  return detail::drift_counter().load();
}

/// Real inner product <A,B> = Re tr(A* B) on complex matrices viewed as a
/// real vector space.
inline double real_inner(const CMatrix& A, const CMatrix& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw std::invalid_argument("real_inner: dimension mismatch");
  return (A.array().conjugate() * B.array()).sum().real();
}

inline double fro_norm(const CMatrix& A) { return A.norm(); }

inline CMatrix herm(const CMatrix& X) {
  if (X.rows() != X.cols())
    throw std::invalid_argument("herm: matrix must be square");
  return 0.5 * (X + X.adjoint());
}

inline CMatrix skew(const CMatrix& X) {
  if (X.rows() != X.cols())
    throw std::invalid_argument("skew: matrix must be square");
  return 0.5 * (X - X.adjoint());
}

/// Small Hermitian matrix, re-symmetrized on construction. Drift beyond
/// kHermDriftTol relative Frobenius bumps the warning counter.
class HermitianSmall {
 public:
  explicit HermitianSmall(const CMatrix& raw) {
    if (raw.rows() != raw.cols())
      throw std::invalid_argument("HermitianSmall: matrix must be square");
    m_ = herm(raw);
    const double scale = raw.norm();
    if (scale > 0 && (raw - m_).norm() > kHermDriftTol * scale)
      detail::drift_counter().fetch_add(1);
  }

  const CMatrix& matrix() const { return m_; }
  Index dim() const { return m_.rows(); }

 private:
  CMatrix m_;
};

/// Make the largest-magnitude entry of each column real and positive.
/// Keeps eigenvector bases deterministic up to degeneracies.
inline void fix_column_phases(CMatrix& U) {
  for (Index j = 0; j < U.cols(); ++j) {
    Index imax = 0;
    double best = -1.0;
    for (Index i = 0; i < U.rows(); ++i) {
      const double a = std::abs(U(i, j));
      if (a > best) {
        best = a;
        imax = i;
      }
    }
    if (best > 0) U.col(j) *= std::conj(U(imax, j)) / best;
  }
}

/// Compact eigenpair of a Hermitian PSD matrix: U has orthonormal columns,
/// sigma is sorted descending, X ~ U diag(sigma) U*.
struct EigResult {
  CMatrix U;
  RVector sigma;
};

/// Top-p eigenpairs of a dense Hermitian PSD matrix (descending). Inputs that
/// fail the Hermitian or PSD checks beyond tolerance are rejected; small
/// negative eigenvalues from drift are clamped to zero.
inline EigResult compact_eig_psd(const CMatrix& X, Index p) {
  if (X.rows() != X.cols())
    throw std::invalid_argument("compact_eig_psd: matrix must be square");
  if (p < 1 || p > X.rows())
    throw std::invalid_argument("compact_eig_psd: invalid rank p");
  const double scale = X.norm();
  if (scale > 0 && (X - X.adjoint()).norm() > 1e-8 * scale)
    throw std::invalid_argument("compact_eig_psd: input is not Hermitian");

  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm(X));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("compact_eig_psd: eigendecomposition failed");
  const Index n = X.rows();
  const RVector& lam = es.eigenvalues();  // ascending
  const double neg_tol = 1e-10 * std::max(lam(n - 1), 0.0);
  if (lam(0) < -neg_tol - 1e-300 * n)
    throw std::invalid_argument("compact_eig_psd: input is not PSD");

  EigResult out;
  out.U.resize(n, p);
  out.sigma.resize(p);
  for (Index j = 0; j < p; ++j) {
    out.U.col(j) = es.eigenvectors().col(n - 1 - j);
    out.sigma(j) = std::max(lam(n - 1 - j), 0.0);
  }
  fix_column_phases(out.U);
  return out;
}

/// Compact QR of an n x p matrix: A = Q R with Q*Q = I_p, R upper triangular.
/// Rank-deficient input is fine; for A = 0 the Q falls back to identity
/// columns (Householder of a zero column is the identity reflector).
inline std::pair<CMatrix, CMatrix> qr_compact(const CMatrix& A) {
  const Index n = A.rows();
  const Index p = A.cols();
  if (n < p) throw std::invalid_argument("qr_compact: need rows >= cols");
  Eigen::HouseholderQR<CMatrix> qr(A);
  CMatrix Q = qr.householderQ() * CMatrix::Identity(n, p);
  CMatrix R = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  return {std::move(Q), std::move(R)};
}

namespace detail {
/// Solve X E + E X = Z given the eigendecomposition E = Q diag(lam) Q*.
inline CMatrix lyapunov_from_eig(const CMatrix& Q, const RVector& lam,
                                 const CMatrix& Z) {
  const Index p = Q.rows();
  CMatrix W = Q.adjoint() * Z * Q;
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i) W(i, j) /= lam(i) + lam(j);
  return Q * W * Q.adjoint();
}
}  // namespace detail

/// Solve the Lyapunov equation X E + E X = Z for Hermitian positive-definite
/// E, entrywise in E's eigenbasis. The solution is skew-Hermitian whenever Z
/// is. Throws SingularEquationError if E is not numerically PD.
inline CMatrix solve_lyapunov(const HermitianSmall& E, const CMatrix& Z) {
  const Index p = E.dim();
  if (Z.rows() != p || Z.cols() != p)
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(E.matrix());
  if (es.info() != Eigen::Success)
    throw std::runtime_error("solve_lyapunov: eigendecomposition failed");
  const RVector& lam = es.eigenvalues();
  if (lam(0) <= 1e-14 * lam(p - 1) || lam(p - 1) <= 0)
    throw SingularEquationError(
        "solve_lyapunov: E is not numerically positive-definite");
  return detail::lyapunov_from_eig(es.eigenvectors(), lam, Z);
}

}  // namespace psdmanopt
