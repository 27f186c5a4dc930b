#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "psdmanopt/matrix_kernel.hpp"

namespace psdmanopt {

/// The pair (grad f(X) * V, grad f(X)^* * V). For every cost here grad f is
/// Hermitian by construction, so the two coincide; costs with a nontrivial
/// index structure compute the second entry through the transposed path so the
/// coincidence actually exercises the symmetry of the sampling set.
struct GradPair {
  CMatrix gV;
  CMatrix gAdjV;
};

/// Stack a complex matrix into a real vector of (re, im) pairs. Real inner
/// products of complex measurements become plain dot products of these
/// vectors.
inline RVector realify(const CMatrix& M) {
  RVector v(2 * M.size());
  const std::complex<double>* p = M.data();
  for (Index k = 0; k < M.size(); ++k) {
    v(2 * k) = p[k].real();
    v(2 * k + 1) = p[k].imag();
  }
  return v;
}

/// Least-squares cost f(X) = 1/2 ||A(X) - b||^2 over Hermitian X = YY*,
/// exposed through factor-level products only. Implementations never build an
/// n x n matrix outside of small-instance test paths.
class CostModel {
 public:
  virtual ~CostModel() = default;

  virtual Index dim() const = 0;

  /// f(YY*).
  virtual double value(const CMatrix& Y) const {
    return 0.5 * residual(Y).squaredNorm();
  }

  /// (grad f(YY*) V, grad f(YY*)^* V).
  virtual GradPair grad_times(const CMatrix& Y, const CMatrix& V) const = 0;

  /// Hessian application on a factored Hermitian increment:
  /// grad^2 f [P Q* + Q P*] * V. The Hessian of a linear least-squares cost
  /// does not depend on the base point.
  virtual CMatrix hess_times(const CMatrix& P, const CMatrix& Q,
                             const CMatrix& V) const = 0;

  /// Real-ified measurement-space residual A(YY*) - b.
  virtual RVector residual(const CMatrix& Y) const = 0;

  /// Real-ified A(P Q* + Q P*).
  virtual RVector apply_measurement(const CMatrix& P,
                                    const CMatrix& Q) const = 0;

  /// Coefficients d of the exact quartic F(Y + t eta) = sum_k d[k] t^k.
  virtual std::array<double, 5> line_poly(const CMatrix& Y,
                                          const CMatrix& eta) const {
    const RVector c0 = residual(Y);
    const RVector c1 = apply_measurement(Y, eta);
    const RVector c2 = 0.5 * apply_measurement(eta, eta);
    return {0.5 * c0.squaredNorm(),
            c0.dot(c1),
            c0.dot(c2) + 0.5 * c1.squaredNorm(),
            c1.dot(c2),
            0.5 * c2.squaredNorm()};
  }

  /// argmin_t f(X + t (P Q* + Q P*)) for a fixed tangent increment, i.e. the
  /// linear segment used by the embedded line-search initializer:
  /// t = -<R,S>/<S,S>. Falls back to 1.0 when no positive step exists.
  virtual double step_along_tangent(const CMatrix& Yx, const CMatrix& P,
                                    const CMatrix& Q) const {
    const RVector r = residual(Yx);
    const RVector s = apply_measurement(P, Q);
    const double den = s.squaredNorm();
    if (!(den > 0)) return 1.0;
    const double t = -r.dot(s) / den;
    return (std::isfinite(t) && t > 0) ? t : 1.0;
  }

  /// Serialize the operator data in the documented little-endian layout.
  virtual void dump(std::ostream& os) const = 0;
};

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "instance dumps assume a little-endian host");

inline void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void put_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void put_cmatrix(std::ostream& os, const CMatrix& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) {
      put_f64(os, m(i, j).real());
      put_f64(os, m(i, j).imag());
    }
}
inline void put_rvector(std::ostream& os, const RVector& v) {
  for (Index i = 0; i < v.size(); ++i) put_f64(os, v(i));
}
inline void put_index_list(std::ostream& os, const std::vector<Index>& v) {
  for (Index x : v) put_u64(os, static_cast<std::uint64_t>(x));
}
inline void put_header(std::ostream& os, std::uint32_t kind) {
  os.write("PSDMDUMP", 8);
  put_u32(os, 1);  // layout version
  put_u32(os, kind);
}

/// Smallest real positive root of the cubic c3 t^3 + c2 t^2 + c1 t + c0,
/// degrading gracefully to the quadratic/linear cases. Returns nullopt when
/// no positive real root exists.
inline std::optional<double> smallest_positive_root(double c3, double c2,
                                                    double c1, double c0) {
  const double scale =
      std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
  if (!(scale > 0)) return std::nullopt;
  c3 /= scale;
  c2 /= scale;
  c1 /= scale;
  c0 /= scale;

  std::vector<std::complex<double>> roots;
  if (std::abs(c3) > 1e-14) {
    Eigen::Matrix3d companion = Eigen::Matrix3d::Zero();
    companion(1, 0) = 1.0;
    companion(2, 1) = 1.0;
    companion(0, 2) = -c0 / c3;
    companion(1, 2) = -c1 / c3;
    companion(2, 2) = -c2 / c3;
    Eigen::EigenSolver<Eigen::Matrix3d> es(companion);
    for (int i = 0; i < 3; ++i) roots.push_back(es.eigenvalues()(i));
  } else if (std::abs(c2) > 1e-14) {
    const std::complex<double> disc =
        std::sqrt(std::complex<double>(c1 * c1 - 4.0 * c2 * c0));
    roots.push_back((-c1 + disc) / (2.0 * c2));
    roots.push_back((-c1 - disc) / (2.0 * c2));
  } else if (std::abs(c1) > 1e-14) {
    roots.emplace_back(-c0 / c1, 0.0);
  } else {
    return std::nullopt;
  }

  std::optional<double> best;
  for (const auto& z : roots) {
    if (std::abs(z.imag()) > 1e-8 * (1.0 + std::abs(z.real()))) continue;
    const double t = z.real();
    if (t <= 0 || !std::isfinite(t)) continue;
    if (!best || t < *best) best = t;
  }
  return best;
}

}  // namespace detail

/// Exact line-search initializer for F(Y + t eta): the smallest real positive
/// root of the derivative of the quartic. Falls back to t = 1 when no positive
/// root exists so Armijo can still shrink from a defined start.
inline double exact_linesearch_poly(const CostModel& cost, const CMatrix& Y,
                                    const CMatrix& eta) {
  if (!(eta.norm() > 0))
    throw std::invalid_argument("exact_linesearch_poly: zero direction");
  const auto d = cost.line_poly(Y, eta);
  const auto t =
      detail::smallest_positive_root(4 * d[4], 3 * d[3], 2 * d[2], d[1]);
  return t.value_or(1.0);
}

// ---------------------------------------------------------------------------
// Eigenvalue cost f(X) = 1/2 ||X - A||_F^2 with A Hermitian PSD, stored dense
// or as a low-rank factor A = G G*. The factored path evaluates residual norms
// through a compact QR of [Y G] so values stay accurate near the minimum.
// ---------------------------------------------------------------------------
class EigenCost : public CostModel {
 public:
  /// Dense target (small-n use).
  explicit EigenCost(const CMatrix& A) : A_(herm(A)), n_(A.rows()) {
    if (A.rows() != A.cols())
      throw std::invalid_argument("EigenCost: target must be square");
  }

  /// Low-rank target A = G G*.
  static EigenCost from_factor(const CMatrix& G) { return EigenCost(G, 0); }

  Index dim() const override { return n_; }
  bool factored() const { return G_.size() > 0; }
  const CMatrix& factor_G() const { return G_; }

  double value(const CMatrix& Y) const override {
    if (!factored() || n_ < Y.cols() + G_.cols()) {
      CMatrix R = Y * Y.adjoint() - dense_target();
      return 0.5 * R.squaredNorm();
    }
    // [Y G] = Q R0; ||YY* - GG*|| = ||T1 T1* - T2 T2*|| with T = R0 blocks.
    const Index p = Y.cols(), r = G_.cols();
    CMatrix S(n_, p + r);
    S.leftCols(p) = Y;
    S.rightCols(r) = G_;
    Eigen::HouseholderQR<CMatrix> qr(S);
    CMatrix R0 = qr.matrixQR().topRows(p + r).triangularView<Eigen::Upper>();
    CMatrix T1 = R0.leftCols(p);
    CMatrix T2 = R0.rightCols(r);
    return 0.5 * (T1 * T1.adjoint() - T2 * T2.adjoint()).squaredNorm();
  }

  GradPair grad_times(const CMatrix& Y, const CMatrix& V) const override {
    CMatrix gV = Y * (Y.adjoint() * V) - target_times(V);
    return {gV, gV};
  }

  CMatrix hess_times(const CMatrix& P, const CMatrix& Q,
                     const CMatrix& V) const override {
    return P * (Q.adjoint() * V) + Q * (P.adjoint() * V);
  }

  RVector residual(const CMatrix& Y) const override {
    CMatrix R = Y * Y.adjoint() - dense_target();
    return realify(R);
  }

  RVector apply_measurement(const CMatrix& P, const CMatrix& Q) const override {
    CMatrix Z = P * Q.adjoint();
    CMatrix S = Z + Z.adjoint();
    return realify(S);
  }

  std::array<double, 5> line_poly(const CMatrix& Y,
                                  const CMatrix& eta) const override {
    const CMatrix gyy = Y.adjoint() * Y;
    const CMatrix gye = Y.adjoint() * eta;
    const CMatrix gee = eta.adjoint() * eta;
    const CMatrix ry = Y * gyy - target_times(Y);           // (X - A) Y
    const CMatrix re = Y * gye - target_times(eta);         // (X - A) eta
    const double d1 = 2.0 * real_inner(eta, ry);
    const double c1sq = 2.0 * (gyy * gee).trace().real() +
                        2.0 * (gye * gye).trace().real();
    const double d2 = real_inner(eta, re) + 0.5 * c1sq;
    const double d3 = 2.0 * (gye * gee).trace().real();
    const double d4 = 0.5 * gee.squaredNorm();
    return {value(Y), d1, d2, d3, d4};
  }

  double step_along_tangent(const CMatrix& Yx, const CMatrix& P,
                            const CMatrix& Q) const override {
    const CMatrix rp = Yx * (Yx.adjoint() * P) - target_times(P);  // (X - A) P
    const double num = 2.0 * real_inner(Q, rp);
    const CMatrix gpp = P.adjoint() * P;
    const CMatrix gqq = Q.adjoint() * Q;
    const CMatrix gpq = P.adjoint() * Q;
    const double den = 2.0 * (gpp * gqq).trace().real() +
                       2.0 * (gpq * gpq).trace().real();
    if (!(den > 0)) return 1.0;
    const double t = -num / den;
    return (std::isfinite(t) && t > 0) ? t : 1.0;
  }

  void dump(std::ostream& os) const override {
    detail::put_header(os, 0);
    detail::put_u64(os, n_);
    detail::put_u32(os, factored() ? 1 : 0);
    if (factored()) {
      detail::put_u64(os, G_.cols());
      detail::put_cmatrix(os, G_);
    } else {
      detail::put_cmatrix(os, A_);
    }
  }

 private:
  EigenCost(const CMatrix& G, int) : G_(G), n_(G.rows()) {}

  CMatrix target_times(const CMatrix& V) const {
    if (factored()) return G_ * (G_.adjoint() * V);
    return A_ * V;
  }

  CMatrix dense_target() const {
    if (factored()) return G_ * G_.adjoint();
    return A_;
  }

  CMatrix A_;  // dense target, empty when factored
  CMatrix G_;  // factor target, empty when dense
  Index n_;
};

// ---------------------------------------------------------------------------
// Hermitian matrix completion f(X) = 1/2 ||P_Omega(X - A)||_F^2. Omega is a
// symmetric index set stored with both (i,j) and (j,i) present; target values
// are only known on Omega.
// ---------------------------------------------------------------------------
class CompletionCost : public CostModel {
 public:
  CompletionCost(Index n, std::vector<Index> rows, std::vector<Index> cols,
                 std::vector<std::complex<double>> targets)
      : n_(n),
        rows_(std::move(rows)),
        cols_(std::move(cols)),
        targets_(std::move(targets)) {
    if (rows_.size() != cols_.size() || rows_.size() != targets_.size())
      throw std::invalid_argument("CompletionCost: index/value length mismatch");
    check_symmetry();
  }

  Index dim() const override { return n_; }
  std::size_t sample_count() const { return rows_.size(); }
  const std::vector<Index>& sample_rows() const { return rows_; }
  const std::vector<Index>& sample_cols() const { return cols_; }

  double value(const CMatrix& Y) const override {
    double acc = 0.0;
    for (std::size_t k = 0; k < rows_.size(); ++k)
      acc += std::norm(entry(Y, Y, k) - targets_[k]);
    return 0.5 * acc;
  }

  GradPair grad_times(const CMatrix& Y, const CMatrix& V) const override {
    std::vector<std::complex<double>> vals = residual_values(Y);
    return {scatter_times(vals, V, false), scatter_times(vals, V, true)};
  }

  CMatrix hess_times(const CMatrix& P, const CMatrix& Q,
                     const CMatrix& V) const override {
    std::vector<std::complex<double>> vals(rows_.size());
    for (std::size_t k = 0; k < rows_.size(); ++k)
      vals[k] = entry(P, Q, k) + entry(Q, P, k);
    return scatter_times(vals, V, false);
  }

  RVector residual(const CMatrix& Y) const override {
    return realify_values(residual_values(Y));
  }

  RVector apply_measurement(const CMatrix& P, const CMatrix& Q) const override {
    std::vector<std::complex<double>> vals(rows_.size());
    for (std::size_t k = 0; k < rows_.size(); ++k)
      vals[k] = entry(P, Q, k) + entry(Q, P, k);
    return realify_values(vals);
  }

  void dump(std::ostream& os) const override {
    detail::put_header(os, 1);
    detail::put_u64(os, n_);
    detail::put_u64(os, rows_.size());
    detail::put_index_list(os, rows_);
    detail::put_index_list(os, cols_);
    for (const auto& t : targets_) {
      detail::put_f64(os, t.real());
      detail::put_f64(os, t.imag());
    }
  }

 private:
  // (P Q*)_{ij} for sample k.
  std::complex<double> entry(const CMatrix& P, const CMatrix& Q,
                             std::size_t k) const {
    return Q.row(cols_[k]).dot(P.row(rows_[k]));
  }

  std::vector<std::complex<double>> residual_values(const CMatrix& Y) const {
    std::vector<std::complex<double>> vals(rows_.size());
    for (std::size_t k = 0; k < rows_.size(); ++k)
      vals[k] = entry(Y, Y, k) - targets_[k];
    return vals;
  }

  /// M V (adjoint = false) or M* V (adjoint = true) for the sparse Hermitian
  /// M = P_Omega(residual). The two paths traverse the index set in
  /// transposed order; they agree exactly when Omega is symmetric and the
  /// residual Hermitian.
  CMatrix scatter_times(const std::vector<std::complex<double>>& vals,
                        const CMatrix& V, bool adjoint) const {
    CMatrix out = CMatrix::Zero(n_, V.cols());
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      if (!adjoint)
        out.row(rows_[k]) += vals[k] * V.row(cols_[k]);
      else
        out.row(cols_[k]) += std::conj(vals[k]) * V.row(rows_[k]);
    }
    return out;
  }

  RVector realify_values(const std::vector<std::complex<double>>& vals) const {
    RVector v(2 * vals.size());
    for (std::size_t k = 0; k < vals.size(); ++k) {
      v(2 * k) = vals[k].real();
      v(2 * k + 1) = vals[k].imag();
    }
    return v;
  }

  void check_symmetry() const {
    std::vector<std::pair<Index, Index>> idx(rows_.size());
    for (std::size_t k = 0; k < rows_.size(); ++k)
      idx[k] = {rows_[k], cols_[k]};
    std::vector<std::pair<Index, Index>> sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("CompletionCost: duplicate sample index");
    for (const auto& [i, j] : idx) {
      if (i < 0 || j < 0 || i >= n_ || j >= n_)
        throw std::invalid_argument("CompletionCost: index out of range");
      if (!std::binary_search(sorted.begin(), sorted.end(),
                              std::make_pair(j, i)))
        throw std::invalid_argument("CompletionCost: sampling set not symmetric");
    }
  }

  Index n_;
  std::vector<Index> rows_, cols_;
  std::vector<std::complex<double>> targets_;
};

// ---------------------------------------------------------------------------
// PhaseLift cost f(X) = 1/2 ||A(X) - b||^2 with
// A(X) = [diag(Z^1 X Z^1*); ...; diag(Z^m X Z^m*)], Z^i = DFT Diag(M_i).
// The DFT is the plain unnormalized forward transform; its conjugate
// transpose is n times the normalized inverse transform. Z^i is never
// materialized: every product is mask-scaling plus an FFT per column.
// ---------------------------------------------------------------------------
class PhaseLiftCost : public CostModel {
 public:
  PhaseLiftCost(CMatrix masks, RVector b)
      : masks_(std::move(masks)), b_(std::move(b)) {
    if (b_.size() != masks_.rows() * masks_.cols())
      throw std::invalid_argument("PhaseLiftCost: observation length mismatch");
  }

  Index dim() const override { return masks_.rows(); }
  Index num_masks() const { return masks_.cols(); }
  const CMatrix& masks() const { return masks_; }
  const RVector& observations() const { return b_; }

  double value(const CMatrix& Y) const override {
    return 0.5 * residual(Y).squaredNorm();
  }

  GradPair grad_times(const CMatrix& Y, const CMatrix& V) const override {
    CMatrix g = adjoint_times(residual(Y), V);
    return {g, g};
  }

  CMatrix hess_times(const CMatrix& P, const CMatrix& Q,
                     const CMatrix& V) const override {
    return adjoint_times(apply_measurement(P, Q), V);
  }

  RVector residual(const CMatrix& Y) const override {
    const Index n = dim(), m = num_masks();
    RVector out(n * m);
    for (Index i = 0; i < m; ++i) {
      CMatrix W = masked_fft(i, Y);
      out.segment(i * n, n) = W.rowwise().squaredNorm() - b_.segment(i * n, n);
    }
    return out;
  }

  RVector apply_measurement(const CMatrix& P, const CMatrix& Q) const override {
    const Index n = dim(), m = num_masks();
    RVector out(n * m);
    for (Index i = 0; i < m; ++i) {
      CMatrix WP = masked_fft(i, P);
      CMatrix WQ = masked_fft(i, Q);
      out.segment(i * n, n) =
          2.0 * (WP.array() * WQ.array().conjugate()).rowwise().sum().real();
    }
    return out;
  }

  /// A*(w) V = sum_i Diag(conj M_i) DFT^H Diag(w^i) DFT Diag(M_i) V.
  CMatrix adjoint_times(const RVector& w, const CMatrix& V) const {
    const Index n = dim(), m = num_masks();
    if (w.size() != n * m)
      throw std::invalid_argument("PhaseLiftCost: measurement length mismatch");
    CMatrix out = CMatrix::Zero(n, V.cols());
    Eigen::FFT<double> fft;
    for (Index i = 0; i < m; ++i) {
      CMatrix T = masked_fft(i, V);
      T.array().colwise() *=
          w.segment(i * n, n).array().cast<std::complex<double>>();
      // DFT^H = n * inverse DFT.
      for (Index j = 0; j < T.cols(); ++j) {
        CVector col = T.col(j), back;
        fft.inv(back, col);
        T.col(j) = static_cast<double>(n) * back;
      }
      out += masks_.col(i).conjugate().asDiagonal() * T;
    }
    return out;
  }

  void dump(std::ostream& os) const override {
    detail::put_header(os, 2);
    detail::put_u64(os, dim());
    detail::put_u64(os, num_masks());
    detail::put_cmatrix(os, masks_);
    detail::put_rvector(os, b_);
  }

 private:
  // DFT(Diag(M_i) V), column by column.
  CMatrix masked_fft(Index i, const CMatrix& V) const {
    CMatrix T = masks_.col(i).asDiagonal() * V;
    Eigen::FFT<double> fft;
    for (Index j = 0; j < T.cols(); ++j) {
      CVector col = T.col(j), f;
      fft.fwd(f, col);
      T.col(j) = f;
    }
    return T;
  }

  CMatrix masks_;  // n x m, one mask per column
  RVector b_;      // length n*m
};

// ---------------------------------------------------------------------------
// Interferometry recovery f(X) = 1/2 ||P_Omega(F X F* - d d*)||_F^2 with
// F (m x n, m > n) and Omega a symmetric sampling set over m x m entries that
// contains the full diagonal.
// ---------------------------------------------------------------------------
class InterferometryCost : public CostModel {
 public:
  InterferometryCost(CMatrix F, CVector d, std::vector<Index> rows,
                     std::vector<Index> cols)
      : F_(std::move(F)),
        d_(std::move(d)),
        rows_(std::move(rows)),
        cols_(std::move(cols)) {
    if (F_.rows() <= F_.cols())
      throw std::invalid_argument("InterferometryCost: need m > n");
    if (d_.size() != F_.rows())
      throw std::invalid_argument("InterferometryCost: data length mismatch");
    if (rows_.size() != cols_.size())
      throw std::invalid_argument("InterferometryCost: index length mismatch");
    check_sampling();
  }

  Index dim() const override { return F_.cols(); }
  const CMatrix& system_matrix() const { return F_; }
  const CVector& data() const { return d_; }
  std::size_t sample_count() const { return rows_.size(); }

  double value(const CMatrix& Y) const override {
    const CMatrix W = F_ * Y;
    double acc = 0.0;
    for (std::size_t k = 0; k < rows_.size(); ++k)
      acc += std::norm(lifted_entry(W, W, k) - data_entry(k));
    return 0.5 * acc;
  }

  GradPair grad_times(const CMatrix& Y, const CMatrix& V) const override {
    const CMatrix W = F_ * Y;
    std::vector<std::complex<double>> vals(rows_.size());
    for (std::size_t k = 0; k < rows_.size(); ++k)
      vals[k] = lifted_entry(W, W, k) - data_entry(k);
    const CMatrix T = F_ * V;
    return {F_.adjoint() * scatter_times(vals, T, false),
            F_.adjoint() * scatter_times(vals, T, true)};
  }

  CMatrix hess_times(const CMatrix& P, const CMatrix& Q,
                     const CMatrix& V) const override {
    const CMatrix WP = F_ * P;
    const CMatrix WQ = F_ * Q;
    std::vector<std::complex<double>> vals(rows_.size());
    for (std::size_t k = 0; k < rows_.size(); ++k)
      vals[k] = lifted_entry(WP, WQ, k) + lifted_entry(WQ, WP, k);
    return F_.adjoint() * scatter_times(vals, F_ * V, false);
  }

  RVector residual(const CMatrix& Y) const override {
    const CMatrix W = F_ * Y;
    RVector v(2 * rows_.size());
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      const std::complex<double> r = lifted_entry(W, W, k) - data_entry(k);
      v(2 * k) = r.real();
      v(2 * k + 1) = r.imag();
    }
    return v;
  }

  RVector apply_measurement(const CMatrix& P, const CMatrix& Q) const override {
    const CMatrix WP = F_ * P;
    const CMatrix WQ = F_ * Q;
    RVector v(2 * rows_.size());
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      const std::complex<double> z =
          lifted_entry(WP, WQ, k) + lifted_entry(WQ, WP, k);
      v(2 * k) = z.real();
      v(2 * k + 1) = z.imag();
    }
    return v;
  }

  void dump(std::ostream& os) const override {
    detail::put_header(os, 3);
    detail::put_u64(os, F_.rows());
    detail::put_u64(os, F_.cols());
    detail::put_cmatrix(os, F_);
    detail::put_cmatrix(os, d_);
    detail::put_u64(os, rows_.size());
    detail::put_index_list(os, rows_);
    detail::put_index_list(os, cols_);
  }

 private:
  // (W_P W_Q*)_{ij} for sample k.
  std::complex<double> lifted_entry(const CMatrix& WP, const CMatrix& WQ,
                                    std::size_t k) const {
    return WQ.row(cols_[k]).dot(WP.row(rows_[k]));
  }

  std::complex<double> data_entry(std::size_t k) const {
    return d_(rows_[k]) * std::conj(d_(cols_[k]));
  }

  CMatrix scatter_times(const std::vector<std::complex<double>>& vals,
                        const CMatrix& T, bool adjoint) const {
    CMatrix out = CMatrix::Zero(F_.rows(), T.cols());
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      if (!adjoint)
        out.row(rows_[k]) += vals[k] * T.row(cols_[k]);
      else
        out.row(cols_[k]) += std::conj(vals[k]) * T.row(rows_[k]);
    }
    return out;
  }

  void check_sampling() const {
    const Index m = F_.rows();
    std::vector<std::pair<Index, Index>> idx(rows_.size());
    for (std::size_t k = 0; k < rows_.size(); ++k)
      idx[k] = {rows_[k], cols_[k]};
    std::vector<std::pair<Index, Index>> sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("InterferometryCost: duplicate sample index");
    for (const auto& [i, j] : idx) {
      if (i < 0 || j < 0 || i >= m || j >= m)
        throw std::invalid_argument("InterferometryCost: index out of range");
      if (!std::binary_search(sorted.begin(), sorted.end(),
                              std::make_pair(j, i)))
        throw std::invalid_argument(
            "InterferometryCost: sampling set not symmetric");
    }
    for (Index i = 0; i < m; ++i)
      if (!std::binary_search(sorted.begin(), sorted.end(),
                              std::make_pair(i, i)))
        throw std::invalid_argument(
            "InterferometryCost: sampling set must contain the diagonal");
  }

  CMatrix F_;
  CVector d_;
  std::vector<Index> rows_, cols_;
};

}  // namespace psdmanopt
