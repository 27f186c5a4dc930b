#pragma once

#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "psdmanopt/cost_models.hpp"
#include "psdmanopt/embedded.hpp"
#include "psdmanopt/quotient.hpp"
#include "psdmanopt/rng.hpp"

namespace psdmanopt {

/// Orthonormal basis (w.r.t. the tagged metric) of the horizontal space at Y.
struct HorizontalBasis {
  MetricTag tag;
  std::vector<CMatrix> vectors;  // 2np - p^2 of them

  Index size() const { return static_cast<Index>(vectors.size()); }
};

/// Builds an orthonormal horizontal basis by metric Gram-Schmidt over the
/// structured parameterizations: g1 spans { Y (Y*Y)^{-1} S + Y_perp K },
/// g2/g3 span { Y S + Y_perp K } with S Hermitian. Dense analysis only;
/// requests beyond basis dimension 2000 are rejected.
inline HorizontalBasis build_basis(const FactorPoint& Y, MetricTag tag) {
  const Index n = Y.n(), p = Y.p();
  const Index dim = 2 * n * p - p * p;
  if (dim > 2000)
    throw std::invalid_argument(
        "build_basis: basis dimension 2np-p^2 exceeds the dense-analysis cap "
        "of 2000");

  // Orthonormal complement of range(Y) from a full QR.
  Eigen::HouseholderQR<CMatrix> qr(Y.Y());
  const CMatrix Qfull = qr.householderQ() * CMatrix::Identity(n, n);
  const CMatrix Yperp = Qfull.rightCols(n - p);

  const CMatrix Ybase =
      (tag == MetricTag::g1) ? CMatrix(Y.apply_gram_inv_right(Y.Y())) : Y.Y();

  std::vector<CMatrix> raw;
  raw.reserve(dim);
  const std::complex<double> iunit(0.0, 1.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  // Hermitian block: p^2 real degrees of freedom.
  for (Index i = 0; i < p; ++i) {
    CMatrix S = CMatrix::Zero(p, p);
    S(i, i) = 1.0;
    raw.push_back(Ybase * S);
  }
  for (Index i = 0; i < p; ++i)
    for (Index j = i + 1; j < p; ++j) {
      CMatrix S = CMatrix::Zero(p, p);
      S(i, j) = inv_sqrt2;
      S(j, i) = inv_sqrt2;
      raw.push_back(Ybase * S);
      S(i, j) = iunit * inv_sqrt2;
      S(j, i) = -iunit * inv_sqrt2;
      raw.push_back(Ybase * S);
    }
  // Perpendicular block: 2(n-p)p real degrees of freedom.
  for (Index i = 0; i < n - p; ++i)
    for (Index j = 0; j < p; ++j) {
      CMatrix K = CMatrix::Zero(n - p, p);
      K(i, j) = 1.0;
      raw.push_back(Yperp * K);
      K(i, j) = iunit;
      raw.push_back(Yperp * K);
    }

  HorizontalBasis basis{tag, {}};
  basis.vectors.reserve(dim);
  for (CMatrix& v : raw) {
    // Two Gram-Schmidt passes in the tagged metric.
    for (int pass = 0; pass < 2; ++pass)
      for (const CMatrix& e : basis.vectors)
        v -= metric_eval(Y, e, v, tag) * e;
    const double nv = std::sqrt(std::max(metric_eval(Y, v, v, tag), 0.0));
    if (nv < 1e-10)
      throw std::runtime_error(
          "build_basis: dimension shortfall, geometry inconsistency");
    basis.vectors.push_back(v / nv);
  }
  return basis;
}

struct AssembledHessian {
  Eigen::MatrixXd matrix;      // symmetrized
  RVector eigenvalues;         // ascending
  double asymmetry = 0;        // relative, before symmetrization
};

/// Dense symmetric matrix of the quotient Hessian over the basis:
/// M_ab = g^i(Hess[e_a], e_b). Asymmetry beyond 1e-8 relative signals an
/// implementation error and throws.
inline AssembledHessian assemble_hessian(const FactorPoint& Y,
                                         const CostModel& cost,
                                         const HorizontalBasis& basis) {
  const Index d = basis.size();
  Eigen::MatrixXd M(d, d);
  for (Index a = 0; a < d; ++a) {
    const HorizontalVector ha{basis.vectors[a], basis.tag};
    const HorizontalVector He = hessian_apply(Y, ha, cost);
    for (Index b = 0; b < d; ++b)
      M(a, b) = metric_eval(Y, He.V, basis.vectors[b], basis.tag);
  }
  AssembledHessian out;
  const double scale = std::max(M.norm(), 1e-300);
  out.asymmetry = (M - M.transpose()).norm() / scale;
  if (out.asymmetry > 1e-8)
    throw std::runtime_error(
        "assemble_hessian: Hessian is not self-adjoint (asymmetry " +
        std::to_string(out.asymmetry) + ")");
  out.matrix = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.matrix);
  out.eigenvalues = es.eigenvalues();
  return out;
}

inline AssembledHessian assemble_hessian(const FactorPoint& Y,
                                         const CostModel& cost,
                                         MetricTag tag) {
  return assemble_hessian(Y, cost, build_basis(Y, tag));
}

/// Mixed central finite differences of F restricted to the horizontal space;
/// for the flat g1 geometry this is exactly the assembled Hessian matrix.
inline Eigen::MatrixXd fd_hessian_matrix(const FactorPoint& Y,
                                         const CostModel& cost,
                                         const HorizontalBasis& basis,
                                         double h = 1e-4) {
  const Index d = basis.size();
  Eigen::MatrixXd M(d, d);
  auto F = [&](const CMatrix& Z) { return cost.value(Z); };
  for (Index a = 0; a < d; ++a) {
    for (Index b = a; b < d; ++b) {
      const CMatrix& ea = basis.vectors[a];
      const CMatrix& eb = basis.vectors[b];
      const double fpp = F(Y.Y() + h * ea + h * eb);
      const double fpm = F(Y.Y() + h * ea - h * eb);
      const double fmp = F(Y.Y() - h * ea + h * eb);
      const double fmm = F(Y.Y() - h * ea - h * eb);
      M(a, b) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
      M(b, a) = M(a, b);
    }
  }
  return M;
}

struct RayleighReport {
  MetricTag tag = MetricTag::g1;
  double epsilon = 0;
  RVector eigenvalues;  // ascending
  double lambda_min = 0;
  double lambda_max = 0;
  double kappa = 0;  // lambda_max / lambda_min when lambda_min > 0
  double dist = 0;   // ||YY* - Xhat||_F
  double xhat_spectral_norm = 0;
};

/// Constructed near-boundary study: Y approaches the rank-r minimizer
/// Xhat = Uhat diag(sigma_hat) Uhat* with a controlled trailing block of size
/// epsilon. For p = r the point is an epsilon-perturbation of the exact
/// factor instead.
inline std::vector<RayleighReport> rq_limit_study(
    const CostModel& cost, const CMatrix& Uhat, const RVector& sigma_hat,
    Index p, MetricTag tag, const std::vector<double>& epsilon_schedule,
    std::uint64_t seed = 7) {
  const Index n = Uhat.rows(), r = Uhat.cols();
  if (p < r) throw std::invalid_argument("rq_limit_study: need p >= r");
  Rng rng(seed);

  const CMatrix Yhat = Uhat * sigma_hat.cwiseSqrt().asDiagonal();
  CMatrix W;  // p = r perturbation direction
  CMatrix Q;  // p > r orthonormal complement block
  if (p == r) {
    W = rng.cgaussian_matrix(n, p);
    W /= W.norm();
  } else {
    CMatrix Z = rng.cgaussian_matrix(n, p - r);
    Z -= Uhat * (Uhat.adjoint() * Z);
    Q = qr_compact(Z).first;
  }

  std::vector<RayleighReport> reports;
  for (double eps : epsilon_schedule) {
    CMatrix Y(n, p);
    if (p == r) {
      Y = Yhat + eps * W;
    } else {
      Y.leftCols(r) = Yhat;
      Y.rightCols(p - r) = eps * Q;
    }
    FactorPoint fp(Y);
    const AssembledHessian H = assemble_hessian(fp, cost, tag);

    RayleighReport rep;
    rep.tag = tag;
    rep.epsilon = eps;
    rep.eigenvalues = H.eigenvalues;
    rep.lambda_min = H.eigenvalues(0);
    rep.lambda_max = H.eigenvalues(H.eigenvalues.size() - 1);
    rep.kappa = rep.lambda_min > 0
                    ? rep.lambda_max / rep.lambda_min
                    : std::numeric_limits<double>::infinity();
    const CMatrix diff = Y * Y.adjoint() - Uhat * sigma_hat.asDiagonal() * Uhat.adjoint();
    rep.dist = diff.norm();
    rep.xhat_spectral_norm = sigma_hat.maxCoeff();
    reports.push_back(std::move(rep));
  }
  return reports;
}

/// CSV serialization of Rayleigh reports: tag,epsilon,lambda_min,lambda_max,
/// kappa,dist.
inline void write_rayleigh_csv(std::ostream& os,
                               const std::vector<RayleighReport>& reports) {
  auto fmt = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "tag,epsilon,lambda_min,lambda_max,kappa,dist\n";
  for (const auto& r : reports)
    os << to_string(r.tag) << ',' << fmt(r.epsilon) << ',' << fmt(r.lambda_min)
       << ',' << fmt(r.lambda_max) << ',' << fmt(r.kappa) << ','
       << fmt(r.dist) << '\n';
}

/// Validates the embedded Hessian against second differences of f through the
/// second-order retraction: g(Hess[xi], xi) vs d^2/dt^2 f(R2(t xi)) at t = 0.
/// Returns the worst relative error over the sampled directions.
inline double fd_hessian_check_embedded(const EigenPoint& X,
                                        const CostModel& cost,
                                        int num_directions = 20,
                                        double h = 1e-4,
                                        std::uint64_t seed = 11) {
  Rng rng(seed);
  const double f0 = cost.value(X.factor());
  double worst = 0;
  for (int s = 0; s < num_directions; ++s) {
    EmbeddedTangent xi = make_tangent(X, rng.cgaussian_matrix(X.p(), X.p()),
                                      rng.cgaussian_matrix(X.n(), X.p()));
    const double nrm = embedded_norm(xi);
    if (!(nrm > 0)) continue;
    xi = xi.scaled(1.0 / nrm);

    const double quad = embedded_inner(hessian_apply(X, xi, cost), xi);
    const double fp = cost.value(second_order_retract(X, xi.scaled(h)).factor());
    const double fm = cost.value(second_order_retract(X, xi.scaled(-h)).factor());
    const double fd = (fp - 2.0 * f0 + fm) / (h * h);
    const double rel = std::abs(fd - quad) / std::max(std::abs(quad), 1e-10);
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace psdmanopt
