#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "psdmanopt/cost_models.hpp"
#include "psdmanopt/embedded.hpp"
#include "psdmanopt/quotient.hpp"

namespace psdmanopt {

struct SolverConfig {
  int max_iters = 200;
  double grad_tol = 1e-8;
  double armijo_c = 1e-4;      // paper constant 0.0001
  double armijo_shrink = 0.5;  // paper constant 0.5
  int max_backtracks = 50;
  // Optional extra stop on the metric-independent ||P^t_X(grad f)||_F;
  // 0 disables it. Used for fair cross-metric comparisons.
  double emb_grad_tol = 0.0;

  void validate() const {
    if (!(armijo_c > 0)) throw std::invalid_argument("SolverConfig: armijo_c must be > 0");
    if (!(armijo_shrink > 0 && armijo_shrink < 1))
      throw std::invalid_argument("SolverConfig: armijo_shrink must be in (0,1)");
    if (max_iters < 0) throw std::invalid_argument("SolverConfig: max_iters must be >= 0");
    if (max_backtracks < 0)
      throw std::invalid_argument("SolverConfig: max_backtracks must be >= 0");
  }
};

enum class SolveStatus { converged, max_iters, backtrack_exhausted };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::backtrack_exhausted: return "backtrack_exhausted";
  }
  return "?";
}

/// One visited iterate. `step` and `backtracks` describe the accepted move
/// away from this iterate (zero on the final row). beta/dir_deriv are kept
/// in memory for invariant checks; they are not serialized.
struct IterationRecord {
  int iter = 0;
  double cost = 0;
  double gradnorm = 0;
  double step = 0;
  int backtracks = 0;
  double seconds = 0;
  double emb_gradnorm = 0;
  double beta = 0;
  bool beta_clamped = false;
  double dir_deriv = 0;
};

struct IterationTrace {
  std::vector<IterationRecord> records;
  SolveStatus status = SolveStatus::max_iters;
};

template <class Point>
struct SolveResult {
  Point point;
  IterationTrace trace;
};

/// Deterministic CSV serialization (17 significant digits). The seconds
/// column carries wall-clock time and is excluded from determinism checks.
inline void write_trace_csv(std::ostream& os, const IterationTrace& trace) {
  auto fmt = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "iter,cost,gradnorm,step,backtracks,seconds,embgradnorm\n";
  for (const auto& r : trace.records) {
    os << r.iter << ',' << fmt(r.cost) << ',' << fmt(r.gradnorm) << ','
       << fmt(r.step) << ',' << r.backtracks << ',' << fmt(r.seconds) << ','
       << fmt(r.emb_gradnorm) << '\n';
  }
}

/// ||P^t_X(grad f)||_F at X = Y Y* from the already-computed
/// D = (grad f + grad f*) Y, using any orthonormal basis of range(Y).
inline double embedded_gradnorm_from_D(const CMatrix& Y, const CMatrix& D) {
  auto [Q, R] = qr_compact(Y);
  // Herm(grad f) U = (D/2) R^{-1} since U = Y R^{-1}.
  CMatrix T = R.adjoint()
                  .triangularView<Eigen::Lower>()
                  .solve(CMatrix(0.5 * D.adjoint()))
                  .adjoint();
  const CMatrix H = Q.adjoint() * T;
  const CMatrix Up = T - Q * H;
  return std::sqrt(std::max(H.squaredNorm() + 2.0 * Up.squaredNorm(), 0.0));
}

// ---------------------------------------------------------------------------
// Geometry adapters. Each one presents the same policy surface to the driver:
// value/grad/inner/combine/retract/transport/initial_step plus trace hooks.
// ---------------------------------------------------------------------------

class EmbeddedGeometry {
 public:
  using Point = EigenPoint;
  using Tangent = EmbeddedTangent;

  double value(const CostModel& c, const Point& x) const {
    return c.value(x.factor());
  }
  Tangent grad(const CostModel& c, const Point& x) const {
    return riemannian_grad(x, c);
  }
  double inner(const Point&, const Tangent& a, const Tangent& b) const {
    return embedded_inner(a, b);
  }
  Tangent combine(double ca, const Tangent& a, double cb,
                  const Tangent& b) const {
    return embedded_combine(ca, a, cb, b);
  }
  Point retract(const Point& x, const Tangent& eta, double t) const {
    return psdmanopt::retract(x, eta, t);
  }
  Tangent transport(const Point& x1, const Point& x2, const Tangent& v) const {
    return vector_transport(x1, x2, v);
  }
  double initial_step(const CostModel& c, const Point& x,
                      const Tangent& eta) const {
    const CMatrix Q = x.U() * (0.5 * eta.H) + eta.Up;
    return c.step_along_tangent(x.factor(), x.U(), Q);
  }
  double embedded_gradnorm(const CostModel&, const Point&,
                           const Tangent& xi) const {
    return embedded_norm(xi);
  }
  CMatrix dense_X(const Point& x) const { return x.embed(); }
};

class QuotientGeometry {
 public:
  using Point = FactorPoint;
  using Tangent = HorizontalVector;

  explicit QuotientGeometry(MetricTag tag) : tag_(tag) {}
  MetricTag tag() const { return tag_; }

  double value(const CostModel& c, const Point& x) const {
    return c.value(x.Y());
  }
  Tangent grad(const CostModel& c, const Point& x) const {
    return grad_F(x, c, tag_);
  }
  double inner(const Point& x, const Tangent& a, const Tangent& b) const {
    return metric_eval(x, a, b);
  }
  Tangent combine(double ca, const Tangent& a, double cb,
                  const Tangent& b) const {
    return horizontal_combine(ca, a, cb, b);
  }
  Point retract(const Point& x, const Tangent& eta, double t) const {
    return psdmanopt::retract(x, eta, t);
  }
  Tangent transport(const Point& x1, const Point& x2, const Tangent& v) const {
    return psdmanopt::transport(x1, x2, v);
  }
  double initial_step(const CostModel& c, const Point& x,
                      const Tangent& eta) const {
    return exact_linesearch_poly(c, x.Y(), eta.V);
  }
  double embedded_gradnorm(const CostModel&, const Point& x,
                           const Tangent& xi) const {
    switch (tag_) {
      case MetricTag::g1:
        return embedded_gradnorm_from_D(x.Y(), xi.V);
      case MetricTag::g2:
        return embedded_gradnorm_from_D(x.Y(), CMatrix(xi.V * x.gram()));
      case MetricTag::g3:
        // g3 is isometric to the embedded metric on horizontal vectors.
        return std::sqrt(std::max(metric_eval(x, xi, xi), 0.0));
    }
    return 0.0;
  }
  CMatrix dense_X(const Point& x) const { return x.embed(); }

 private:
  MetricTag tag_;
};

/// Plain CG on F(Y) = f(YY*): no rank guards, identity transport, Euclidean
/// inner products. This is the Burer-Monteiro oracle the quotient-g1 method
/// is measured against.
class BmGeometry {
 public:
  using Point = CMatrix;
  using Tangent = CMatrix;

  double value(const CostModel& c, const Point& x) const { return c.value(x); }
  Tangent grad(const CostModel& c, const Point& x) const {
    const GradPair g = c.grad_times(x, x);
    return g.gV + g.gAdjV;
  }
  double inner(const Point&, const Tangent& a, const Tangent& b) const {
    return real_inner(a, b);
  }
  Tangent combine(double ca, const Tangent& a, double cb,
                  const Tangent& b) const {
    return ca * a + cb * b;
  }
  Point retract(const Point& x, const Tangent& eta, double t) const {
    return x + t * eta;
  }
  Tangent transport(const Point&, const Point&, const Tangent& v) const {
    return v;
  }
  double initial_step(const CostModel& c, const Point& x,
                      const Tangent& eta) const {
    return exact_linesearch_poly(c, x, eta);
  }
  double embedded_gradnorm(const CostModel&, const Point& x,
                           const Tangent& xi) const {
    return embedded_gradnorm_from_D(x, xi);
  }
  CMatrix dense_X(const Point& x) const { return x * x.adjoint(); }
};

/// Quotient manifold with metric g3 driven through the embedded moves:
/// retraction and transport are conjugated by the isomorphism L, and the
/// line-search initializer matches the embedded one. This configuration is
/// iterate-equivalent to EmbeddedGeometry in X-space.
class G3EmbeddedGeometry {
 public:
  struct Point {
    FactorPoint Y;
    EigenPoint X;
  };
  using Tangent = HorizontalVector;

  static Point make_point(FactorPoint Y) {
    EigenPoint X = Y.to_eigen_point();
    return {std::move(Y), std::move(X)};
  }

  double value(const CostModel& c, const Point& x) const {
    return c.value(x.Y.Y());
  }
  Tangent grad(const CostModel& c, const Point& x) const {
    return grad_F(x.Y, c, MetricTag::g3);
  }
  double inner(const Point& x, const Tangent& a, const Tangent& b) const {
    return metric_eval(x.Y, a, b);
  }
  Tangent combine(double ca, const Tangent& a, double cb,
                  const Tangent& b) const {
    return horizontal_combine(ca, a, cb, b);
  }
  Point retract(const Point& x, const Tangent& eta, double t) const {
    G3RetractResult r = g3_embedded_retract(x.Y, x.X, eta, t);
    return {std::move(r.Y), std::move(r.X)};
  }
  Tangent transport(const Point& x1, const Point& x2, const Tangent& v) const {
    return g3_embedded_transport(x1.Y, x1.X, x2.Y, x2.X, v);
  }
  double initial_step(const CostModel& c, const Point& x,
                      const Tangent& eta) const {
    // argmin_t f(YY* + t (Y eta* + eta Y*)), the matched initializer.
    return c.step_along_tangent(x.Y.Y(), x.Y.Y(), eta.V);
  }
  double embedded_gradnorm(const CostModel&, const Point& x,
                           const Tangent& xi) const {
    return std::sqrt(std::max(metric_eval(x.Y, xi, xi), 0.0));
  }
  CMatrix dense_X(const Point& x) const { return x.Y.embed(); }
};

/// Per-iterate hook; receives the dense X_k for equivalence studies.
using IterateObserver = std::function<void(int, const CMatrix&)>;

/// Riemannian conjugate gradient with PR+ (clamped at zero), an exact
/// line-search initializer and Armijo backtracking. One code path serves all
/// geometries so that the equivalence theorems compare like against like.
template <class Geo>
SolveResult<typename Geo::Point> run_rcg(const Geo& geo, const CostModel& cost,
                                         typename Geo::Point x0,
                                         const SolverConfig& cfg,
                                         const IterateObserver& observer = {}) {
  using Point = typename Geo::Point;
  using Tangent = typename Geo::Tangent;
  cfg.validate();

  SolveResult<Point> out{std::move(x0), {}};
  out.trace.status = SolveStatus::max_iters;
  auto& records = out.trace.records;

  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t_start)
        .count();
  };

  double f = geo.value(cost, out.point);
  std::optional<Point> prev_x;
  std::optional<Tangent> prev_xi, prev_eta;
  double prev_gg = 0;

  for (int k = 1;; ++k) {
    Tangent xi = geo.grad(cost, out.point);
    const double gg = std::max(geo.inner(out.point, xi, xi), 0.0);
    const double gn = std::sqrt(gg);

    IterationRecord rec;
    rec.iter = k;
    rec.cost = f;
    rec.gradnorm = gn;
    rec.emb_gradnorm = geo.embedded_gradnorm(cost, out.point, xi);
    rec.seconds = elapsed();
    if (observer) observer(k, geo.dense_X(out.point));

    if (gn < cfg.grad_tol ||
        (cfg.emb_grad_tol > 0 && rec.emb_gradnorm < cfg.emb_grad_tol)) {
      out.trace.status = SolveStatus::converged;
      records.push_back(rec);
      break;
    }
    if (k > cfg.max_iters) {
      out.trace.status = SolveStatus::max_iters;
      records.push_back(rec);
      break;
    }

    // Conjugate direction: eta_k = -xi_k + beta_k T(eta_{k-1}).
    Tangent eta = geo.combine(-1.0, xi, 0.0, xi);
    double beta = 0;
    bool clamped = false;
    if (prev_x) {
      const Tangent txi = geo.transport(*prev_x, out.point, *prev_xi);
      const Tangent teta = geo.transport(*prev_x, out.point, *prev_eta);
      beta = (gg - geo.inner(out.point, xi, txi)) / prev_gg;
      if (beta < 0) {
        beta = 0;
        clamped = true;
      }
      if (beta > 0) eta = geo.combine(-1.0, xi, beta, teta);
    }
    double dd = geo.inner(out.point, xi, eta);
    if (!(dd < 0)) {
      // Not a descent direction numerically: restart with steepest descent.
      eta = geo.combine(-1.0, xi, 0.0, xi);
      beta = 0;
      clamped = true;
      dd = -gg;
    }
    rec.beta = beta;
    rec.beta_clamped = clamped;
    rec.dir_deriv = dd;

    const double t0 = geo.initial_step(cost, out.point, eta);
    bool accepted = false;
    double t = t0, fnew = f;
    std::optional<Point> xnew;
    int m = 0;
    for (; m <= cfg.max_backtracks; ++m) {
      t = t0 * std::pow(cfg.armijo_shrink, m);
      try {
        xnew = geo.retract(out.point, eta, t);
      } catch (const BoundaryError&) {
        continue;  // step left the manifold: shrink and retry
      }
      fnew = geo.value(cost, *xnew);
      if (f - fnew >= -cfg.armijo_c * t * dd) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      rec.step = 0;
      rec.backtracks = cfg.max_backtracks;
      records.push_back(rec);
      out.trace.status = SolveStatus::backtrack_exhausted;
      break;
    }

    rec.step = t;
    rec.backtracks = m;
    records.push_back(rec);

    prev_x = std::move(out.point);
    prev_xi = std::move(xi);
    prev_eta = std::move(eta);
    prev_gg = gg;
    out.point = std::move(*xnew);
    f = fnew;
  }
  return out;
}

/// Plain Burer-Monteiro CG on F(Y) = f(YY*); the equivalence oracle for the
/// quotient-g1 method.
inline SolveResult<CMatrix> run_bm_cg(const CostModel& cost, const CMatrix& Y0,
                                      const SolverConfig& cfg,
                                      const IterateObserver& observer = {}) {
  return run_rcg(BmGeometry{}, cost, Y0, cfg, observer);
}

}  // namespace psdmanopt
