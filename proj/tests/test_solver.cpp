#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <sstream>

#include "psdmanopt/solver.hpp"
#include "psdmanopt/rng.hpp"

#include "oracles.hpp"

using namespace psdmanopt;

namespace {

// f(X) = 1/2||X - GG*||^2 instance with planted rank r and a seeded start.
struct EigInstance {
  EigenCost cost;
  CMatrix Y0;
  CMatrix Xhat;
};

EigInstance make_eig_instance(Index n, Index r, Index p, std::uint64_t seed) {
  Rng rng(seed);
  CMatrix G = rng.cgaussian_matrix(n, r) / std::sqrt(double(n));
  CMatrix Y0 = rng.cgaussian_matrix(n, p) / std::sqrt(double(n));
  return {EigenCost::from_factor(G), Y0, G * G.adjoint()};
}

// Cost whose reported gradient points uphill; Armijo can never succeed.
class LyingCost : public CostModel {
 public:
  explicit LyingCost(const CMatrix& A) : inner_(A) {}
  Index dim() const override { return inner_.dim(); }
  double value(const CMatrix& Y) const override { return inner_.value(Y); }
  GradPair grad_times(const CMatrix& Y, const CMatrix& V) const override {
    GradPair g = inner_.grad_times(Y, V);
    return {-g.gV, -g.gAdjV};
  }
  CMatrix hess_times(const CMatrix& P, const CMatrix& Q,
                     const CMatrix& V) const override {
    return inner_.hess_times(P, Q, V);
  }
  RVector residual(const CMatrix& Y) const override {
    return inner_.residual(Y);
  }
  RVector apply_measurement(const CMatrix& P, const CMatrix& Q) const override {
    return inner_.apply_measurement(P, Q);
  }
  void dump(std::ostream& os) const override { inner_.dump(os); }

 private:
  EigenCost inner_;
};

}  // namespace

TEST_CASE("already-converged start yields a single-record trace") {
  auto inst = make_eig_instance(12, 3, 3, 301);
  SolverConfig cfg;
  cfg.grad_tol = 1e-6;
  // Start at the planted minimizer.
  auto res = run_rcg(QuotientGeometry(MetricTag::g2), inst.cost,
                     FactorPoint(inst.cost.factor_G()), cfg);
  CHECK(res.trace.status == SolveStatus::converged);
  CHECK(res.trace.records.size() == 1);
  CHECK(res.trace.records[0].step == 0.0);
}

TEST_CASE("quotient g2 converges on a small eigenvalue instance") {
  auto inst = make_eig_instance(100, 5, 5, 302);
  SolverConfig cfg;
  cfg.max_iters = 100;
  cfg.grad_tol = 1e-8;
  auto res = run_rcg(QuotientGeometry(MetricTag::g2), inst.cost,
                     FactorPoint(inst.Y0), cfg);
  CHECK(res.trace.status == SolveStatus::converged);
  CHECK(res.trace.records.back().gradnorm < 1e-8);
  const CMatrix X = res.point.embed();
  CHECK((X - inst.Xhat).norm() <= 1e-7 * inst.Xhat.norm());
}

TEST_CASE("monotone descent and the Armijo certificate hold on every trace") {
  auto inst = make_eig_instance(40, 3, 4, 303);
  SolverConfig cfg;
  cfg.max_iters = 60;
  cfg.grad_tol = 1e-10;
  auto check_trace = [&](const IterationTrace& tr) {
    for (std::size_t k = 0; k + 1 < tr.records.size(); ++k) {
      const auto& r = tr.records[k];
      const auto& next = tr.records[k + 1];
      CHECK(next.cost <= r.cost + 1e-14 * (1 + std::abs(r.cost)));
      // Armijo inequality as recorded: f_k - f_{k+1} >= -c t g(xi, eta).
      CHECK(r.cost - next.cost >=
            -cfg.armijo_c * r.step * r.dir_deriv -
                1e-12 * (1 + std::abs(r.cost)));
      CHECK(r.beta >= 0.0);
    }
  };
  check_trace(run_rcg(EmbeddedGeometry{}, inst.cost,
                      FactorPoint(inst.Y0).to_eigen_point(), cfg)
                  .trace);
  for (MetricTag tag : {MetricTag::g1, MetricTag::g2, MetricTag::g3})
    check_trace(
        run_rcg(QuotientGeometry(tag), inst.cost, FactorPoint(inst.Y0), cfg)
            .trace);
  check_trace(run_bm_cg(inst.cost, inst.Y0, cfg).trace);
}

TEST_CASE("PR+ beta is clamped and clamping resets the direction") {
  // A p > r instance drives iterates toward the boundary where clamping
  // actually occurs.
  auto inst = make_eig_instance(30, 2, 4, 304);
  SolverConfig cfg;
  cfg.max_iters = 200;
  cfg.grad_tol = 1e-9;
  auto res = run_bm_cg(inst.cost, inst.Y0, cfg);
  bool saw_clamp = false;
  for (const auto& r : res.trace.records) {
    CHECK(r.beta >= 0.0);
    if (r.beta_clamped) {
      saw_clamp = true;
      CHECK(r.beta == 0.0);
      // With beta = 0 the direction is exactly -xi.
      CHECK(r.dir_deriv ==
            Catch::Approx(-r.gradnorm * r.gradnorm).epsilon(1e-12));
    }
  }
  INFO("clamping should occur at least once on this instance");
  CHECK(saw_clamp);
}

TEST_CASE("BM CG first direction is the negative Frechet gradient") {
  auto inst = make_eig_instance(15, 2, 3, 305);
  SolverConfig cfg;
  cfg.max_iters = 1;
  cfg.grad_tol = 0.0;
  auto res = run_bm_cg(inst.cost, inst.Y0, cfg);
  REQUIRE(res.trace.records.size() >= 1);
  const auto& r0 = res.trace.records[0];
  // eta_1 = -xi_1, so the directional derivative equals -||grad F||^2.
  CHECK(r0.dir_deriv ==
        Catch::Approx(-r0.gradnorm * r0.gradnorm).epsilon(1e-12));
}

TEST_CASE("scalar instance solves in one exact line-search step") {
  // n = p = 1, real data: A = [1], Y0 = [2]. F(y) = 1/2 (y^2 - 1)^2.
  // The derivative cubic's smallest positive root lands on y = 1 exactly.
  CMatrix A(1, 1);
  A(0, 0) = 1.0;
  EigenCost cost(A);
  CMatrix Y0(1, 1);
  Y0(0, 0) = 2.0;
  SolverConfig cfg;
  cfg.max_iters = 5;
  cfg.grad_tol = 1e-12;
  auto res = run_bm_cg(cost, Y0, cfg);
  REQUIRE(res.trace.records.size() == 2);
  // Hand computation: grad F(2) = 2(4-1)*2 = 12, eta = -12,
  // minimizing F(2 - 12 t) hits y = 1 at t = 1/12.
  CHECK(res.trace.records[0].step == Catch::Approx(1.0 / 12.0).epsilon(1e-12));
  CHECK(std::abs(res.point(0, 0) - 1.0) <= 1e-10);
  CHECK(res.trace.status == SolveStatus::converged);
}

TEST_CASE("Burer-Monteiro CG equals quotient g1 CG per iterate") {
  auto inst = make_eig_instance(40, 3, 3, 306);
  SolverConfig cfg;
  cfg.max_iters = 50;
  cfg.grad_tol = 0.0;

  std::vector<CMatrix> bm_iterates, q1_iterates;
  run_bm_cg(inst.cost, inst.Y0, cfg,
            [&](int, const CMatrix& X) { bm_iterates.push_back(X); });
  run_rcg(QuotientGeometry(MetricTag::g1), inst.cost, FactorPoint(inst.Y0),
          cfg, [&](int, const CMatrix& X) { q1_iterates.push_back(X); });

  const std::size_t m = std::min(bm_iterates.size(), q1_iterates.size());
  REQUIRE(m >= 50);
  const double scale = inst.Xhat.norm();
  for (std::size_t k = 0; k < m; ++k)
    CHECK((bm_iterates[k] - q1_iterates[k]).norm() <= 1e-10 * scale);
}

TEST_CASE("embedded CG equals quotient g3 CG with embedded moves per iterate") {
  auto inst = make_eig_instance(40, 3, 3, 307);
  SolverConfig cfg;
  cfg.max_iters = 30;
  cfg.grad_tol = 0.0;

  std::vector<CMatrix> emb_iterates, g3_iterates;
  run_rcg(EmbeddedGeometry{}, inst.cost, FactorPoint(inst.Y0).to_eigen_point(),
          cfg, [&](int, const CMatrix& X) { emb_iterates.push_back(X); });
  run_rcg(G3EmbeddedGeometry{}, inst.cost,
          G3EmbeddedGeometry::make_point(FactorPoint(inst.Y0)), cfg,
          [&](int, const CMatrix& X) { g3_iterates.push_back(X); });

  const std::size_t m = std::min(emb_iterates.size(), g3_iterates.size());
  REQUIRE(m >= 30);
  const double scale = inst.Xhat.norm();
  for (std::size_t k = 0; k < m; ++k)
    CHECK((emb_iterates[k] - g3_iterates[k]).norm() <= 1e-10 * scale);
}

TEST_CASE("first BM step is a gradient-descent step") {
  auto inst = make_eig_instance(20, 2, 2, 308);
  SolverConfig cfg;
  cfg.max_iters = 1;
  cfg.grad_tol = 0.0;
  auto res = run_bm_cg(inst.cost, inst.Y0, cfg);
  REQUIRE(res.trace.records.size() == 2);
  const auto& r0 = res.trace.records[0];
  REQUIRE(r0.backtracks == 0);
  GradPair g = inst.cost.grad_times(inst.Y0, inst.Y0);
  const CMatrix expected = inst.Y0 - r0.step * (g.gV + g.gAdjV);
  CHECK((res.point - expected).norm() <= 1e-12 * expected.norm());
}

TEST_CASE("backtracking exhaustion returns a flagged best-so-far") {
  Rng rng(309);
  CMatrix B = rng.cgaussian_matrix(10, 10);
  LyingCost cost(herm(B * B.adjoint()) + CMatrix::Identity(10, 10));
  CMatrix Y0 = rng.cgaussian_matrix(10, 2);
  SolverConfig cfg;
  cfg.max_iters = 10;
  cfg.max_backtracks = 8;
  auto res = run_bm_cg(cost, Y0, cfg);
  CHECK(res.trace.status == SolveStatus::backtrack_exhausted);
  CHECK((res.point - Y0).norm() == 0.0);  // never moved
}

TEST_CASE("boundary errors inside Armijo shrink the step instead of aborting") {
  // Start with a squashed trailing column so early trial steps can collapse
  // the rank; the solver must recover by halving inside the Armijo loop.
  auto inst = make_eig_instance(20, 4, 4, 310);
  CMatrix Y0 = inst.Y0;
  Y0.col(3) *= 1e-3;
  SolverConfig cfg;
  cfg.max_iters = 120;
  cfg.grad_tol = 1e-8;
  auto res = run_rcg(QuotientGeometry(MetricTag::g2), inst.cost,
                     FactorPoint(Y0), cfg);
  CHECK(res.trace.status == SolveStatus::converged);
}

TEST_CASE("trace CSV serialization is deterministic and complete") {
  auto inst = make_eig_instance(20, 2, 2, 312);
  SolverConfig cfg;
  cfg.max_iters = 10;
  cfg.grad_tol = 1e-10;
  auto res = run_rcg(QuotientGeometry(MetricTag::g2), inst.cost,
                     FactorPoint(inst.Y0), cfg);
  std::ostringstream a, b;
  write_trace_csv(a, res.trace);
  write_trace_csv(b, res.trace);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("iter,cost,gradnorm,step,backtracks,seconds,embgradnorm\n",
                      0) == 0);
  // One line per record plus header.
  const std::string s = a.str();
  CHECK(std::count(s.begin(), s.end(), '\n') ==
        static_cast<long>(res.trace.records.size()) + 1);
}

TEST_CASE("embedded gradient norms agree across geometries at the same point") {
  auto inst = make_eig_instance(25, 3, 3, 313);
  FactorPoint Y(inst.Y0);
  EigenPoint X = Y.to_eigen_point();

  EmbeddedGeometry eg;
  EmbeddedTangent exi = riemannian_grad(X, inst.cost);
  const double ref = eg.embedded_gradnorm(inst.cost, X, exi);

  for (MetricTag tag : {MetricTag::g1, MetricTag::g2, MetricTag::g3}) {
    QuotientGeometry qg(tag);
    HorizontalVector xi = grad_F(Y, inst.cost, tag);
    CHECK(qg.embedded_gradnorm(inst.cost, Y, xi) ==
          Catch::Approx(ref).epsilon(1e-9));
  }
  BmGeometry bg;
  GradPair g = inst.cost.grad_times(inst.Y0, inst.Y0);
  CHECK(bg.embedded_gradnorm(inst.cost, inst.Y0, CMatrix(g.gV + g.gAdjV)) ==
        Catch::Approx(ref).epsilon(1e-9));
}
