#include <catch2/catch_amalgamated.hpp>

#include "psdmanopt/matrix_kernel.hpp"
#include "psdmanopt/rng.hpp"

#include "oracles.hpp"

using namespace psdmanopt;

TEST_CASE("real_inner matches trace definition on fixed inputs") {
  CMatrix I2 = CMatrix::Identity(2, 2);
  CHECK(real_inner(I2, I2) == Catch::Approx(2.0));
  CMatrix iI2 = std::complex<double>(0, 1) * I2;
  CHECK(real_inner(iI2, I2) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("real_inner equals elementwise brute-force sum") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    CMatrix A = rng.cgaussian_matrix(3, 2);
    CMatrix B = rng.cgaussian_matrix(3, 2);
    CHECK(real_inner(A, B) ==
          Catch::Approx(oracle::real_inner_bruteforce(A, B)).epsilon(1e-13));
  }
}

TEST_CASE("real_inner rejects mismatched dimensions") {
  CMatrix A = CMatrix::Zero(2, 3), B = CMatrix::Zero(3, 2);
  CHECK_THROWS_AS(real_inner(A, B), std::invalid_argument);
}

TEST_CASE("real_inner is a genuine real inner product") {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    CMatrix A = rng.cgaussian_matrix(1 + rng.index(5), 1 + rng.index(5));
    const double q = real_inner(A, A);
    CHECK(q >= 0);
    if (A.norm() > 0) CHECK(q > 0);
  }
  CMatrix Z = CMatrix::Zero(4, 4);
  CHECK(real_inner(Z, Z) == 0.0);
}

TEST_CASE("real_inner splits into real and imaginary parts") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    CMatrix A = rng.cgaussian_matrix(4, 3);
    CMatrix B = rng.cgaussian_matrix(4, 3);
    const double split = (A.real().array() * B.real().array()).sum() +
                         (A.imag().array() * B.imag().array()).sum();
    CHECK(real_inner(A, B) == Catch::Approx(split).epsilon(1e-13));
  }
}

TEST_CASE("herm and skew decompose and reconstruct") {
  Rng rng(3);
  SECTION("Hermitian input maps to (X, 0)") {
    CMatrix H = herm(rng.cgaussian_matrix(4, 4));
    CHECK((herm(H) - H).norm() <= 1e-14 * H.norm());
    CHECK(skew(H).norm() <= 1e-14 * H.norm());
  }
  SECTION("skew-Hermitian input maps to (0, X)") {
    CMatrix S = skew(rng.cgaussian_matrix(4, 4));
    CHECK(herm(S).norm() <= 1e-14 * S.norm());
    CHECK((skew(S) - S).norm() <= 1e-14 * S.norm());
  }
  SECTION("reconstruction identity on random input") {
    for (int trial = 0; trial < 20; ++trial) {
      CMatrix X = rng.cgaussian_matrix(4, 4);
      CHECK((herm(X) + skew(X) - X).norm() <= 1e-15 * X.norm());
      CHECK((herm(X) - herm(X).adjoint()).norm() <= 1e-15 * X.norm());
      CHECK((skew(X) + skew(X).adjoint()).norm() <= 1e-15 * X.norm());
    }
  }
  SECTION("non-square input is rejected") {
    CHECK_THROWS_AS(herm(CMatrix::Zero(2, 3)), std::invalid_argument);
    CHECK_THROWS_AS(skew(CMatrix::Zero(2, 3)), std::invalid_argument);
  }
}

TEST_CASE("HermitianSmall re-symmetrizes and counts drift") {
  Rng rng(4);
  const auto before = hermitian_drift_warnings();
  CMatrix H = herm(rng.cgaussian_matrix(3, 3));
  HermitianSmall ok(H);
  CHECK(hermitian_drift_warnings() == before);

  CMatrix drifted = H;
  drifted(0, 1) += std::complex<double>(0.1, 0.2);
  HermitianSmall fixed(drifted);
  CHECK(hermitian_drift_warnings() == before + 1);
  CHECK((fixed.matrix() - fixed.matrix().adjoint()).norm() <= 1e-14);
}

TEST_CASE("solve_lyapunov closed forms") {
  SECTION("E = I gives X = Z/2") {
    Rng rng(5);
    CMatrix Z = skew(rng.cgaussian_matrix(4, 4));
    CMatrix X = solve_lyapunov(HermitianSmall(CMatrix::Identity(4, 4)), Z);
    CHECK((X - 0.5 * Z).norm() <= 1e-13 * Z.norm());
  }
  SECTION("1x1 case: E=[2], Z=[4i] gives X=[i]") {
    CMatrix E(1, 1), Z(1, 1);
    E(0, 0) = 2.0;
    Z(0, 0) = std::complex<double>(0, 4);
    CMatrix X = solve_lyapunov(HermitianSmall(E), Z);
    CHECK(std::abs(X(0, 0) - std::complex<double>(0, 1)) <= 1e-14);
  }
}

TEST_CASE("solve_lyapunov residual and skew preservation on random PD systems") {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    CMatrix B = rng.cgaussian_matrix(5, 5);
    CMatrix E = herm(B * B.adjoint()) + CMatrix::Identity(5, 5);
    CMatrix Z = skew(rng.cgaussian_matrix(5, 5));
    CMatrix X = solve_lyapunov(HermitianSmall(E), Z);
    CHECK((X * E + E * X - Z).norm() <= 1e-12 * Z.norm());
    CHECK((X + X.adjoint()).norm() <= 1e-12 * X.norm());
  }
}

TEST_CASE("solve_lyapunov rejects singular E") {
  CMatrix E = CMatrix::Zero(3, 3);
  E(0, 0) = 1.0;
  E(1, 1) = 1.0;  // rank 2
  CMatrix Z = CMatrix::Zero(3, 3);
  CHECK_THROWS_AS(solve_lyapunov(HermitianSmall(E), Z), SingularEquationError);
}

TEST_CASE("compact_eig_psd on a diagonal matrix") {
  CMatrix X = CMatrix::Zero(3, 3);
  X(0, 0) = 3.0;
  X(1, 1) = 1.0;
  EigResult e = compact_eig_psd(X, 2);
  CHECK(e.sigma(0) == Catch::Approx(3.0));
  CHECK(e.sigma(1) == Catch::Approx(1.0));
  // Eigenvectors are coordinate vectors up to phase; phase fixing makes them
  // exactly real-positive here.
  CHECK(std::abs(e.U(0, 0) - 1.0) <= 1e-12);
  CHECK(std::abs(e.U(1, 1) - 1.0) <= 1e-12);
}

TEST_CASE("compact_eig_psd reconstructs a rank-p product") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 12, p = 3;
    CMatrix Y = rng.cgaussian_matrix(n, p);
    CMatrix X = Y * Y.adjoint();
    EigResult e = compact_eig_psd(X, p);
    CHECK((e.U.adjoint() * e.U - CMatrix::Identity(p, p)).norm() <= 1e-10);
    CHECK((X - e.U * e.sigma.asDiagonal() * e.U.adjoint()).norm() <=
          1e-10 * X.norm());
    for (Index i = 1; i < p; ++i) CHECK(e.sigma(i) <= e.sigma(i - 1));
  }
}

TEST_CASE("compact_eig_psd matches the full dense eigensolver oracle") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 20 + Index(rng.index(31)), p = 4;
    CMatrix B = rng.cgaussian_matrix(n, n);
    CMatrix X = herm(B * B.adjoint());
    EigResult e = compact_eig_psd(X, p);
    auto [U, s] = oracle::top_eigenpairs(X, p);
    CHECK((e.sigma - s).cwiseAbs().maxCoeff() <= 1e-10 * s(0));
  }
}

TEST_CASE("compact_eig_psd handles the zero matrix per the rank policy") {
  EigResult e = compact_eig_psd(CMatrix::Zero(4, 4), 2);
  CHECK(e.sigma.isZero(0));
  CHECK((e.U.adjoint() * e.U - CMatrix::Identity(2, 2)).norm() <= 1e-12);
}

TEST_CASE("compact_eig_psd rejects non-Hermitian input") {
  Rng rng(9);
  CMatrix X = rng.cgaussian_matrix(4, 4);
  X(0, 1) += 10.0;  // ensure visible asymmetry
  CHECK_THROWS_AS(compact_eig_psd(X, 2), std::invalid_argument);
}

TEST_CASE("qr_compact reconstructs and orthonormalizes") {
  Rng rng(10);
  SECTION("random 6x3") {
    for (int trial = 0; trial < 20; ++trial) {
      CMatrix A = rng.cgaussian_matrix(6, 3);
      auto [Q, R] = qr_compact(A);
      CHECK((Q.adjoint() * Q - CMatrix::Identity(3, 3)).norm() <= 1e-10);
      CHECK((A - Q * R).norm() <= 1e-12 * A.norm());
      // R upper triangular
      CHECK(std::abs(R(1, 0)) + std::abs(R(2, 0)) + std::abs(R(2, 1)) <=
            1e-14 * (1.0 + R.norm()));
    }
  }
  SECTION("orthonormal input: R is diagonal with unit-modulus entries") {
    CMatrix A = rng.cgaussian_matrix(8, 3);
    auto [Q0, R0] = qr_compact(A);
    auto [Q, R] = qr_compact(Q0);
    CHECK((Q.adjoint() * Q - CMatrix::Identity(3, 3)).norm() <= 1e-10);
    for (Index i = 0; i < 3; ++i) {
      CHECK(std::abs(std::abs(R(i, i)) - 1.0) <= 1e-12);
      for (Index j = 0; j < i; ++j) CHECK(std::abs(R(i, j)) <= 1e-12);
    }
  }
  SECTION("zero input: identity-column Q, zero R") {
    auto [Q, R] = qr_compact(CMatrix::Zero(5, 2));
    CHECK((Q.adjoint() * Q - CMatrix::Identity(2, 2)).norm() <= 1e-12);
    CHECK(R.norm() == 0.0);
  }
}
