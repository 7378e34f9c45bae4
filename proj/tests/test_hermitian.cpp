#include <doctest.h>

#include <cstring>
#include <random>

#include "qfigeo/hermitian.hpp"
#include "support.hpp"

using namespace qfigeo;
using test::max_abs;
using test::thrown_code;

TEST_CASE("eigh on scalar matrix") {
  const ComplexMatrix m = 0.5 * ComplexMatrix::Identity(2, 2);
  const EigenDecomposition spec = eigh(m);
  CHECK(spec.eigenvalues[0] == doctest::Approx(0.5));
  CHECK(spec.eigenvalues[1] == doctest::Approx(0.5));
  CHECK(spec.zero_set.empty());
  CHECK(spec.positive_set.size() == 2);
}

TEST_CASE("eigh partitions diag(0,1)") {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(1, 1) = 1.0;
  const EigenDecomposition spec = eigh(m, 1e-12);
  REQUIRE(spec.zero_set.size() == 1);
  CHECK(spec.zero_set[0] == 0);
  CHECK(spec.positive_set == std::vector<Eigen::Index>{1});
  CHECK(spec.eigenvalues[0] == 0.0);  // clamped exactly
}

TEST_CASE("eigh recovers a known spectrum") {
  std::mt19937_64 gen(7);
  const RealVector d = (RealVector(4) << 0.05, 0.15, 0.3, 0.5).finished();
  const ComplexMatrix u = test::random_unitary(gen, 4);
  const ComplexMatrix m = u * d.cast<Complex>().asDiagonal() * u.adjoint();
  const EigenDecomposition spec = eigh(m);
  for (int k = 0; k < 4; ++k) CHECK(std::abs(spec.eigenvalues[k] - d[k]) < 1e-10);
  CHECK(max_abs(ComplexMatrix(spec.reconstruct() - m)) / 4.0 < 1e-10);
  CHECK(max_abs(ComplexMatrix(spec.eigenvectors.adjoint() * spec.eigenvectors -
                              ComplexMatrix::Identity(4, 4))) < 1e-10);
}

TEST_CASE("eigh clamps the zero band and is deterministic") {
  std::mt19937_64 gen(11);
  const RealVector d = (RealVector(3) << 5e-11, 0.4, 0.6).finished();
  const ComplexMatrix m = test::rotated_state(gen, d);
  const EigenDecomposition a = eigh(m, 1e-10);
  REQUIRE(a.zero_set.size() == 1);
  CHECK(a.eigenvalues[0] == 0.0);

  const EigenDecomposition b = eigh(m, 1e-10);
  CHECK(std::memcmp(a.eigenvalues.data(), b.eigenvalues.data(), sizeof(double) * 3) == 0);
  CHECK(std::memcmp(a.eigenvectors.data(), b.eigenvectors.data(), sizeof(Complex) * 9) == 0);
  for (int k = 0; k + 1 < 3; ++k) CHECK(a.eigenvalues[k] <= a.eigenvalues[k + 1]);
}

TEST_CASE("eigh rejects non-Hermitian input") {
  ComplexMatrix m(2, 2);
  m << 1.0, 2.0, 0.0, 1.0;
  CHECK(thrown_code([&] { eigh(m); }) == Errc::not_hermitian);
}

TEST_CASE("psd_sqrt basics") {
  CHECK(max_abs(ComplexMatrix(psd_sqrt(ComplexMatrix::Identity(3, 3)) -
                              ComplexMatrix::Identity(3, 3))) < 1e-12);

  ComplexMatrix d = ComplexMatrix::Zero(2, 2);
  d(0, 0) = 4.0;
  d(1, 1) = 9.0;
  const ComplexMatrix r = psd_sqrt(d);
  CHECK(std::abs(r(0, 0) - Complex(2.0)) < 1e-12);
  CHECK(std::abs(r(1, 1) - Complex(3.0)) < 1e-12);
}

TEST_CASE("psd_sqrt squares back to the input") {
  std::mt19937_64 gen(3);
  const ComplexMatrix b = test::random_complex(gen, 3);
  const ComplexMatrix a = b.adjoint() * b;
  const ComplexMatrix r = psd_sqrt(a);
  CHECK((r * r - a).norm() < 1e-9);
  CHECK(hermiticity_residual(r) < 1e-12);
}

TEST_CASE("psd_sqrt rejects indefinite input") {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  CHECK(thrown_code([&] { psd_sqrt(m); }) == Errc::not_psd);
}

TEST_CASE("kernel projector") {
  SUBCASE("full rank gives zero") {
    const EigenDecomposition spec = eigh(0.5 * ComplexMatrix::Identity(2, 2));
    CHECK(max_abs(kernel_projector(spec)) == 0.0);
  }
  SUBCASE("diag(0,1) projects onto the first axis") {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(1, 1) = 1.0;
    const ComplexMatrix p = kernel_projector(eigh(m, 1e-12));
    CHECK(std::abs(p(0, 0) - Complex(1.0)) < 1e-12);
    CHECK(std::abs(p(1, 1)) < 1e-12);
  }
  SUBCASE("idempotent with trace equal to kernel dimension") {
    std::mt19937_64 gen(23);
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::Index dim = 3 + static_cast<Eigen::Index>(gen() % 3);
      RealVector pops = RealVector::Zero(dim);
      const int zeros = 1 + static_cast<int>(gen() % 2);
      double total = 0.0;
      for (Eigen::Index k = zeros; k < dim; ++k) {
        pops[k] = 0.1 + static_cast<double>(gen() % 100) / 100.0;
        total += pops[k];
      }
      pops /= total;
      const EigenDecomposition spec = eigh(test::rotated_state(gen, pops));
      const ComplexMatrix p = kernel_projector(spec);
      CHECK(max_abs(ComplexMatrix(p * p - p)) < 1e-10);
      CHECK(std::abs(p.trace() - Complex(static_cast<double>(zeros))) < 1e-9);
      CHECK(hermiticity_residual(p) < 1e-12);
    }
  }
}

TEST_CASE("is_psd") {
  ComplexMatrix good = ComplexMatrix::Zero(2, 2);
  good(0, 0) = 1.0;
  good(1, 1) = 2.0;
  CHECK(is_psd(good, 1e-10));

  ComplexMatrix bad = good;
  bad(1, 1) = -1.0;
  CHECK_FALSE(is_psd(bad, 1e-10));

  ComplexMatrix skew(2, 2);
  skew << 0.0, 1.0, -1.0, 0.0;
  CHECK(thrown_code([&] { is_psd(skew, 1e-10); }) == Errc::not_hermitian);
}

TEST_CASE("density matrix validation") {
  CHECK_NOTHROW(DensityMatrix::from_matrix(0.5 * ComplexMatrix::Identity(2, 2)));

  SUBCASE("trace must be one") {
    CHECK(thrown_code([] { DensityMatrix::from_matrix(0.45 * ComplexMatrix::Identity(2, 2)); }) ==
          Errc::invariant_violation);
  }
  SUBCASE("must be Hermitian") {
    ComplexMatrix m(2, 2);
    m << 0.5, 0.1, 0.0, 0.5;
    CHECK(thrown_code([&] { DensityMatrix::from_matrix(m); }) == Errc::not_hermitian);
  }
  SUBCASE("must be positive semi-definite") {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 0) = 1.2;
    m(1, 1) = -0.2;
    CHECK(thrown_code([&] { DensityMatrix::from_matrix(m); }) == Errc::not_psd);
  }
}
