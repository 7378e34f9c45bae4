#pragma once

#include <functional>
#include <optional>
#include <random>

#include "qfigeo/hermitian.hpp"

namespace qfigeo::test {

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
}

inline ComplexMatrix random_complex(std::mt19937_64& gen, Eigen::Index dim) {
  auto u = [&gen]() { return static_cast<double>(gen() >> 11) * 0x1.0p-53 - 0.5; };
  ComplexMatrix m(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = Complex(u(), u());
  return m;
}

inline ComplexMatrix random_unitary(std::mt19937_64& gen, Eigen::Index dim) {
  Eigen::HouseholderQR<ComplexMatrix> qr(random_complex(gen, dim));
  return qr.householderQ() * ComplexMatrix::Identity(dim, dim);
}

// Seeded density matrix with the given eigenvalues (need not be sorted).
inline ComplexMatrix rotated_state(std::mt19937_64& gen, const RealVector& populations) {
  const ComplexMatrix u = random_unitary(gen, populations.size());
  return u * populations.cast<Complex>().asDiagonal() * u.adjoint();
}

// Runs f and reports which error code it threw, if any.
inline std::optional<Errc> thrown_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace qfigeo::test
