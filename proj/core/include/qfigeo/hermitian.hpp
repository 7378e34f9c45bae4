#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "qfigeo/errors.hpp"

namespace qfigeo {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Eigenvalues with magnitude at most this are treated as exact zeros when
// partitioning a spectrum into kernel and support. The default is chosen for
// unit-trace matrices of dimension <= 64, well above eigensolver backward
// error and well below any physically meaningful population.
inline constexpr double kDefaultZeroTol = 1e-10;

// max_ij |m - m^dagger|
double hermiticity_residual(const ComplexMatrix& m);

// (m + m^dagger) / 2
ComplexMatrix symmetrized(const ComplexMatrix& m);

// Spectral decomposition of a Hermitian matrix with the rank partition
// attached. Eigenvalues are ascending; values in [-tol_zero, tol_zero] are
// clamped to exactly 0 and listed in zero_set.
struct EigenDecomposition {
  RealVector eigenvalues;
  ComplexMatrix eigenvectors;  // column k pairs with eigenvalues[k]
  std::vector<Eigen::Index> zero_set;
  std::vector<Eigen::Index> positive_set;
  double tol_zero = kDefaultZeroTol;

  Eigen::Index dim() const { return eigenvalues.size(); }
  Eigen::Index rank() const { return static_cast<Eigen::Index>(positive_set.size()); }
  bool full_rank() const { return zero_set.empty(); }
  ComplexMatrix reconstruct() const;
};

// Hermitian eigendecomposition. Symmetrizes the input first; rejects it as
// NotHermitian when the symmetrization residual exceeds 1e-8.
EigenDecomposition eigh(const ComplexMatrix& m, double tol_zero = kDefaultZeroTol);

// Principal square root of a Hermitian PSD matrix. Eigenvalues in
// [-tol_zero, 0) are clamped to 0; anything more negative raises NotPSD.
ComplexMatrix psd_sqrt(const ComplexMatrix& m, double tol_zero = kDefaultZeroTol);

// Projector onto the zero-eigenvalue subspace: sum of |k><k| over zero_set.
ComplexMatrix kernel_projector(const EigenDecomposition& spec);

// True iff the minimum eigenvalue of the (Hermitian) input is >= -tol.
bool is_psd(const ComplexMatrix& m, double tol);

// Unit-trace Hermitian PSD matrix. Construction validates Hermiticity
// (1e-12 entrywise), trace (1e-10) and the eigenvalue floor (-1e-10).
class DensityMatrix {
 public:
  static DensityMatrix from_matrix(const ComplexMatrix& m);

  const ComplexMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  explicit DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {}
  ComplexMatrix m_;
};

}  // namespace qfigeo
