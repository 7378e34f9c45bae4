#include "qfigeo/hermitian.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace qfigeo {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::not_hermitian: return "NotHermitian";
    case Errc::convergence_failure: return "ConvergenceFailure";
    case Errc::not_psd: return "NotPSD";
    case Errc::unknown_family: return "UnknownFamily";
    case Errc::domain_error: return "DomainError";
    case Errc::invariant_violation: return "InvariantViolation";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::missing_second_derivatives: return "MissingSecondDerivatives";
    case Errc::basis_mismatch: return "BasisMismatch";
    case Errc::degenerate_kernel_needs_direction: return "DegenerateKernelNeedsDirection";
    case Errc::extrapolation_diverged: return "ExtrapolationDiverged";
    case Errc::invalid_nu: return "InvalidNu";
    case Errc::rho0_not_full_rank: return "Rho0NotFullRank";
    case Errc::refused_pathological_point: return "RefusedPathologicalPoint";
    case Errc::parse_error: return "ParseError";
    case Errc::validation_error: return "ValidationError";
    case Errc::numerical_error: return "NumericalError";
  }
  return "UnknownError";
}

double hermiticity_residual(const ComplexMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

ComplexMatrix symmetrized(const ComplexMatrix& m) {
  return 0.5 * (m + m.adjoint().eval());
}

ComplexMatrix EigenDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.adjoint();
}

EigenDecomposition eigh(const ComplexMatrix& m, double tol_zero) {
  if (m.rows() != m.cols()) {
    throw Error(Errc::dimension_mismatch, "eigh expects a square matrix");
  }
  if (!m.allFinite()) {
    throw Error(Errc::invariant_violation, "eigh input has NaN/Inf entries");
  }
  const double herm = hermiticity_residual(m);
  if (herm > 1e-8) {
    std::ostringstream os;
    os << "symmetrization residual " << herm << " exceeds 1e-8";
    throw Error(Errc::not_hermitian, os.str());
  }

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(symmetrized(m));
  if (solver.info() != Eigen::Success) {
    throw Error(Errc::convergence_failure, "self-adjoint eigensolver did not converge");
  }

  EigenDecomposition spec;
  spec.eigenvalues = solver.eigenvalues();
  spec.eigenvectors = solver.eigenvectors();
  spec.tol_zero = tol_zero;
  for (Eigen::Index k = 0; k < spec.eigenvalues.size(); ++k) {
    if (std::abs(spec.eigenvalues[k]) <= tol_zero) {
      spec.eigenvalues[k] = 0.0;
      spec.zero_set.push_back(k);
    } else {
      spec.positive_set.push_back(k);
    }
  }
  return spec;
}

ComplexMatrix psd_sqrt(const ComplexMatrix& m, double tol_zero) {
  EigenDecomposition spec = eigh(m, tol_zero);
  const double min_eig = spec.eigenvalues.size() ? spec.eigenvalues.minCoeff() : 0.0;
  if (min_eig < -tol_zero) {
    std::ostringstream os;
    os << "minimum eigenvalue " << min_eig << " below -" << tol_zero;
    throw Error(Errc::not_psd, os.str());
  }
  RealVector roots = spec.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  return spec.eigenvectors * roots.asDiagonal() * spec.eigenvectors.adjoint();
}

ComplexMatrix kernel_projector(const EigenDecomposition& spec) {
  ComplexMatrix proj = ComplexMatrix::Zero(spec.dim(), spec.dim());
  for (Eigen::Index k : spec.zero_set) {
    proj.noalias() += spec.eigenvectors.col(k) * spec.eigenvectors.col(k).adjoint();
  }
  return proj;
}

bool is_psd(const ComplexMatrix& m, double tol) {
  EigenDecomposition spec = eigh(m, 0.0);
  if (spec.dim() == 0) return true;
  return spec.eigenvalues.minCoeff() >= -tol;
}

DensityMatrix DensityMatrix::from_matrix(const ComplexMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(Errc::dimension_mismatch, "density matrix must be square and non-empty");
  }
  if (!m.allFinite()) {
    throw Error(Errc::invariant_violation, "density matrix has NaN/Inf entries");
  }
  const double herm = hermiticity_residual(m);
  if (herm > 1e-12) {
    std::ostringstream os;
    os << "density matrix not Hermitian, residual " << herm;
    throw Error(Errc::not_hermitian, os.str());
  }
  const double trace_err = std::abs(m.trace() - Complex(1.0, 0.0));
  if (trace_err > 1e-10) {
    std::ostringstream os;
    os << "density matrix trace deviates from 1 by " << trace_err;
    throw Error(Errc::invariant_violation, os.str());
  }
  ComplexMatrix sym = symmetrized(m);
  EigenDecomposition spec = eigh(sym, 0.0);
  if (spec.eigenvalues.minCoeff() < -1e-10) {
    std::ostringstream os;
    os << "density matrix has eigenvalue " << spec.eigenvalues.minCoeff();
    throw Error(Errc::not_psd, os.str());
  }
  return DensityMatrix(std::move(sym));
}

}  // namespace qfigeo
