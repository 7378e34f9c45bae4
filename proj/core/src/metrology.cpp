#include "qfigeo/metrology.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "qfigeo/extrapolation.hpp"

namespace qfigeo {

namespace {

double max_abs(const RealMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// d_i rho expressed in the eigenbasis of rho.
std::vector<ComplexMatrix> derivatives_in_eigenbasis(const DerivativeBundle& bundle) {
  const auto& v = bundle.spectrum.eigenvectors;
  std::vector<ComplexMatrix> out;
  out.reserve(bundle.d1.size());
  for (const auto& d : bundle.d1) out.push_back(v.adjoint() * d * v);
  return out;
}

bool in_zero_set(const EigenDecomposition& spec, Eigen::Index k) {
  return spec.eigenvalues[k] == 0.0;
}

}  // namespace

const char* metric_role_name(MetricRole role) {
  switch (role) {
    case MetricRole::qfi: return "H";
    case MetricRole::continuous_qfi: return "Hc";
    case MetricRole::truncated: return "truncated";
    case MetricRole::hessian_sum: return "hessian_sum";
    case MetricRole::jump: return "jump";
  }
  return "?";
}

MetricMatrix MetricMatrix::make(RealMatrix values, MetricRole role, RealVector point,
                                double psd_tol) {
  if (values.rows() != values.cols()) {
    throw Error(Errc::dimension_mismatch, "metric matrix must be square");
  }
  const double asym = max_abs(values - values.transpose());
  if (asym > 1e-9) {
    std::ostringstream os;
    os << metric_role_name(role) << " asymmetric by " << asym;
    throw Error(Errc::invariant_violation, os.str());
  }
  values = 0.5 * (values + values.transpose().eval());
  if (role == MetricRole::qfi || role == MetricRole::continuous_qfi) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(values);
    if (es.eigenvalues().minCoeff() < -psd_tol) {
      std::ostringstream os;
      os << metric_role_name(role) << " not PSD, eigenvalue " << es.eigenvalues().minCoeff();
      throw Error(Errc::invariant_violation, os.str());
    }
  }
  return MetricMatrix{std::move(values), role, std::move(point)};
}

SldSet sld(const DerivativeBundle& bundle) {
  const auto& spec = bundle.spectrum;
  const Eigen::Index d = bundle.dim();
  const auto dbasis = derivatives_in_eigenbasis(bundle);

  SldSet out;
  out.bundle_id = bundle.id;
  for (const auto& db : dbasis) {
    ComplexMatrix l = ComplexMatrix::Zero(d, d);
    for (Eigen::Index k = 0; k < d; ++k) {
      for (Eigen::Index m = 0; m < d; ++m) {
        const double denom = spec.eigenvalues[k] + spec.eigenvalues[m];
        if (denom > 0.0) l(k, m) = 2.0 * db(k, m) / denom;
      }
    }
    out.operators.push_back(symmetrized(spec.eigenvectors * l * spec.eigenvectors.adjoint()));
  }
  return out;
}

MetricMatrix qfi_spectral(const DerivativeBundle& bundle) {
  const auto& spec = bundle.spectrum;
  const Eigen::Index d = bundle.dim();
  const int n = bundle.n_params();
  const auto dbasis = derivatives_in_eigenbasis(bundle);

  RealMatrix h = RealMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index m = 0; m < d; ++m) {
      const double denom = spec.eigenvalues[k] + spec.eigenvalues[m];
      if (denom <= 0.0) continue;  // vanishing pair excluded by the rank partition
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          const double term = 2.0 * std::real(dbasis[i](k, m) * dbasis[j](m, k)) / denom;
          h(i, j) += term;
          if (i != j) h(j, i) += term;
        }
      }
    }
  }
  return MetricMatrix::make(std::move(h), MetricRole::qfi, bundle.point);
}

MetricMatrix qfi_from_sld(const DerivativeBundle& bundle, const SldSet& slds) {
  if (slds.bundle_id != bundle.id) {
    throw Error(Errc::basis_mismatch, "SLD set was built from a different bundle");
  }
  const int n = bundle.n_params();
  if (static_cast<int>(slds.operators.size()) != n) {
    throw Error(Errc::dimension_mismatch, "SLD count does not match parameter count");
  }
  const ComplexMatrix& rho = bundle.rho.matrix();
  RealMatrix h(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const Complex tr =
          ((slds.operators[i] * slds.operators[j] + slds.operators[j] * slds.operators[i]) * rho)
              .trace();
      h(i, j) = h(j, i) = 0.5 * std::real(tr);
    }
  }
  return MetricMatrix::make(std::move(h), MetricRole::qfi, bundle.point);
}

double uhlmann_fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) {
    throw Error(Errc::dimension_mismatch, "fidelity needs equal dimensions");
  }
  const ComplexMatrix sa = psd_sqrt(a.matrix());
  const ComplexMatrix sb = psd_sqrt(b.matrix());
  // tr sqrt(sqrt(a) b sqrt(a)) equals the nuclear norm of sqrt(a) sqrt(b).
  Eigen::JacobiSVD<ComplexMatrix> svd(sa * sb);
  const double root = svd.singularValues().sum();
  return std::clamp(root * root, 0.0, 1.0);
}

double uhlmann_fidelity_direct(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) {
    throw Error(Errc::dimension_mismatch, "fidelity needs equal dimensions");
  }
  const ComplexMatrix sa = psd_sqrt(a.matrix());
  const EigenDecomposition spec = eigh(symmetrized(sa * b.matrix() * sa), 0.0);
  if (spec.eigenvalues.minCoeff() < -1e-12) {
    throw Error(Errc::not_psd, "triple product eigenvalue below -1e-12");
  }
  const double root = spec.eigenvalues.cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(root * root, 0.0, 1.0);
}

double bures_distance_sq(const DensityMatrix& a, const DensityMatrix& b) {
  return 2.0 * (1.0 - std::sqrt(uhlmann_fidelity(a, b)));
}

MetricMatrix continuous_qfi(const DerivativeBundle& bundle) {
  if (!bundle.has_second()) {
    throw Error(Errc::missing_second_derivatives, "continuous QFI needs second derivatives");
  }
  const auto& spec = bundle.spectrum;
  const Eigen::Index d = bundle.dim();
  const int n = bundle.n_params();
  const auto dbasis = derivatives_in_eigenbasis(bundle);
  const ComplexMatrix p0 = kernel_projector(spec);

  RealMatrix h = RealMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < d; ++k) {
    if (in_zero_set(spec, k)) continue;
    for (Eigen::Index m = 0; m < d; ++m) {
      if (in_zero_set(spec, m)) continue;
      const double denom = spec.eigenvalues[k] + spec.eigenvalues[m];
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          const double term = 2.0 * std::real(dbasis[i](k, m) * dbasis[j](m, k)) / denom;
          h(i, j) += term;
          if (i != j) h(j, i) += term;
        }
      }
    }
  }
  if (!spec.zero_set.empty()) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const double kernel_term = 2.0 * std::real((p0 * bundle.second(i, j)).trace());
        h(i, j) += kernel_term;
        if (i != j) h(j, i) += kernel_term;
      }
    }
  }
  return MetricMatrix::make(std::move(h), MetricRole::continuous_qfi, bundle.point);
}

MetricMatrix kernel_hessian_sum(const DerivativeBundle& bundle) {
  const RealMatrix hc = continuous_qfi(bundle).values;
  const RealMatrix h = qfi_spectral(bundle).values;
  return MetricMatrix::make(0.5 * (hc - h), MetricRole::hessian_sum, bundle.point);
}

RealMatrix kernel_hessian_sum_via_projector(const DerivativeBundle& bundle) {
  if (!bundle.has_second()) {
    throw Error(Errc::missing_second_derivatives, "kernel Hessian sum needs second derivatives");
  }
  const auto& spec = bundle.spectrum;
  const Eigen::Index d = bundle.dim();
  const int n = bundle.n_params();
  const auto dbasis = derivatives_in_eigenbasis(bundle);
  const ComplexMatrix p0 = kernel_projector(spec);

  RealMatrix out = RealMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double val = std::real((p0 * bundle.second(i, j)).trace());
      for (Eigen::Index k = 0; k < d; ++k) {
        if (in_zero_set(spec, k)) continue;
        for (Eigen::Index m = 0; m < d; ++m) {
          if (!in_zero_set(spec, m)) continue;
          val -= 2.0 * std::real(dbasis[i](k, m) * dbasis[j](m, k)) / spec.eigenvalues[k];
        }
      }
      out(i, j) = out(j, i) = val;
    }
  }
  return out;
}

MetricMatrix truncated_metric(const DerivativeBundle& bundle) {
  const auto& spec = bundle.spectrum;
  const Eigen::Index d = bundle.dim();
  const int n = bundle.n_params();
  const auto dbasis = derivatives_in_eigenbasis(bundle);

  RealMatrix h = RealMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < d; ++k) {
    if (in_zero_set(spec, k)) continue;
    for (Eigen::Index m = 0; m < d; ++m) {
      if (in_zero_set(spec, m)) continue;
      const double denom = spec.eigenvalues[k] + spec.eigenvalues[m];
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          const double term = 2.0 * std::real(dbasis[i](k, m) * dbasis[j](m, k)) / denom;
          h(i, j) += term;
          if (i != j) h(j, i) += term;
        }
      }
    }
  }
  return MetricMatrix::make(std::move(h), MetricRole::truncated, bundle.point);
}

namespace {

// Directional metric d_B^2(rho(p), rho(p + h u))/h^2 extrapolated to h -> 0.
// The series may carry odd powers near rank changes, so the tableau
// eliminates h and h^2 in turn.
double directional_metric(const StateFamily& fam, const RealVector& p, const RealVector& u,
                          const DensityMatrix& at_p, const FiniteDifferenceConfig& fd) {
  std::vector<double> samples;
  for (int m = 0; m <= fd.richardson_levels; ++m) {
    const double h = fd.h / std::pow(2.0, m);
    const DensityMatrix shifted = fam.evaluate(p + h * u);
    samples.push_back(bures_distance_sq(at_p, shifted) / (h * h));
  }
  return richardson_geometric_checked(
      samples, 1, 1, [](double x) { return std::abs(x); }, 1e-3,
      "directional Bures metric did not converge");
}

}  // namespace

MetricMatrix numeric_bures_metric(const StateFamily& fam, const RealVector& p,
                                  const FiniteDifferenceConfig& fd) {
  fd.validate();
  fam.check_point(p);
  const int n = fam.n_params();
  const DensityMatrix at_p = fam.evaluate(p);

  RealVector diag(n);
  RealMatrix g = RealMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    RealVector u = RealVector::Zero(n);
    u[i] = 1.0;
    diag[i] = directional_metric(fam, p, u, at_p, fd);
    g(i, i) = diag[i];
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      RealVector u = RealVector::Zero(n);
      u[i] = 1.0;
      u[j] = 1.0;  // unnormalized e_i + e_j; bilinearity gives the cross term
      const double mixed = directional_metric(fam, p, u, at_p, fd);
      g(i, j) = g(j, i) = 0.5 * (mixed - diag[i] - diag[j]);
    }
  }
  return MetricMatrix::make(4.0 * g, MetricRole::continuous_qfi, p, 1e-4);
}

CramerRaoBound cramer_rao_lower_bound(const MetricMatrix& H, double tol) {
  if (H.role != MetricRole::qfi && H.role != MetricRole::continuous_qfi) {
    throw Error(Errc::validation_error, "Cramer-Rao bound expects an information matrix");
  }
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(H.values);
  const RealVector& vals = es.eigenvalues();
  const RealMatrix& vecs = es.eigenvectors();

  CramerRaoBound out;
  out.covariance_bound = RealMatrix::Zero(H.order(), H.order());
  std::vector<Eigen::Index> null_idx;
  for (Eigen::Index k = 0; k < vals.size(); ++k) {
    if (vals[k] > tol) {
      out.covariance_bound += (1.0 / vals[k]) * (vecs.col(k) * vecs.col(k).transpose());
    } else {
      null_idx.push_back(k);
    }
  }
  out.singular = !null_idx.empty();
  out.null_directions.resize(H.order(), static_cast<Eigen::Index>(null_idx.size()));
  for (std::size_t c = 0; c < null_idx.size(); ++c) {
    out.null_directions.col(static_cast<Eigen::Index>(c)) = vecs.col(null_idx[c]);
  }
  return out;
}

}  // namespace qfigeo
