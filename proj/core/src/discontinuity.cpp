#include "qfigeo/discontinuity.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "qfigeo/extrapolation.hpp"

namespace qfigeo {

namespace {

double matrix_max_abs(const RealMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

void check_direction(const DirectionVector& u, int n) {
  if (u.u.size() != n) {
    throw Error(Errc::dimension_mismatch, "direction length does not match parameter count");
  }
  if (std::abs(u.u.norm() - 1.0) > 1e-12) {
    throw Error(Errc::validation_error, "direction must be a unit vector");
  }
}

}  // namespace

DirectionVector DirectionVector::unit(RealVector v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !v.allFinite()) {
    throw Error(Errc::validation_error, "direction vector must be finite and nonzero");
  }
  return DirectionVector{v / norm};
}

DirectionVector DirectionVector::axis(int n, int l) {
  if (l < 0 || l >= n) throw Error(Errc::validation_error, "axis index out of range");
  RealVector v = RealVector::Zero(n);
  v[l] = 1.0;
  return DirectionVector{std::move(v)};
}

std::vector<BranchHessian> vanishing_branch_hessians(const DerivativeBundle& bundle,
                                                     const std::optional<DirectionVector>& u) {
  if (!bundle.has_second()) {
    throw Error(Errc::missing_second_derivatives, "branch Hessians need second derivatives");
  }
  const auto& spec = bundle.spectrum;
  const int n = bundle.n_params();
  const auto m = static_cast<Eigen::Index>(spec.zero_set.size());
  if (m == 0) return {};

  // Kernel basis columns.
  ComplexMatrix kernel(bundle.dim(), m);
  for (Eigen::Index a = 0; a < m; ++a) kernel.col(a) = spec.eigenvectors.col(spec.zero_set[a]);

  if (m > 1) {
    if (!u) {
      throw Error(Errc::degenerate_kernel_needs_direction,
                  "kernel dimension " + std::to_string(m) + " needs a direction to split branches");
    }
    if (u->u.size() != n) {
      throw Error(Errc::dimension_mismatch, "direction length does not match parameter count");
    }
    // The branch rotation assumes the kernel block of the first derivatives
    // vanishes; boundary points with first-order kernel structure are only
    // supported for one-dimensional kernels.
    for (int i = 0; i < n; ++i) {
      if ((kernel.adjoint() * bundle.d1[i] * kernel).cwiseAbs().maxCoeff() > 1e-6) {
        throw Error(Errc::invariant_violation,
                    "degenerate kernel with first-order structure cannot be split into branches");
      }
    }
    // Direction-contracted second-order form restricted to the kernel:
    // M[a,b] = <a|D2_u|b> - 2 sum_{p_k>0} <a|D1_u|k><k|D1_u|b> / p_k.
    ComplexMatrix d1u = ComplexMatrix::Zero(bundle.dim(), bundle.dim());
    ComplexMatrix d2u = ComplexMatrix::Zero(bundle.dim(), bundle.dim());
    for (int i = 0; i < n; ++i) {
      d1u += u->u[i] * bundle.d1[i];
      for (int j = 0; j < n; ++j) d2u += u->u[i] * u->u[j] * bundle.second(i, j);
    }
    ComplexMatrix form = kernel.adjoint() * d2u * kernel;
    for (Eigen::Index k : spec.positive_set) {
      const ComplexVector coupling = kernel.adjoint() * d1u * spec.eigenvectors.col(k);
      form -= (2.0 / spec.eigenvalues[k]) * (coupling * coupling.adjoint());
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(symmetrized(form));
    kernel = kernel * es.eigenvectors();
  }

  std::vector<BranchHessian> out;
  for (Eigen::Index a = 0; a < m; ++a) {
    const ComplexVector vec = kernel.col(a);
    RealMatrix hess(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        Complex val = (vec.adjoint() * bundle.second(i, j) * vec)(0, 0);
        for (Eigen::Index k : spec.positive_set) {
          const auto kvec = spec.eigenvectors.col(k);
          const Complex left = (vec.adjoint() * bundle.d1[i] * kvec)(0, 0);
          const Complex right = (kvec.adjoint() * bundle.d1[j] * vec)(0, 0);
          val -= 2.0 * left * right / spec.eigenvalues[k];
        }
        hess(i, j) = hess(j, i) = std::real(val);
      }
    }
    Eigen::SelfAdjointEigenSolver<RealMatrix> check(hess);
    if (check.eigenvalues().minCoeff() < -1e-7) {
      std::ostringstream os;
      os << "branch Hessian has eigenvalue " << check.eigenvalues().minCoeff()
         << "; vanishing eigenvalue is not at a local minimum";
      throw Error(Errc::invariant_violation, os.str());
    }
    out.push_back(BranchHessian{static_cast<int>(a), std::move(hess), vec});
  }
  return out;
}

JumpReport jump(const DerivativeBundle& bundle, const DirectionVector& u) {
  const int n = bundle.n_params();
  if (u.u.size() != n) {
    throw Error(Errc::dimension_mismatch, "direction length does not match parameter count");
  }
  const auto branches = vanishing_branch_hessians(bundle, u);

  RealMatrix delta = RealMatrix::Zero(n, n);
  JumpReport report;
  report.point = bundle.point;
  report.direction = u.u;
  for (const auto& branch : branches) {
    const double curvature = u.u.dot(branch.hessian * u.u);
    const double threshold = 1e-10 * branch.hessian.norm();
    if (curvature > threshold) {
      const RealVector hu = branch.hessian * u.u;
      delta += 2.0 * ((hu * hu.transpose()) / curvature - branch.hessian);
      report.contributing.push_back({branch.branch_index, curvature});
    } else {
      report.excluded.push_back({branch.branch_index, curvature});
    }
  }
  // Each contributing term is a projection defect, so the jump can only be
  // negative semi-definite.
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(delta);
  if (es.eigenvalues().maxCoeff() > 1e-7) {
    throw Error(Errc::invariant_violation, "jump matrix is not negative semi-definite");
  }
  report.delta = MetricMatrix::make(std::move(delta), MetricRole::jump, bundle.point);
  return report;
}

std::vector<double> default_limit_schedule() {
  return {1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4};
}

namespace {

void check_schedule(const std::vector<double>& schedule, double floor) {
  if (schedule.size() < 2) {
    throw Error(Errc::validation_error, "schedule needs at least two decreasing steps");
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double s : schedule) {
    if (!(s > 0.0) || s >= prev) {
      throw Error(Errc::validation_error, "schedule must be positive and strictly decreasing");
    }
    prev = s;
  }
  if (schedule.back() < floor) {
    throw Error(Errc::validation_error, "schedule tail below supported floor");
  }
}

}  // namespace

DirectionalLimit directional_limit(const StateFamily& fam, const RealVector& p,
                                   const DirectionVector& u,
                                   const std::vector<double>& schedule,
                                   const FiniteDifferenceConfig& fd, double tol_zero) {
  check_schedule(schedule, 0.0);
  std::vector<RealMatrix> samples;
  for (double h : schedule) {
    const DerivativeBundle b = evaluate_bundle(fam, p + h * u.u, fd, tol_zero);
    samples.push_back(continuous_qfi(b).values);
  }
  // The geometric-schedule tableau needs halved steps; verify.
  for (std::size_t i = 0; i + 1 < schedule.size(); ++i) {
    if (std::abs(schedule[i + 1] - 0.5 * schedule[i]) > 1e-15 * schedule[i]) {
      throw Error(Errc::validation_error, "directional limit schedule must halve each step");
    }
  }
  DirectionalLimit out;
  out.steps = schedule;
  out.limit = richardson_geometric_checked(
      samples, 1, 1, [](const RealMatrix& m) { return matrix_max_abs(m); }, 1e-3,
      "directional limit of the continuous QFI did not converge");

  const DerivativeBundle base = evaluate_bundle(fam, p, fd, tol_zero);
  out.prediction = continuous_qfi(base).values + jump(base, u).delta.values;
  out.residual = matrix_max_abs(out.limit - out.prediction);
  return out;
}

ContinuityVerdict continuity_verdict(const DerivativeBundle& bundle, int axis, double tol) {
  if (!bundle.family_c2_here) {
    throw Error(Errc::refused_pathological_point,
                "family declares a C2 violation at this point; continuity claims need C2");
  }
  const int n = bundle.n_params();
  const JumpReport report = jump(bundle, DirectionVector::axis(n, axis));

  ContinuityVerdict verdict;
  verdict.axis = axis;
  verdict.delta = report.delta.values;
  verdict.element_continuous = verdict.delta.cwiseAbs().array() <= tol;
  verdict.h_gap = 2.0 * kernel_hessian_sum(bundle).values;
  verdict.h_continuous = matrix_max_abs(verdict.h_gap) <= tol;
  return verdict;
}

StateFamily regularize(const StateFamily& fam, const DensityMatrix& rho0, double nu) {
  if (!(nu > 0.0) || !(nu < 1.0)) {
    throw Error(Errc::invalid_nu, "nu must lie strictly between 0 and 1");
  }
  if (rho0.dim() != fam.dim()) {
    throw Error(Errc::dimension_mismatch, "rho0 dimension does not match the family");
  }
  const EigenDecomposition rho0_spec = eigh(rho0.matrix(), kDefaultZeroTol);
  if (!rho0_spec.full_rank()) {
    throw Error(Errc::rho0_not_full_rank, "regularization anchor must be full rank");
  }
  const double scale = 1.0 / static_cast<double>(fam.dim());
  const bool scalar_anchor =
      (rho0.matrix() - scale * ComplexMatrix::Identity(fam.dim(), fam.dim())).cwiseAbs().maxCoeff() <
      1e-14;

  auto inner = std::make_shared<StateFamily>(fam);
  auto anchor = std::make_shared<ComplexMatrix>(rho0.matrix());
  auto eval = [inner, anchor, nu, scalar_anchor](const RealVector& p) {
    const ComplexMatrix rho = inner->evaluate(p).matrix();
    if (!scalar_anchor) {
      const double comm = (rho * *anchor - *anchor * rho).cwiseAbs().maxCoeff();
      if (comm > 1e-8) {
        throw Error(Errc::invariant_violation,
                    "rho0 is not co-diagonal with rho(eps) (commutator " + std::to_string(comm) +
                        ")");
      }
    }
    return ComplexMatrix((1.0 - nu) * rho + nu * *anchor);
  };
  StateFamily::FirstDerivative ev1 = nullptr;
  StateFamily::SecondDerivative ev2 = nullptr;
  if (fam.has_analytic_derivatives()) {
    ev1 = [inner, nu](const RealVector& p, int i) {
      return ComplexMatrix((1.0 - nu) * inner->analytic_d1(p, i));
    };
    ev2 = [inner, nu](const RealVector& p, int i, int j) {
      return ComplexMatrix((1.0 - nu) * inner->analytic_d2(p, i, j));
    };
  }
  return StateFamily(fam.name() + "@regularized", fam.dim(), fam.n_params(), fam.domain(),
                     fam.smoothness(), std::move(eval), std::move(ev1), std::move(ev2));
}

RegularizationTrace regularization_limit(const StateFamily& fam, const RealVector& p,
                                         const DensityMatrix& rho0,
                                         const std::vector<double>& schedule,
                                         const FiniteDifferenceConfig& fd, double tol_zero) {
  check_schedule(schedule, 1e-8);
  const double rho0_min = eigh(rho0.matrix(), 0.0).eigenvalues.minCoeff();

  RegularizationTrace trace;
  trace.nu_schedule = schedule;
  trace.rho0_description =
      (rho0.matrix() -
       ComplexMatrix::Identity(rho0.dim(), rho0.dim()) / static_cast<double>(rho0.dim()))
              .cwiseAbs()
              .maxCoeff() < 1e-14
          ? "maximally mixed (I/dim)"
          : "user-supplied full-rank anchor";

  std::vector<RealMatrix> values;
  for (double nu : schedule) {
    const StateFamily reg = regularize(fam, rho0, nu);
    const DerivativeBundle b = evaluate_bundle(reg, p, fd, tol_zero, /*with_second=*/false);
    const double min_eig = eigh(b.rho.matrix(), 0.0).eigenvalues.minCoeff();
    if (min_eig < nu * rho0_min - 1e-12) {
      throw Error(Errc::invariant_violation, "regularized state lost rank on the schedule");
    }
    trace.min_eigenvalues.push_back(min_eig);
    MetricMatrix h = qfi_spectral(b);
    values.push_back(h.values);
    trace.qfi_values.push_back(std::move(h));
  }
  trace.extrapolated_limit = neville_to_zero_checked(
      schedule, values, [](const RealMatrix& m) { return matrix_max_abs(m); }, 1e-3,
      "regularization limit did not converge");

  const DerivativeBundle base = evaluate_bundle(fam, p, fd, tol_zero);
  trace.hc_prediction = trace.extrapolated_limit + 2.0 * kernel_hessian_sum(base).values;
  return trace;
}

MetricMatrix directional_taylor_zeroth(const DerivativeBundle& bundle_at_base,
                                       const DirectionVector& u_tilde, int n_estimation) {
  const int n = bundle_at_base.n_params();
  if (n_estimation < 0) n_estimation = n - 1;
  if (n_estimation < 1 || n_estimation > n) {
    throw Error(Errc::validation_error, "estimation block must cover 1..n parameters");
  }
  const RealMatrix hc = continuous_qfi(bundle_at_base).values;
  const RealMatrix delta = jump(bundle_at_base, u_tilde).delta.values;
  RealMatrix approx = (hc + delta).topLeftCorner(n_estimation, n_estimation);
  return MetricMatrix::make(std::move(approx), MetricRole::continuous_qfi,
                            bundle_at_base.point);
}

std::vector<double> track_branch_curvatures(const StateFamily& fam, const RealVector& p,
                                            const DirectionVector& u,
                                            const std::vector<double>& schedule,
                                            const FiniteDifferenceConfig& fd, double tol_zero) {
  check_schedule(schedule, 0.0);
  for (std::size_t i = 0; i + 1 < schedule.size(); ++i) {
    if (std::abs(schedule[i + 1] - 0.5 * schedule[i]) > 1e-15 * schedule[i]) {
      throw Error(Errc::validation_error, "tracking schedule must halve each step");
    }
  }
  const DerivativeBundle base = evaluate_bundle(fam, p, fd, tol_zero);
  const auto branches = vanishing_branch_hessians(base, u);
  if (branches.empty()) return {};

  std::vector<std::vector<double>> fitted(branches.size());
  for (double h : schedule) {
    const EigenDecomposition spec = eigh(fam.evaluate(p + h * u.u).matrix(), 0.0);
    std::vector<bool> used(spec.dim(), false);
    for (std::size_t a = 0; a < branches.size(); ++a) {
      // Follow the branch by maximal eigenvector overlap with the kernel
      // vector chosen at the base point.
      Eigen::Index best = -1;
      double best_overlap = -1.0;
      for (Eigen::Index k = 0; k < spec.dim(); ++k) {
        if (used[k]) continue;
        const double overlap =
            std::abs((spec.eigenvectors.col(k).adjoint() * branches[a].kernel_vector)(0, 0));
        if (overlap > best_overlap) {
          best_overlap = overlap;
          best = k;
        }
      }
      used[best] = true;
      fitted[a].push_back(2.0 * spec.eigenvalues[best] / (h * h));
    }
  }

  std::vector<double> curvatures;
  for (auto& samples : fitted) {
    curvatures.push_back(richardson_geometric(samples, 1, 1));
  }
  return curvatures;
}

}  // namespace qfigeo
