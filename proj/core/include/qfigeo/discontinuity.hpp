#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qfigeo/family.hpp"
#include "qfigeo/metrology.hpp"

namespace qfigeo {

// Unit direction in parameter space (estimation coordinates, possibly
// extended by a mixedness-like coordinate).
struct DirectionVector {
  RealVector u;
  static DirectionVector unit(RealVector v);
  static DirectionVector axis(int n, int l);
};

// Hessian of one vanishing eigenvalue branch, with the kernel vector it
// belongs to. PSD because the eigenvalue sits at a local minimum.
struct BranchHessian {
  int branch_index = 0;
  RealMatrix hessian;
  ComplexVector kernel_vector;
};

// One Hessian per vanishing eigenvalue. A kernel of dimension > 1 has no
// preferred branch basis; the direction u is then required and the kernel is
// rotated to diagonalize the direction-contracted second-order form first.
std::vector<BranchHessian> vanishing_branch_hessians(
    const DerivativeBundle& bundle, const std::optional<DirectionVector>& u = std::nullopt);

struct JumpContribution {
  int branch_index = 0;
  double curvature = 0.0;  // u^T H_k u
};

struct JumpReport {
  RealVector point;
  RealVector direction;
  MetricMatrix delta;
  std::vector<JumpContribution> contributing;
  std::vector<JumpContribution> excluded;
  std::optional<double> numeric_confirmation_residual;
};

// Directional discontinuity of H_c at the bundle's point:
// Delta_u = 2 sum_k [ (H_k u)(H_k u)^T / (u^T H_k u) - H_k ]
// over vanishing branches with u^T H_k u above threshold; the rest are
// reported as excluded, never silently dropped.
JumpReport jump(const DerivativeBundle& bundle, const DirectionVector& u);

std::vector<double> default_limit_schedule();

struct DirectionalLimit {
  RealMatrix limit;            // extrapolated H_c(p + h u), h -> 0
  RealMatrix prediction;       // H_c(p) + Delta_u(p)
  double residual = 0.0;       // max |limit - prediction|
  std::vector<double> steps;
};

// Evaluates the continuous QFI along p + h u over a decreasing schedule and
// extrapolates h -> 0 (leading error is O(h)).
DirectionalLimit directional_limit(const StateFamily& fam, const RealVector& p,
                                   const DirectionVector& u,
                                   const std::vector<double>& schedule = default_limit_schedule(),
                                   const FiniteDifferenceConfig& fd = {},
                                   double tol_zero = kDefaultZeroTol);

struct ContinuityVerdict {
  int axis = 0;
  RealMatrix delta;                                   // Delta_{e_axis}
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> element_continuous;
  RealMatrix h_gap;         // 2 * sum of vanishing-branch Hessians
  bool h_continuous = false;  // whether H itself is continuous here
};

// Per-element continuity of H_c along one coordinate axis, plus the H-vs-H_c
// gap. Refuses points where the family declares a C2 violation.
ContinuityVerdict continuity_verdict(const DerivativeBundle& bundle, int axis,
                                     double tol = 1e-9);

// Family (1 - nu) rho(eps) + nu rho0 with rho0 full rank and co-diagonal
// with rho(eps); derivatives scale by (1 - nu).
StateFamily regularize(const StateFamily& fam, const DensityMatrix& rho0, double nu);

struct RegularizationTrace {
  std::vector<double> nu_schedule;
  std::vector<MetricMatrix> qfi_values;
  RealMatrix extrapolated_limit;   // lim_{nu -> 0} H(rho_{eps,nu})
  RealMatrix hc_prediction;        // limit + 2 * kernel Hessian sum
  std::vector<double> min_eigenvalues;
  std::string rho0_description;
};

// Evaluates H on the regularized family over a decreasing nu schedule and
// extrapolates nu -> 0; every intermediate state is checked full rank.
RegularizationTrace regularization_limit(const StateFamily& fam, const RealVector& p,
                                         const DensityMatrix& rho0,
                                         const std::vector<double>& schedule,
                                         const FiniteDifferenceConfig& fd = {},
                                         double tol_zero = kDefaultZeroTol);

// Zeroth order of the directional Taylor expansion in an extended parameter
// space: H_c(base) + Delta_u(base), restricted to the leading n_estimation
// block. n_estimation defaults to all but the last coordinate.
MetricMatrix directional_taylor_zeroth(const DerivativeBundle& bundle_at_base,
                                       const DirectionVector& u_tilde,
                                       int n_estimation = -1);

// Finite-difference oracle for the branch curvatures u^T H_k u: follows the
// vanishing eigenvalue branches of rho(p + h u) by eigenvector overlap and
// fits p_k(h) ~ (1/2) c h^2. Results align with vanishing_branch_hessians.
std::vector<double> track_branch_curvatures(const StateFamily& fam, const RealVector& p,
                                            const DirectionVector& u,
                                            const std::vector<double>& schedule =
                                                default_limit_schedule(),
                                            const FiniteDifferenceConfig& fd = {},
                                            double tol_zero = kDefaultZeroTol);

}  // namespace qfigeo
