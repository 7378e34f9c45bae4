#pragma once

#include <cstdint>
#include <vector>

#include "qfigeo/family.hpp"
#include "qfigeo/hermitian.hpp"

namespace qfigeo {

enum class MetricRole {
  qfi,             // quantum Fisher information matrix H
  continuous_qfi,  // H_c, four times the Bures metric
  truncated,       // support-only sum, 4x the truncated metric
  hessian_sum,     // summed Hessians of vanishing eigenvalues
  jump,            // directional discontinuity
};

const char* metric_role_name(MetricRole role);

// Real symmetric n x n matrix tagged with what it measures and where.
// H and H_c carriers are checked PSD (within 1e-8) at construction.
struct MetricMatrix {
  RealMatrix values;
  MetricRole role;
  RealVector point;

  // psd_tol applies to the H / H_c roles; numeric carriers pass their own
  // accuracy scale instead of the analytic default.
  static MetricMatrix make(RealMatrix values, MetricRole role, RealVector point,
                           double psd_tol = 1e-8);
  Eigen::Index order() const { return values.rows(); }
};

// Symmetric logarithmic derivatives solving (L_i rho + rho L_i)/2 = d_i rho
// on the reachable block. Tagged with the bundle they were built from.
struct SldSet {
  std::vector<ComplexMatrix> operators;
  std::uint64_t bundle_id = 0;
};

SldSet sld(const DerivativeBundle& bundle);

// H from the spectral sum over p_k + p_l > 0.
MetricMatrix qfi_spectral(const DerivativeBundle& bundle);

// H as (1/2) tr[(L_i L_j + L_j L_i) rho]; must be fed SLDs of the same bundle.
MetricMatrix qfi_from_sld(const DerivativeBundle& bundle, const SldSet& slds);

// (tr sqrt(sqrt(a) b sqrt(a)))^2, computed as the squared nuclear norm of
// sqrt(a) sqrt(b). The singular-value route avoids the square-root noise
// amplification of near-zero eigenvalues of the triple product.
double uhlmann_fidelity(const DensityMatrix& a, const DensityMatrix& b);

// Reference implementation via the triple-product eigenvalues; eigenvalues in
// [-1e-12, 0) are clamped, anything lower raises NotPSD.
double uhlmann_fidelity_direct(const DensityMatrix& a, const DensityMatrix& b);

// d_B^2 = 2 (1 - sqrt(F)).
double bures_distance_sq(const DensityMatrix& a, const DensityMatrix& b);

// H_c = 2 sum_{p_k>0, p_l>0} Re(<k|d_i rho|l><l|d_j rho|k>)/(p_k + p_l)
//       + 2 tr[P_0 d_ij rho].
// Requires second derivatives; reduces to qfi_spectral on full-rank states.
MetricMatrix continuous_qfi(const DerivativeBundle& bundle);

// Summed Hessians of the vanishing eigenvalues, computed as (H_c - H)/2.
MetricMatrix kernel_hessian_sum(const DerivativeBundle& bundle);

// Independent route: tr[P_0 d_ij rho] minus the mixed support-kernel terms.
RealMatrix kernel_hessian_sum_via_projector(const DerivativeBundle& bundle);

// The support-only sum (both indices on the support). Coincides with H at
// full rank and misses the mixed terms otherwise.
MetricMatrix truncated_metric(const DerivativeBundle& bundle);

// Fidelity-based numeric Bures metric: d_B^2(rho(p), rho(p + h u))/h^2
// extrapolated h -> 0 over h, h/2, ..., diagonal directions from the axes
// and off-diagonals by polarization with the unnormalized direction
// e_i + e_j. Returns 4g. Default step is coarser than derivative stencils.
MetricMatrix numeric_bures_metric(const StateFamily& fam, const RealVector& p,
                                  const FiniteDifferenceConfig& fd = {1e-3, 2});

struct CramerRaoBound {
  RealMatrix covariance_bound;  // inverse or support-restricted pseudo-inverse
  bool singular = false;
  RealMatrix null_directions;   // columns spanning the unreachable directions
};

// Inverse of H when it is safely positive, otherwise the pseudo-inverse on
// the support with the singular directions flagged.
CramerRaoBound cramer_rao_lower_bound(const MetricMatrix& H, double tol = 1e-12);

}  // namespace qfigeo
