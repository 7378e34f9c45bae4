#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qfigeo/hermitian.hpp"

namespace qfigeo {

// Inclusive box the estimation parameters live in.
struct ParameterDomain {
  RealVector lo;
  RealVector hi;
  bool contains(const RealVector& p, double slack = 1e-12) const;
};

ParameterDomain box_domain(std::initializer_list<std::pair<double, double>> bounds);

// Declared smoothness: C2 everywhere, or C2 except at listed points.
// Analyzers that rely on continuity of the second derivative refuse to
// report at listed points.
struct SmoothnessClass {
  bool c2_everywhere = true;
  std::vector<RealVector> c2_violations;
  bool c2_at(const RealVector& p, double radius = 1e-9) const;
};

// Parameterized density-matrix family rho(eps). The evaluator returns raw
// matrix entries; evaluate() validates them as a density matrix. Analytic
// first/second derivative evaluators are optional; bundles fall back to
// central finite differences when they are absent.
class StateFamily {
 public:
  using Evaluator = std::function<ComplexMatrix(const RealVector&)>;
  using FirstDerivative = std::function<ComplexMatrix(const RealVector&, int)>;
  using SecondDerivative = std::function<ComplexMatrix(const RealVector&, int, int)>;

  StateFamily(std::string name, Eigen::Index dim, int n_params,
              ParameterDomain domain, SmoothnessClass smoothness,
              Evaluator evaluator,
              FirstDerivative d1 = nullptr, SecondDerivative d2 = nullptr);

  const std::string& name() const { return name_; }
  Eigen::Index dim() const { return dim_; }
  int n_params() const { return n_params_; }
  const ParameterDomain& domain() const { return domain_; }
  const SmoothnessClass& smoothness() const { return smoothness_; }
  bool has_analytic_first() const { return d1_ != nullptr; }
  bool has_analytic_second() const { return d2_ != nullptr; }
  bool has_analytic_derivatives() const { return d1_ != nullptr && d2_ != nullptr; }

  DensityMatrix evaluate(const RealVector& p) const;
  // Raw entries without density-matrix validation (diagnostics only).
  ComplexMatrix evaluate_raw(const RealVector& p) const;
  ComplexMatrix analytic_d1(const RealVector& p, int i) const;
  ComplexMatrix analytic_d2(const RealVector& p, int i, int j) const;

  void check_point(const RealVector& p) const;  // DomainError outside the box

 private:
  std::string name_;
  Eigen::Index dim_;
  int n_params_;
  ParameterDomain domain_;
  SmoothnessClass smoothness_;
  Evaluator evaluator_;
  FirstDerivative d1_;
  SecondDerivative d2_;
};

struct FiniteDifferenceConfig {
  double h = 1e-4;
  int richardson_levels = 2;
  void validate() const;
};

// rho with all first and second parameter derivatives at one point, plus the
// spectrum of rho partitioned at tol_zero. Immutable once built.
struct DerivativeBundle {
  enum class Provenance { analytic, finite_difference };

  RealVector point;
  DensityMatrix rho;
  std::vector<ComplexMatrix> d1;  // n matrices
  std::vector<ComplexMatrix> d2;  // n*n matrices row-major, empty if skipped
  EigenDecomposition spectrum;
  Provenance provenance = Provenance::analytic;
  double fd_step = 0.0;
  bool family_c2_here = true;
  std::uint64_t id = 0;

  int n_params() const { return static_cast<int>(d1.size()); }
  Eigen::Index dim() const { return rho.dim(); }
  bool has_second() const { return !d2.empty(); }
  const ComplexMatrix& second(int i, int j) const;
};

DerivativeBundle evaluate_bundle(const StateFamily& fam, const RealVector& p,
                                 const FiniteDifferenceConfig& fd = {},
                                 double tol_zero = kDefaultZeroTol,
                                 bool with_second = true);

// Builtin families by name. Understands "random-full-rank(dim,seed)".
StateFamily builtin_family(const std::string& name);
std::vector<std::string> builtin_family_names();

StateFamily make_constant_family(Eigen::Index dim, int n_params = 1);
StateFamily make_random_full_rank(Eigen::Index dim, std::uint64_t seed, int n_params = 2);
// Full rank everywhere except at eps = 0 where kernel_dim eigenvalue
// branches vanish quadratically with known SPD Hessians.
StateFamily make_random_rank_deficient(Eigen::Index dim, std::uint64_t seed,
                                       int n_params = 2, int kernel_dim = 1);
// Ground-truth Hessians of the vanishing branches of the family above.
std::vector<RealMatrix> random_rank_deficient_hessians(Eigen::Index dim, std::uint64_t seed,
                                                       int n_params = 2, int kernel_dim = 1);

// Smooth change of coordinates with analytic Jacobian/Hessian, inner = map(outer).
struct CoordinateMap {
  int n_outer = 0;
  int n_inner = 0;
  ParameterDomain outer_domain;
  std::function<RealVector(const RealVector&)> map;
  // jacobian(x)(i, a) = d inner_i / d outer_a
  std::function<RealMatrix(const RealVector&)> jacobian;
  // hessian(x, i)(a, b) = d^2 inner_i / (d outer_a d outer_b)
  std::function<RealMatrix(const RealVector&, int)> hessian;
};

StateFamily reparametrize(const StateFamily& fam, const CoordinateMap& map);

// Freeze a subset of coordinates; the result exposes only the free ones.
StateFamily fix_parameters(const StateFamily& fam,
                           const std::vector<std::pair<int, double>>& bindings);

// Family defined by explicit matrices at discrete points (scenario files).
StateFamily make_table_family(std::string name, Eigen::Index dim, int n_params,
                              std::vector<std::pair<RealVector, ComplexMatrix>> table,
                              ParameterDomain domain);

struct FamilyDiagnostics {
  double max_hermiticity_violation = 0.0;
  double max_trace_violation = 0.0;
  double min_eigenvalue = 0.0;
  std::vector<Eigen::Index> rank_per_point;
  std::map<Eigen::Index, int> rank_counts;
  bool ok() const;
};

FamilyDiagnostics validate_family(const StateFamily& fam,
                                  const std::vector<RealVector>& probes,
                                  double tol_zero = kDefaultZeroTol);

}  // namespace qfigeo
