#include "qfigeo/family.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

#include "qfigeo/extrapolation.hpp"

namespace qfigeo {

namespace {

std::atomic<std::uint64_t> g_next_bundle_id{1};

std::string point_str(const RealVector& p) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (i) os << ", ";
    os << p[i];
  }
  os << ")";
  return os.str();
}

// Deterministic RNG with hand-rolled gaussian so streams do not depend on
// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 gen_;
};

ComplexMatrix random_hermitian(Rng& rng, Eigen::Index dim) {
  ComplexMatrix m(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      m(r, c) = Complex(rng.gaussian(), rng.gaussian());
    }
  }
  return symmetrized(m);
}

}  // namespace

bool ParameterDomain::contains(const RealVector& p, double slack) const {
  if (p.size() != lo.size()) return false;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i])) return false;
    if (p[i] < lo[i] - slack || p[i] > hi[i] + slack) return false;
  }
  return true;
}

ParameterDomain box_domain(std::initializer_list<std::pair<double, double>> bounds) {
  ParameterDomain dom;
  dom.lo.resize(static_cast<Eigen::Index>(bounds.size()));
  dom.hi.resize(static_cast<Eigen::Index>(bounds.size()));
  Eigen::Index i = 0;
  for (const auto& [lo, hi] : bounds) {
    dom.lo[i] = lo;
    dom.hi[i] = hi;
    ++i;
  }
  return dom;
}

bool SmoothnessClass::c2_at(const RealVector& p, double radius) const {
  if (c2_everywhere) return true;
  for (const auto& bad : c2_violations) {
    if (bad.size() == p.size() && (bad - p).cwiseAbs().maxCoeff() <= radius) return false;
  }
  return true;
}

StateFamily::StateFamily(std::string name, Eigen::Index dim, int n_params,
                         ParameterDomain domain, SmoothnessClass smoothness,
                         Evaluator evaluator, FirstDerivative d1, SecondDerivative d2)
    : name_(std::move(name)),
      dim_(dim),
      n_params_(n_params),
      domain_(std::move(domain)),
      smoothness_(std::move(smoothness)),
      evaluator_(std::move(evaluator)),
      d1_(std::move(d1)),
      d2_(std::move(d2)) {
  if (dim_ <= 0 || n_params_ <= 0 || !evaluator_) {
    throw Error(Errc::validation_error, "state family needs dim >= 1, n_params >= 1, evaluator");
  }
  if (domain_.lo.size() != n_params_ || domain_.hi.size() != n_params_) {
    throw Error(Errc::validation_error, "domain bounds must match n_params");
  }
}

void StateFamily::check_point(const RealVector& p) const {
  if (p.size() != n_params_) {
    throw Error(Errc::dimension_mismatch,
                "point has " + std::to_string(p.size()) + " coords, family " + name_ +
                    " expects " + std::to_string(n_params_));
  }
  if (!domain_.contains(p, 1e-12)) {
    throw Error(Errc::domain_error, "point " + point_str(p) + " outside domain of " + name_);
  }
}

DensityMatrix StateFamily::evaluate(const RealVector& p) const {
  return DensityMatrix::from_matrix(evaluate_raw(p));
}

ComplexMatrix StateFamily::evaluate_raw(const RealVector& p) const {
  check_point(p);
  ComplexMatrix m = evaluator_(p);
  if (m.rows() != dim_ || m.cols() != dim_) {
    throw Error(Errc::invariant_violation, "evaluator of " + name_ + " returned wrong shape");
  }
  return m;
}

ComplexMatrix StateFamily::analytic_d1(const RealVector& p, int i) const {
  if (!d1_) throw Error(Errc::invariant_violation, name_ + " has no analytic first derivatives");
  check_point(p);
  return d1_(p, i);
}

ComplexMatrix StateFamily::analytic_d2(const RealVector& p, int i, int j) const {
  if (!d2_) throw Error(Errc::invariant_violation, name_ + " has no analytic second derivatives");
  check_point(p);
  return d2_(p, i, j);
}

void FiniteDifferenceConfig::validate() const {
  if (!(h > 0.0) || h >= 1e-1) {
    throw Error(Errc::validation_error, "finite-difference step must satisfy 0 < h < 0.1");
  }
  if (richardson_levels < 0) {
    throw Error(Errc::validation_error, "richardson_levels must be >= 0");
  }
}

const ComplexMatrix& DerivativeBundle::second(int i, int j) const {
  if (!has_second()) {
    throw Error(Errc::missing_second_derivatives,
                "bundle was built without second derivatives");
  }
  const int n = n_params();
  return d2[static_cast<std::size_t>(i) * n + j];
}

namespace {

ComplexMatrix fd_first(const StateFamily& fam, const RealVector& p, int i,
                       const FiniteDifferenceConfig& fd) {
  std::vector<ComplexMatrix> samples;
  for (int m = 0; m <= fd.richardson_levels; ++m) {
    const double h = fd.h / std::pow(2.0, m);
    RealVector pp = p, pm = p;
    pp[i] += h;
    pm[i] -= h;
    samples.push_back(((fam.evaluate(pp).matrix() - fam.evaluate(pm).matrix()) / (2.0 * h)).eval());
  }
  return richardson_geometric(samples, 2, 2);
}

ComplexMatrix fd_second(const StateFamily& fam, const RealVector& p, int i, int j,
                        const ComplexMatrix& rho0, const FiniteDifferenceConfig& fd) {
  std::vector<ComplexMatrix> samples;
  for (int m = 0; m <= fd.richardson_levels; ++m) {
    const double h = fd.h / std::pow(2.0, m);
    if (i == j) {
      RealVector pp = p, pm = p;
      pp[i] += h;
      pm[i] -= h;
      samples.push_back(
          ((fam.evaluate(pp).matrix() - 2.0 * rho0 + fam.evaluate(pm).matrix()) / (h * h)).eval());
    } else {
      RealVector a = p, b = p, c = p, d = p;
      a[i] += h; a[j] += h;
      b[i] += h; b[j] -= h;
      c[i] -= h; c[j] += h;
      d[i] -= h; d[j] -= h;
      samples.push_back(((fam.evaluate(a).matrix() - fam.evaluate(b).matrix() -
                          fam.evaluate(c).matrix() + fam.evaluate(d).matrix()) /
                         (4.0 * h * h))
                            .eval());
    }
  }
  return richardson_geometric(samples, 2, 2);
}

}  // namespace

DerivativeBundle evaluate_bundle(const StateFamily& fam, const RealVector& p,
                                 const FiniteDifferenceConfig& fd, double tol_zero,
                                 bool with_second) {
  fd.validate();
  fam.check_point(p);
  const int n = fam.n_params();

  DensityMatrix rho = fam.evaluate(p);
  const bool analytic_d1 = fam.has_analytic_first();
  const bool analytic_d2 = fam.has_analytic_second();
  const bool analytic = analytic_d1 && (!with_second || analytic_d2);

  std::vector<ComplexMatrix> d1(n);
  for (int i = 0; i < n; ++i) {
    d1[i] = analytic_d1 ? fam.analytic_d1(p, i) : fd_first(fam, p, i, fd);
    const double herm = hermiticity_residual(d1[i]);
    if (herm > 1e-8) {
      throw Error(Errc::invariant_violation,
                  "d rho / d eps_" + std::to_string(i) + " not Hermitian, residual " +
                      std::to_string(herm));
    }
    d1[i] = symmetrized(d1[i]);
    const double tr = std::abs(d1[i].trace());
    if (tr > 1e-8) {
      throw Error(Errc::invariant_violation,
                  "d rho / d eps_" + std::to_string(i) + " not traceless, |tr| = " +
                      std::to_string(tr));
    }
  }

  std::vector<ComplexMatrix> d2;
  if (with_second) {
    d2.assign(static_cast<std::size_t>(n) * n, ComplexMatrix());
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        ComplexMatrix mij, mji;
        if (analytic_d2) {
          mij = fam.analytic_d2(p, i, j);
          mji = fam.analytic_d2(p, j, i);
        } else {
          mij = fd_second(fam, p, i, j, rho.matrix(), fd);
          mji = mij;
        }
        if ((mij - mji).cwiseAbs().maxCoeff() > 1e-7) {
          throw Error(Errc::invariant_violation,
                      "second derivatives not symmetric in (i,j) within 1e-7");
        }
        ComplexMatrix sym = symmetrized(0.5 * (mij + mji));
        d2[static_cast<std::size_t>(i) * n + j] = sym;
        d2[static_cast<std::size_t>(j) * n + i] = std::move(sym);
      }
    }
  }

  EigenDecomposition spectrum = eigh(rho.matrix(), tol_zero);
  DerivativeBundle bundle{
      p,
      std::move(rho),
      std::move(d1),
      std::move(d2),
      std::move(spectrum),
      analytic ? DerivativeBundle::Provenance::analytic
               : DerivativeBundle::Provenance::finite_difference,
      analytic ? 0.0 : fd.h,
      fam.smoothness().c2_at(p),
      g_next_bundle_id.fetch_add(1)};

  // At a vanishing eigenvalue the first derivative of that eigenvalue must
  // vanish too: the eigenvalue sits at a local minimum. That argument needs
  // an interior point; on a domain boundary (a mixedness coordinate pinned
  // at zero, say) the eigenvalue may leave zero linearly, so the check is
  // limited to coordinates with room on both sides.
  std::vector<bool> interior(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    interior[static_cast<std::size_t>(i)] =
        p[i] > fam.domain().lo[i] + 1e-9 && p[i] < fam.domain().hi[i] - 1e-9;
  }
  for (Eigen::Index k : bundle.spectrum.zero_set) {
    const auto vec = bundle.spectrum.eigenvectors.col(k);
    for (int i = 0; i < n; ++i) {
      if (!interior[static_cast<std::size_t>(i)]) continue;
      const double slope = std::abs((vec.adjoint() * bundle.d1[i] * vec)(0, 0));
      if (slope > 1e-6) {
        throw Error(Errc::invariant_violation,
                    "first derivative of vanishing eigenvalue is " + std::to_string(slope) +
                        "; state is not C^2 or not PSD near " + point_str(p));
      }
    }
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// Builtin families
// ---------------------------------------------------------------------------

namespace {

using LamFn = std::function<RealVector(const RealVector&)>;
using LamD1Fn = std::function<RealVector(const RealVector&, int)>;
using LamD2Fn = std::function<RealVector(const RealVector&, int, int)>;

// Family diagonal in a fixed basis; everything reduces to eigenvalue curves.
StateFamily make_diagonal_family(std::string name, Eigen::Index dim, int n_params,
                                 ParameterDomain domain, SmoothnessClass smooth,
                                 LamFn lam, LamD1Fn d1, LamD2Fn d2) {
  auto eval = [lam](const RealVector& p) {
    return ComplexMatrix(lam(p).cast<Complex>().asDiagonal());
  };
  auto ev1 = [d1](const RealVector& p, int i) {
    return ComplexMatrix(d1(p, i).cast<Complex>().asDiagonal());
  };
  auto ev2 = [d2](const RealVector& p, int i, int j) {
    return ComplexMatrix(d2(p, i, j).cast<Complex>().asDiagonal());
  };
  return StateFamily(std::move(name), dim, n_params, std::move(domain), std::move(smooth),
                     std::move(eval), std::move(ev1), std::move(ev2));
}

StateFamily make_example1() {
  auto lam = [](const RealVector& p) {
    const double s = std::sin(p[0]), c = std::cos(p[0]);
    return (RealVector(2) << s * s, c * c).finished();
  };
  auto d1 = [](const RealVector& p, int) {
    const double s2 = std::sin(2.0 * p[0]);
    return (RealVector(2) << s2, -s2).finished();
  };
  auto d2 = [](const RealVector& p, int, int) {
    const double c2 = 2.0 * std::cos(2.0 * p[0]);
    return (RealVector(2) << c2, -c2).finished();
  };
  return make_diagonal_family("example1", 2, 1, box_domain({{0.0, M_PI}}), {}, lam, d1, d2);
}

StateFamily make_example2() {
  auto lam = [](const RealVector& p) {
    const double s1 = std::sin(p[0]), s2 = std::sin(p[1]);
    const double c1 = std::cos(p[0]), c2 = std::cos(p[1]);
    return (RealVector(3) << 0.5 * (s1 * s1 + s2 * s2), 0.5 * c1 * c1, 0.5 * c2 * c2).finished();
  };
  auto d1 = [](const RealVector& p, int i) {
    const double s = 0.5 * std::sin(2.0 * p[i]);
    RealVector v = RealVector::Zero(3);
    v[0] = s;
    v[i + 1] = -s;
    return v;
  };
  auto d2 = [](const RealVector& p, int i, int j) {
    RealVector v = RealVector::Zero(3);
    if (i == j) {
      const double c = std::cos(2.0 * p[i]);
      v[0] = c;
      v[i + 1] = -c;
    }
    return v;
  };
  return make_diagonal_family("example2", 3, 2, box_domain({{-1.0, 1.0}, {-1.0, 1.0}}), {},
                              lam, d1, d2);
}

// (1 - nu) * (sin^2 e |0><0| + cos^2 e |1><1|) + nu/2 * I, parameters (e, nu).
StateFamily make_example3() {
  auto lam = [](const RealVector& p) {
    const double s = std::sin(p[0]), c = std::cos(p[0]), nu = p[1];
    return (RealVector(2) << (1.0 - nu) * s * s + 0.5 * nu, (1.0 - nu) * c * c + 0.5 * nu)
        .finished();
  };
  auto d1 = [](const RealVector& p, int i) {
    const double e = p[0], nu = p[1];
    if (i == 0) {
      const double s2 = (1.0 - nu) * std::sin(2.0 * e);
      return (RealVector(2) << s2, -s2).finished();
    }
    const double s = std::sin(e), c = std::cos(e);
    return (RealVector(2) << 0.5 - s * s, 0.5 - c * c).finished();
  };
  auto d2 = [](const RealVector& p, int i, int j) {
    const double e = p[0], nu = p[1];
    if (i == 0 && j == 0) {
      const double c2 = 2.0 * (1.0 - nu) * std::cos(2.0 * e);
      return (RealVector(2) << c2, -c2).finished();
    }
    if (i != j) {
      const double s2 = std::sin(2.0 * e);
      return (RealVector(2) << -s2, s2).finished();
    }
    return RealVector(RealVector::Zero(2));
  };
  return make_diagonal_family("example3-regularized", 2, 2,
                              box_domain({{0.0, M_PI}, {0.0, 1.0 - 1e-9}}), {}, lam, d1, d2);
}

// eps^4 sin^2(1/eps) population; C2 fails (second derivative discontinuous)
// at eps = 0, which the family declares.
StateFamily make_fig2_pathological() {
  auto f = [](double e) { return e == 0.0 ? 0.0 : std::pow(e, 4) * std::pow(std::sin(1.0 / e), 2); };
  auto fp = [](double e) {
    if (e == 0.0) return 0.0;
    const double s = std::sin(1.0 / e);
    return 4.0 * e * e * e * s * s - e * e * std::sin(2.0 / e);
  };
  auto fpp = [](double e) {
    if (e == 0.0) return 0.0;
    const double s = std::sin(1.0 / e);
    return 12.0 * e * e * s * s - 6.0 * e * std::sin(2.0 / e) + 2.0 * std::cos(2.0 / e);
  };
  auto lam = [f](const RealVector& p) {
    const double v = f(p[0]);
    return (RealVector(2) << v, 1.0 - v).finished();
  };
  auto d1 = [fp](const RealVector& p, int) {
    const double v = fp(p[0]);
    return (RealVector(2) << v, -v).finished();
  };
  auto d2 = [fpp](const RealVector& p, int, int) {
    const double v = fpp(p[0]);
    return (RealVector(2) << v, -v).finished();
  };
  SmoothnessClass smooth;
  smooth.c2_everywhere = false;
  smooth.c2_violations.push_back(RealVector::Zero(1));
  return make_diagonal_family("fig2-pathological", 2, 1, box_domain({{-1.0, 1.0}}),
                              std::move(smooth), lam, d1, d2);
}

StateFamily make_pure_qubit_rotation() {
  auto psi = [](double e) { return (ComplexVector(2) << std::cos(e), std::sin(e)).finished(); };
  auto dpsi = [](double e) { return (ComplexVector(2) << -std::sin(e), std::cos(e)).finished(); };
  auto eval = [psi](const RealVector& p) {
    const ComplexVector v = psi(p[0]);
    return ComplexMatrix(v * v.adjoint());
  };
  auto ev1 = [psi, dpsi](const RealVector& p, int) {
    const ComplexVector v = psi(p[0]), w = dpsi(p[0]);
    return ComplexMatrix(w * v.adjoint() + v * w.adjoint());
  };
  auto ev2 = [psi, dpsi](const RealVector& p, int, int) {
    const ComplexVector v = psi(p[0]), w = dpsi(p[0]);
    // psi'' = -psi for this rotation
    return ComplexMatrix(-2.0 * v * v.adjoint() + 2.0 * w * w.adjoint());
  };
  return StateFamily("pure-qubit-rotation", 2, 1, box_domain({{-2.0 * M_PI, 2.0 * M_PI}}), {},
                     std::move(eval), std::move(ev1), std::move(ev2));
}

// Product of parameter rotations exp(i eps_k G_k) applied to an
// eps-dependent spectrum; all derivatives are exact.
struct RotatedSpectrumData {
  Eigen::Index dim = 0;
  int n_params = 0;
  std::vector<ComplexMatrix> gen_vecs;  // eigenvectors of G_k
  std::vector<RealVector> gen_vals;     // eigenvalues of G_k
  RealVector base;                      // weights of the non-vanishing slots
  std::vector<RealMatrix> curv;         // SPD Hessians of vanishing branches

  int kernel_dim() const { return static_cast<int>(curv.size()); }

  ComplexMatrix factor(int k, double theta, int order) const {
    const RealVector& lam = gen_vals[k];
    ComplexVector diag(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      Complex v = std::exp(Complex(0.0, theta * lam[i]));
      for (int o = 0; o < order; ++o) v *= Complex(0.0, lam[i]);
      diag[i] = v;
    }
    return gen_vecs[k] * diag.asDiagonal() * gen_vecs[k].adjoint();
  }

  ComplexMatrix unitary(const RealVector& eps, const std::vector<int>& orders) const {
    ComplexMatrix u = ComplexMatrix::Identity(dim, dim);
    for (int k = 0; k < n_params; ++k) u *= factor(k, eps[k], orders[k]);
    return u;
  }

  RealVector lam_values(const RealVector& eps) const {
    RealVector v(dim);
    double total = 0.0;
    const int m = kernel_dim();
    for (int a = 0; a < m; ++a) {
      v[a] = 0.5 * eps.dot(curv[a] * eps);
      total += v[a];
    }
    for (Eigen::Index k = m; k < dim; ++k) v[k] = base[k - m] * (1.0 - total);
    return v;
  }

  RealVector lam_d1(const RealVector& eps, int i) const {
    RealVector v(dim);
    double total = 0.0;
    const int m = kernel_dim();
    for (int a = 0; a < m; ++a) {
      v[a] = (curv[a] * eps)(i);
      total += v[a];
    }
    for (Eigen::Index k = m; k < dim; ++k) v[k] = -base[k - m] * total;
    return v;
  }

  RealVector lam_d2(const RealVector&, int i, int j) const {
    RealVector v(dim);
    double total = 0.0;
    const int m = kernel_dim();
    for (int a = 0; a < m; ++a) {
      v[a] = curv[a](i, j);
      total += v[a];
    }
    for (Eigen::Index k = m; k < dim; ++k) v[k] = -base[k - m] * total;
    return v;
  }

  ComplexMatrix rho(const RealVector& eps) const {
    const std::vector<int> zero(n_params, 0);
    const ComplexMatrix u = unitary(eps, zero);
    return u * lam_values(eps).cast<Complex>().asDiagonal() * u.adjoint();
  }

  ComplexMatrix drho(const RealVector& eps, int i) const {
    std::vector<int> orders(n_params, 0);
    const ComplexMatrix u = unitary(eps, orders);
    orders[i] = 1;
    const ComplexMatrix ui = unitary(eps, orders);
    const ComplexMatrix d = lam_values(eps).cast<Complex>().asDiagonal();
    const ComplexMatrix di = lam_d1(eps, i).cast<Complex>().asDiagonal();
    return ui * d * u.adjoint() + u * di * u.adjoint() + u * d * ui.adjoint();
  }

  ComplexMatrix d2rho(const RealVector& eps, int i, int j) const {
    std::vector<int> orders(n_params, 0);
    const ComplexMatrix u = unitary(eps, orders);
    orders[i] = 1;
    const ComplexMatrix ui = unitary(eps, orders);
    std::fill(orders.begin(), orders.end(), 0);
    orders[j] = 1;
    const ComplexMatrix uj = unitary(eps, orders);
    std::fill(orders.begin(), orders.end(), 0);
    orders[i] += 1;
    orders[j] += 1;
    const ComplexMatrix uij = unitary(eps, orders);

    const ComplexMatrix d = lam_values(eps).cast<Complex>().asDiagonal();
    const ComplexMatrix di = lam_d1(eps, i).cast<Complex>().asDiagonal();
    const ComplexMatrix dj = lam_d1(eps, j).cast<Complex>().asDiagonal();
    const ComplexMatrix dij = lam_d2(eps, i, j).cast<Complex>().asDiagonal();

    return uij * d * u.adjoint() + ui * dj * u.adjoint() + ui * d * uj.adjoint() +
           uj * di * u.adjoint() + u * dij * u.adjoint() + u * di * uj.adjoint() +
           uj * d * ui.adjoint() + u * dj * ui.adjoint() + u * d * uij.adjoint();
  }
};

RotatedSpectrumData build_rotated_spectrum(Eigen::Index dim, std::uint64_t seed, int n_params,
                                           int kernel_dim) {
  if (dim < 2 || n_params < 1 || kernel_dim < 0 || kernel_dim >= dim) {
    throw Error(Errc::validation_error, "random family needs dim >= 2, 0 <= kernel_dim < dim");
  }
  Rng rng(seed);
  RotatedSpectrumData data;
  data.dim = dim;
  data.n_params = n_params;
  for (int k = 0; k < n_params; ++k) {
    const ComplexMatrix g = random_hermitian(rng, dim);
    EigenDecomposition spec = eigh(g, 0.0);
    data.gen_vecs.push_back(spec.eigenvectors);
    data.gen_vals.push_back(spec.eigenvalues);
  }
  for (int a = 0; a < kernel_dim; ++a) {
    RealMatrix w(n_params, n_params);
    for (int r = 0; r < n_params; ++r)
      for (int c = 0; c < n_params; ++c) w(r, c) = rng.gaussian();
    RealMatrix sym = 0.5 * (w + w.transpose());
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(sym);
    sym += (0.4 - es.eigenvalues().minCoeff()) * RealMatrix::Identity(n_params, n_params);
    const double top = sym.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
    if (top > 2.5) sym *= 2.5 / top;
    data.curv.push_back(sym);
  }
  data.base.resize(dim - kernel_dim);
  double total = 0.0;
  for (Eigen::Index k = 0; k < data.base.size(); ++k) {
    data.base[k] = rng.uniform(0.8, 1.2);
    total += data.base[k];
  }
  data.base /= total;
  return data;
}

StateFamily make_rotated_spectrum_family(std::string name, Eigen::Index dim, std::uint64_t seed,
                                         int n_params, int kernel_dim, double half_width) {
  auto data = std::make_shared<RotatedSpectrumData>(
      build_rotated_spectrum(dim, seed, n_params, kernel_dim));
  ParameterDomain dom;
  dom.lo = RealVector::Constant(n_params, -half_width);
  dom.hi = RealVector::Constant(n_params, half_width);
  auto eval = [data](const RealVector& p) { return data->rho(p); };
  auto ev1 = [data](const RealVector& p, int i) { return data->drho(p, i); };
  auto ev2 = [data](const RealVector& p, int i, int j) { return data->d2rho(p, i, j); };
  return StateFamily(std::move(name), dim, n_params, std::move(dom), {}, std::move(eval),
                     std::move(ev1), std::move(ev2));
}

}  // namespace

StateFamily make_constant_family(Eigen::Index dim, int n_params) {
  ParameterDomain dom;
  dom.lo = RealVector::Constant(n_params, -10.0);
  dom.hi = RealVector::Constant(n_params, 10.0);
  const double w = 1.0 / static_cast<double>(dim);
  auto eval = [dim, w](const RealVector&) {
    return ComplexMatrix(w * ComplexMatrix::Identity(dim, dim));
  };
  auto ev1 = [dim](const RealVector&, int) { return ComplexMatrix(ComplexMatrix::Zero(dim, dim)); };
  auto ev2 = [dim](const RealVector&, int, int) {
    return ComplexMatrix(ComplexMatrix::Zero(dim, dim));
  };
  return StateFamily("constant", dim, n_params, std::move(dom), {}, std::move(eval),
                     std::move(ev1), std::move(ev2));
}

StateFamily make_random_full_rank(Eigen::Index dim, std::uint64_t seed, int n_params) {
  return make_rotated_spectrum_family(
      "random-full-rank(" + std::to_string(dim) + "," + std::to_string(seed) + ")", dim, seed,
      n_params, 0, 1.0);
}

StateFamily make_random_rank_deficient(Eigen::Index dim, std::uint64_t seed, int n_params,
                                       int kernel_dim) {
  return make_rotated_spectrum_family(
      "random-rank-deficient(" + std::to_string(dim) + "," + std::to_string(seed) + ")", dim,
      seed, n_params, kernel_dim, 0.3);
}

std::vector<RealMatrix> random_rank_deficient_hessians(Eigen::Index dim, std::uint64_t seed,
                                                       int n_params, int kernel_dim) {
  return build_rotated_spectrum(dim, seed, n_params, kernel_dim).curv;
}

std::vector<std::string> builtin_family_names() {
  return {"example1",          "example2",           "example3-regularized",
          "fig2-pathological", "pure-qubit-rotation", "random-full-rank(dim,seed)"};
}

StateFamily builtin_family(const std::string& name) {
  std::string trimmed;
  for (char c : name) {
    if (!std::isspace(static_cast<unsigned char>(c))) trimmed += c;
  }
  if (trimmed == "example1") return make_example1();
  if (trimmed == "example2") return make_example2();
  if (trimmed == "example3-regularized") return make_example3();
  if (trimmed == "fig2-pathological") return make_fig2_pathological();
  if (trimmed == "pure-qubit-rotation") return make_pure_qubit_rotation();
  if (trimmed.rfind("random-full-rank(", 0) == 0 && trimmed.back() == ')') {
    const std::string args = trimmed.substr(17, trimmed.size() - 18);
    const auto comma = args.find(',');
    if (comma != std::string::npos) {
      try {
        const long long dim = std::stoll(args.substr(0, comma));
        const unsigned long long seed = std::stoull(args.substr(comma + 1));
        if (dim >= 2 && dim <= 64) {
          return make_random_full_rank(static_cast<Eigen::Index>(dim),
                                       static_cast<std::uint64_t>(seed));
        }
      } catch (const std::exception&) {
        // falls through to UnknownFamily
      }
    }
  }
  throw Error(Errc::unknown_family, "no builtin family named '" + name + "'");
}

StateFamily reparametrize(const StateFamily& fam, const CoordinateMap& map) {
  if (map.n_inner != fam.n_params()) {
    throw Error(Errc::dimension_mismatch, "coordinate map inner size must match family");
  }
  if (!map.map || !map.jacobian || !map.hessian) {
    throw Error(Errc::validation_error, "coordinate map needs map, jacobian and hessian");
  }
  if (map.outer_domain.lo.size() != map.n_outer) {
    throw Error(Errc::validation_error, "coordinate map needs an outer domain");
  }

  // Local copies so the returned family owns everything it uses.
  auto inner = std::make_shared<StateFamily>(fam);
  auto mp = map;

  SmoothnessClass smooth;
  smooth.c2_everywhere = fam.smoothness().c2_everywhere;
  // Listed C2 violations cannot be pulled back through an arbitrary map;
  // the composed family keeps only the everywhere-flag.

  auto eval = [inner, mp](const RealVector& x) {
    return inner->evaluate(mp.map(x)).matrix();
  };
  StateFamily::FirstDerivative ev1 = nullptr;
  StateFamily::SecondDerivative ev2 = nullptr;
  if (fam.has_analytic_derivatives()) {
    ev1 = [inner, mp](const RealVector& x, int a) {
      const RealVector y = mp.map(x);
      const RealMatrix jac = mp.jacobian(x);
      ComplexMatrix out = ComplexMatrix::Zero(inner->dim(), inner->dim());
      for (int i = 0; i < inner->n_params(); ++i) {
        if (jac(i, a) != 0.0) out += jac(i, a) * inner->analytic_d1(y, i);
      }
      return out;
    };
    ev2 = [inner, mp](const RealVector& x, int a, int b) {
      const RealVector y = mp.map(x);
      const RealMatrix jac = mp.jacobian(x);
      ComplexMatrix out = ComplexMatrix::Zero(inner->dim(), inner->dim());
      for (int i = 0; i < inner->n_params(); ++i) {
        for (int j = 0; j < inner->n_params(); ++j) {
          const double w = jac(i, a) * jac(j, b);
          if (w != 0.0) out += w * inner->analytic_d2(y, i, j);
        }
        const double h = mp.hessian(x, i)(a, b);
        if (h != 0.0) out += h * inner->analytic_d1(y, i);
      }
      return out;
    };
  }
  return StateFamily(fam.name() + "@reparam", fam.dim(), map.n_outer, map.outer_domain,
                     std::move(smooth), std::move(eval), std::move(ev1), std::move(ev2));
}

StateFamily fix_parameters(const StateFamily& fam,
                           const std::vector<std::pair<int, double>>& bindings) {
  const int n = fam.n_params();
  std::vector<bool> bound(n, false);
  RealVector values = RealVector::Zero(n);
  for (const auto& [idx, value] : bindings) {
    if (idx < 0 || idx >= n || bound[idx]) {
      throw Error(Errc::validation_error, "invalid or duplicate parameter binding");
    }
    bound[idx] = true;
    values[idx] = value;
  }
  std::vector<int> free_idx;
  for (int i = 0; i < n; ++i) {
    if (!bound[i]) free_idx.push_back(i);
  }
  if (free_idx.empty()) {
    throw Error(Errc::validation_error, "cannot bind every parameter of a family");
  }

  auto inner = std::make_shared<StateFamily>(fam);
  auto embed = [values, free_idx](const RealVector& x) {
    RealVector full = values;
    for (std::size_t a = 0; a < free_idx.size(); ++a) full[free_idx[a]] = x[a];
    return full;
  };

  ParameterDomain dom;
  dom.lo.resize(static_cast<Eigen::Index>(free_idx.size()));
  dom.hi.resize(static_cast<Eigen::Index>(free_idx.size()));
  for (std::size_t a = 0; a < free_idx.size(); ++a) {
    dom.lo[a] = fam.domain().lo[free_idx[a]];
    dom.hi[a] = fam.domain().hi[free_idx[a]];
  }

  SmoothnessClass smooth;
  smooth.c2_everywhere = fam.smoothness().c2_everywhere;
  for (const auto& bad : fam.smoothness().c2_violations) {
    bool on_slice = true;
    for (int i = 0; i < n; ++i) {
      if (bound[i] && std::abs(bad[i] - values[i]) > 1e-9) on_slice = false;
    }
    if (on_slice) {
      RealVector proj(static_cast<Eigen::Index>(free_idx.size()));
      for (std::size_t a = 0; a < free_idx.size(); ++a) proj[a] = bad[free_idx[a]];
      smooth.c2_violations.push_back(proj);
    }
  }

  auto eval = [inner, embed](const RealVector& x) { return inner->evaluate(embed(x)).matrix(); };
  StateFamily::FirstDerivative ev1 = nullptr;
  StateFamily::SecondDerivative ev2 = nullptr;
  if (fam.has_analytic_derivatives()) {
    ev1 = [inner, embed, free_idx](const RealVector& x, int a) {
      return inner->analytic_d1(embed(x), free_idx[a]);
    };
    ev2 = [inner, embed, free_idx](const RealVector& x, int a, int b) {
      return inner->analytic_d2(embed(x), free_idx[a], free_idx[b]);
    };
  }
  return StateFamily(fam.name() + "@fixed", fam.dim(), static_cast<int>(free_idx.size()),
                     std::move(dom), std::move(smooth), std::move(eval), std::move(ev1),
                     std::move(ev2));
}

StateFamily make_table_family(std::string name, Eigen::Index dim, int n_params,
                              std::vector<std::pair<RealVector, ComplexMatrix>> table,
                              ParameterDomain domain) {
  auto data = std::make_shared<std::vector<std::pair<RealVector, ComplexMatrix>>>(std::move(table));
  auto eval = [data](const RealVector& p) {
    for (const auto& [at, m] : *data) {
      if ((at - p).cwiseAbs().maxCoeff() <= 1e-9) return m;
    }
    throw Error(Errc::domain_error,
                "table family has no entry at " + point_str(p) +
                    " (finite-difference stencils need every probed point)");
  };
  return StateFamily(std::move(name), dim, n_params, std::move(domain), {}, std::move(eval));
}

bool FamilyDiagnostics::ok() const {
  return max_hermiticity_violation <= 1e-12 && max_trace_violation <= 1e-10 &&
         min_eigenvalue >= -1e-10;
}

FamilyDiagnostics validate_family(const StateFamily& fam, const std::vector<RealVector>& probes,
                                  double tol_zero) {
  FamilyDiagnostics diag;
  diag.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& p : probes) {
    const ComplexMatrix m = fam.evaluate_raw(p);
    diag.max_hermiticity_violation =
        std::max(diag.max_hermiticity_violation, hermiticity_residual(m));
    diag.max_trace_violation =
        std::max(diag.max_trace_violation, std::abs(m.trace() - Complex(1.0, 0.0)));
    const EigenDecomposition spec = eigh(symmetrized(m), tol_zero);
    diag.min_eigenvalue = std::min(diag.min_eigenvalue, spec.eigenvalues.minCoeff());
    diag.rank_per_point.push_back(spec.rank());
    diag.rank_counts[spec.rank()]++;
  }
  if (probes.empty()) diag.min_eigenvalue = 0.0;
  return diag;
}

}  // namespace qfigeo
