#include <doctest.h>

#include <algorithm>
#include <random>

#include "qfigeo/discontinuity.hpp"
#include "support.hpp"

using namespace qfigeo;
using test::max_abs;
using test::thrown_code;

namespace {

RealVector pt1(double x) { return (RealVector(1) << x).finished(); }
RealVector pt2(double x, double y) { return (RealVector(2) << x, y).finished(); }

CoordinateMap sqrt_second_coordinate() {
  CoordinateMap map;
  map.n_outer = 2;
  map.n_inner = 2;
  map.outer_domain = box_domain({{0.0, M_PI}, {0.0, 0.999}});
  map.map = [](const RealVector& x) { return pt2(x[0], x[1] * x[1]); };
  map.jacobian = [](const RealVector& x) {
    RealMatrix j = RealMatrix::Zero(2, 2);
    j(0, 0) = 1.0;
    j(1, 1) = 2.0 * x[1];
    return j;
  };
  map.hessian = [](const RealVector&, int i) {
    RealMatrix h = RealMatrix::Zero(2, 2);
    if (i == 1) h(1, 1) = 2.0;
    return h;
  };
  return map;
}

}  // namespace

TEST_CASE("vanishing branch hessians of the worked examples") {
  SUBCASE("purity family at 0: d^2(sin^2)/d eps^2 = 2") {
    const DerivativeBundle b = evaluate_bundle(builtin_family("example1"), pt1(0.0));
    const auto branches = vanishing_branch_hessians(b);
    REQUIRE(branches.size() == 1);
    CHECK(std::abs(branches[0].hessian(0, 0) - 2.0) < 1e-10);
  }
  SUBCASE("two-parameter example at the origin: identity") {
    const DerivativeBundle b = evaluate_bundle(builtin_family("example2"), pt2(0.0, 0.0));
    const auto branches = vanishing_branch_hessians(b);
    REQUIRE(branches.size() == 1);
    CHECK(max_abs(branches[0].hessian - RealMatrix::Identity(2, 2)) < 1e-10);
  }
  SUBCASE("regularized example in raw (eps, nu): diag(2, 0)") {
    const DerivativeBundle b =
        evaluate_bundle(builtin_family("example3-regularized"), pt2(0.0, 0.0));
    const auto branches = vanishing_branch_hessians(b);
    REQUIRE(branches.size() == 1);
    RealMatrix expected = RealMatrix::Zero(2, 2);
    expected(0, 0) = 2.0;
    CHECK(max_abs(branches[0].hessian - expected) < 1e-10);
  }
  SUBCASE("after substituting nu = nu1^2: diag(2, 1)") {
    const StateFamily outer =
        reparametrize(builtin_family("example3-regularized"), sqrt_second_coordinate());
    const DerivativeBundle b = evaluate_bundle(outer, pt2(0.0, 0.0));
    const auto branches = vanishing_branch_hessians(b);
    REQUIRE(branches.size() == 1);
    RealMatrix expected = RealMatrix::Zero(2, 2);
    expected(0, 0) = 2.0;
    expected(1, 1) = 1.0;
    CHECK(max_abs(branches[0].hessian - expected) < 1e-10);
  }
  SUBCASE("no branches at full rank") {
    const DerivativeBundle b = evaluate_bundle(builtin_family("example1"), pt1(1.0));
    CHECK(vanishing_branch_hessians(b).empty());
  }
}

TEST_CASE("degenerate kernels need a direction and match their ground truth") {
  const StateFamily fam = make_random_rank_deficient(4, 555, 2, 2);
  const auto truth = random_rank_deficient_hessians(4, 555, 2, 2);
  const DerivativeBundle b = evaluate_bundle(fam, pt2(0.0, 0.0));
  REQUIRE(b.spectrum.zero_set.size() == 2);

  CHECK(thrown_code([&] { vanishing_branch_hessians(b); }) ==
        Errc::degenerate_kernel_needs_direction);

  const DirectionVector u = DirectionVector::unit(pt2(0.6, -0.8));
  const auto branches = vanishing_branch_hessians(b, u);
  REQUIRE(branches.size() == 2);

  // Rotated branches sort by contracted curvature; compare against the
  // construction-time Hessians in the same order.
  std::vector<double> expected = {u.u.dot(truth[0] * u.u), u.u.dot(truth[1] * u.u)};
  std::vector<const RealMatrix*> order = {&truth[0], &truth[1]};
  if (expected[0] > expected[1]) std::swap(order[0], order[1]);
  for (int a = 0; a < 2; ++a) {
    CHECK(max_abs(branches[a].hessian - *order[a]) < 1e-8);
  }

  RealMatrix total = RealMatrix::Zero(2, 2);
  for (const auto& branch : branches) total += branch.hessian;
  CHECK(max_abs(total - kernel_hessian_sum(b).values) < 1e-6);

  const auto fitted = track_branch_curvatures(fam, pt2(0.0, 0.0), u);
  std::sort(expected.begin(), expected.end());
  REQUIRE(fitted.size() == 2);
  CHECK(std::abs(fitted[0] - expected[0]) < 1e-4);
  CHECK(std::abs(fitted[1] - expected[1]) < 1e-4);
}

TEST_CASE("jump of the two-parameter example") {
  const DerivativeBundle b = evaluate_bundle(builtin_family("example2"), pt2(0.0, 0.0));

  SUBCASE("along e2 the first element drops by 2") {
    const JumpReport report = jump(b, DirectionVector::axis(2, 1));
    CHECK(std::abs(report.delta.values(0, 0) - (-2.0)) < 1e-12);
    CHECK(std::abs(report.delta.values(1, 1)) < 1e-12);
    REQUIRE(report.contributing.size() == 1);
    CHECK(report.contributing[0].curvature == doctest::Approx(1.0));
  }
  SUBCASE("along e1 the first element is continuous") {
    const JumpReport report = jump(b, DirectionVector::axis(2, 0));
    CHECK(std::abs(report.delta.values(0, 0)) < 1e-12);
    CHECK(std::abs(report.delta.values(1, 1) - (-2.0)) < 1e-12);
  }
  SUBCASE("generic direction reproduces 2(u1^2/(u1^2+u2^2) - 1)") {
    const DirectionVector u = DirectionVector::unit(pt2(0.3, 0.7));
    const JumpReport report = jump(b, u);
    const double expected = 2.0 * (u.u[0] * u.u[0] - 1.0);
    CHECK(std::abs(report.delta.values(0, 0) - expected) < 1e-12);
  }
}

TEST_CASE("jump vanishes at full rank") {
  const DerivativeBundle b = evaluate_bundle(builtin_family("example1"), pt1(0.5));
  const JumpReport report = jump(b, DirectionVector::axis(1, 0));
  CHECK(max_abs(report.delta.values) == 0.0);
  CHECK(report.contributing.empty());
  CHECK(report.excluded.empty());
}

TEST_CASE("flat directions are excluded and reported") {
  // In raw (eps, nu) coordinates the branch Hessian is diag(2, 0); the
  // nu axis has zero curvature and must be excluded, not divided by.
  const DerivativeBundle b =
      evaluate_bundle(builtin_family("example3-regularized"), pt2(0.0, 0.0));
  const JumpReport report = jump(b, DirectionVector::axis(2, 1));
  CHECK(max_abs(report.delta.values) == 0.0);
  REQUIRE(report.excluded.size() == 1);
  CHECK(report.contributing.empty());
}

TEST_CASE("directional limits confirm the jump formula") {
  SUBCASE("example1 at 0: H tends to 4 = Hc") {
    const DirectionalLimit lim =
        directional_limit(builtin_family("example1"), pt1(0.0), DirectionVector::axis(1, 0));
    CHECK(std::abs(lim.limit(0, 0) - 4.0) < 1e-3);
    CHECK(lim.residual < 1e-3);
  }
  SUBCASE("example2 along e2: Hc^11 tends to 0 = 2 + (-2)") {
    const DirectionalLimit lim =
        directional_limit(builtin_family("example2"), pt2(0.0, 0.0), DirectionVector::axis(2, 1));
    CHECK(std::abs(lim.limit(0, 0)) < 1e-3);
    CHECK(std::abs(lim.prediction(0, 0)) < 1e-9);
    CHECK(lim.residual < 1e-3);
  }
  SUBCASE("constant family: limit is zero") {
    const DirectionalLimit lim =
        directional_limit(make_constant_family(2), pt1(0.0), DirectionVector::axis(1, 0));
    CHECK(max_abs(lim.limit) < 1e-12);
  }
  SUBCASE("ten seeded rank-deficient families satisfy the jump consistency") {
    for (int i = 0; i < 10; ++i) {
      const Eigen::Index dim = 2 + (i % 4);
      const StateFamily fam = make_random_rank_deficient(dim, 3000 + i);
      const DirectionVector u = DirectionVector::unit(pt2(1.0, 0.4 - 0.08 * i));
      const DirectionalLimit lim = directional_limit(fam, pt2(0.0, 0.0), u);
      CAPTURE(fam.name());
      CHECK(lim.residual < 1e-3);
    }
  }
  SUBCASE("single-parameter families approach Hc from both sides") {
    // Interior rank-change point of the purity family; H along +e1 and -e1
    // both tend to Hc = 4 even though H itself is 0 on the point.
    const StateFamily fam = builtin_family("example1");
    for (double sign : {1.0, -1.0}) {
      const DirectionalLimit lim =
          directional_limit(fam, pt1(M_PI / 2.0), DirectionVector::unit(pt1(sign)));
      CHECK(std::abs(lim.limit(0, 0) - 4.0) < 1e-3);
      CHECK(lim.residual < 1e-3);
    }
  }
  SUBCASE("oscillating second derivative diverges") {
    // Schedule stays above the zero-tolerance band of eps^4 sin^2(1/eps).
    CHECK(thrown_code([] {
            directional_limit(builtin_family("fig2-pathological"), pt1(0.0),
                              DirectionVector::axis(1, 0), {2e-1, 1e-1, 5e-2, 2.5e-2, 1.25e-2});
          }) == Errc::extrapolation_diverged);
  }
}

TEST_CASE("continuity verdicts") {
  SUBCASE("example2 at the origin") {
    const DerivativeBundle b = evaluate_bundle(builtin_family("example2"), pt2(0.0, 0.0));
    const ContinuityVerdict along_e1 = continuity_verdict(b, 0);
    CHECK(along_e1.element_continuous(0, 0));
    CHECK_FALSE(along_e1.element_continuous(1, 1));
    const ContinuityVerdict along_e2 = continuity_verdict(b, 1);
    CHECK_FALSE(along_e2.element_continuous(0, 0));
    CHECK(std::abs(along_e2.delta(0, 0) + 2.0) < 1e-12);
    CHECK_FALSE(along_e2.h_continuous);  // the kernel Hessian sum is nonzero
  }
  SUBCASE("example1 at 0: Hc continuous in its single parameter, H is not") {
    const DerivativeBundle b = evaluate_bundle(builtin_family("example1"), pt1(0.0));
    const ContinuityVerdict verdict = continuity_verdict(b, 0);
    CHECK(verdict.element_continuous(0, 0));
    CHECK_FALSE(verdict.h_continuous);
    CHECK(std::abs(verdict.h_gap(0, 0) - 4.0) < 1e-10);
  }
  SUBCASE("full-rank points are continuous along every axis") {
    const DerivativeBundle b = evaluate_bundle(builtin_family("example2"), pt2(0.4, 0.3));
    for (int axis = 0; axis < 2; ++axis) {
      const ContinuityVerdict verdict = continuity_verdict(b, axis);
      CHECK(verdict.element_continuous.all());
      CHECK(verdict.h_continuous);
    }
  }
  SUBCASE("declared C2 violations are refused") {
    const StateFamily fam = builtin_family("fig2-pathological");
    const DerivativeBundle bad = evaluate_bundle(fam, pt1(0.0));
    CHECK(thrown_code([&] { continuity_verdict(bad, 0); }) == Errc::refused_pathological_point);
    const DerivativeBundle good = evaluate_bundle(fam, pt1(0.5));
    CHECK_NOTHROW(continuity_verdict(good, 0));
  }
}

TEST_CASE("regularize") {
  const StateFamily ex1 = builtin_family("example1");
  const DensityMatrix half = DensityMatrix::from_matrix(0.5 * ComplexMatrix::Identity(2, 2));

  SUBCASE("mixing with I/2 reproduces the regularized example family") {
    const StateFamily ex3 = builtin_family("example3-regularized");
    for (double nu : {0.04, 0.3}) {
      const StateFamily reg = regularize(ex1, half, nu);
      for (double eps : {0.1, 1.2}) {
        CHECK(max_abs(ComplexMatrix(reg.evaluate(pt1(eps)).matrix() -
                                    ex3.evaluate(pt2(eps, nu)).matrix())) < 1e-14);
      }
    }
  }
  SUBCASE("derivatives scale by (1 - nu)") {
    const StateFamily reg = regularize(ex1, half, 0.25);
    const DerivativeBundle a = evaluate_bundle(ex1, pt1(0.8));
    const DerivativeBundle b = evaluate_bundle(reg, pt1(0.8));
    CHECK(max_abs(ComplexMatrix(b.d1[0] - 0.75 * a.d1[0])) < 1e-14);
  }
  SUBCASE("regularized states stay full rank") {
    const StateFamily reg = regularize(ex1, half, 0.01);
    const EigenDecomposition spec = eigh(reg.evaluate(pt1(0.0)).matrix(), 0.0);
    CHECK(spec.eigenvalues.minCoeff() >= 0.01 * 0.5 - 1e-12);
  }
  SUBCASE("invalid nu") {
    CHECK(thrown_code([&] { regularize(ex1, half, 0.0); }) == Errc::invalid_nu);
    CHECK(thrown_code([&] { regularize(ex1, half, 1.0); }) == Errc::invalid_nu);
    CHECK(thrown_code([&] { regularize(ex1, half, -0.2); }) == Errc::invalid_nu);
  }
  SUBCASE("rank-deficient anchors are rejected") {
    ComplexMatrix pure = ComplexMatrix::Zero(2, 2);
    pure(0, 0) = 1.0;
    const DensityMatrix bad = DensityMatrix::from_matrix(pure);
    CHECK(thrown_code([&] { regularize(ex1, bad, 0.1); }) == Errc::rho0_not_full_rank);
  }
  SUBCASE("non-commuting anchors fail the co-diagonality check") {
    ComplexMatrix rotated(2, 2);
    rotated << 0.5, 0.2, 0.2, 0.5;
    const StateFamily reg = regularize(ex1, DensityMatrix::from_matrix(rotated), 0.1);
    CHECK(thrown_code([&] { reg.evaluate(pt1(0.3)); }) == Errc::invariant_violation);
  }
  SUBCASE("co-diagonal non-scalar anchors are accepted") {
    ComplexMatrix diag = ComplexMatrix::Zero(2, 2);
    diag(0, 0) = 0.3;
    diag(1, 1) = 0.7;
    const StateFamily reg = regularize(ex1, DensityMatrix::from_matrix(diag), 0.1);
    CHECK_NOTHROW(reg.evaluate(pt1(0.3)));
  }
}

TEST_CASE("regularization limit") {
  const StateFamily ex1 = builtin_family("example1");
  const DensityMatrix half = DensityMatrix::from_matrix(0.5 * ComplexMatrix::Identity(2, 2));
  const std::vector<double> schedule = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};

  SUBCASE("at pi/2 the limit is the discontinuous H = 0, plus 2 Hessians = Hc") {
    const RegularizationTrace trace =
        regularization_limit(ex1, pt1(M_PI / 2.0), half, schedule);
    CHECK(std::abs(trace.extrapolated_limit(0, 0)) < 1e-4);
    CHECK(std::abs(trace.hc_prediction(0, 0) - 4.0) < 1e-4);
    REQUIRE(trace.min_eigenvalues.size() == schedule.size());
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      CHECK(trace.min_eigenvalues[i] >= schedule[i] * 0.5 - 1e-12);
    }
  }
  SUBCASE("at a full-rank point the limit is H itself") {
    const RegularizationTrace trace =
        regularization_limit(ex1, pt1(M_PI / 4.0), half, schedule);
    CHECK(std::abs(trace.extrapolated_limit(0, 0) - 4.0) < 1e-6);
  }
  SUBCASE("constant family: limit 0") {
    const StateFamily fam = make_constant_family(2);
    const RegularizationTrace trace = regularization_limit(
        fam, pt1(0.0), half, schedule);
    CHECK(max_abs(trace.extrapolated_limit) < 1e-10);
  }
  SUBCASE("schedules must decrease and stay above the floor") {
    CHECK(thrown_code([&] {
            regularization_limit(ex1, pt1(0.1), half, {1e-2, 1e-1});
          }) == Errc::validation_error);
    CHECK(thrown_code([&] {
            regularization_limit(ex1, pt1(0.1), half, {1e-1, 1e-12});
          }) == Errc::validation_error);
  }
}

TEST_CASE("zeroth-order directional Taylor approximation") {
  const StateFamily raw = builtin_family("example3-regularized");
  const StateFamily good = reparametrize(raw, sqrt_second_coordinate());

  SUBCASE("raw nu coordinate gives the bad approximation 4") {
    const DerivativeBundle base = evaluate_bundle(raw, pt2(0.0, 0.0));
    const DirectionVector u = DirectionVector::unit(pt2(0.1, 0.04));
    const MetricMatrix approx = directional_taylor_zeroth(base, u);
    CHECK(approx.order() == 1);
    CHECK(std::abs(approx.values(0, 0) - 4.0) < 1e-9);
  }
  SUBCASE("sqrt(nu) coordinate gives 4 - 8/3") {
    const DerivativeBundle base = evaluate_bundle(good, pt2(0.0, 0.0));
    const DirectionVector u = DirectionVector::unit(pt2(0.1, 0.2));
    const MetricMatrix approx = directional_taylor_zeroth(base, u);
    CHECK(std::abs(approx.values(0, 0) - (4.0 - 8.0 / 3.0)) < 1e-9);
  }
  SUBCASE("directions without curvature keep the base value") {
    const DerivativeBundle base = evaluate_bundle(raw, pt2(0.0, 0.0));
    const MetricMatrix approx = directional_taylor_zeroth(base, DirectionVector::axis(2, 1));
    CHECK(std::abs(approx.values(0, 0) - 4.0) < 1e-9);
  }
}

TEST_CASE("eigenvalue tracking oracle on the worked examples") {
  SUBCASE("example1 at 0: curvature 2") {
    const auto fits = track_branch_curvatures(builtin_family("example1"), pt1(0.0),
                                              DirectionVector::axis(1, 0));
    REQUIRE(fits.size() == 1);
    CHECK(std::abs(fits[0] - 2.0) < 1e-4);
  }
  SUBCASE("example2 at the origin along e2: curvature 1") {
    const auto fits = track_branch_curvatures(builtin_family("example2"), pt2(0.0, 0.0),
                                              DirectionVector::axis(2, 1));
    REQUIRE(fits.size() == 1);
    CHECK(std::abs(fits[0] - 1.0) < 1e-4);
  }
  SUBCASE("example3 at the origin along eps: curvature 2") {
    const auto fits = track_branch_curvatures(builtin_family("example3-regularized"),
                                              pt2(0.0, 0.0), DirectionVector::axis(2, 0));
    REQUIRE(fits.size() == 1);
    CHECK(std::abs(fits[0] - 2.0) < 1e-4);
  }
}
