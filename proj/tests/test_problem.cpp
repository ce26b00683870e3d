#include "brls/problem.hpp"

#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace brls;
using Catch::Approx;

namespace {

BrlsInstance identity_instance() {
  return BrlsInstance(ResidualMap::affine(MatrixXd::Identity(2, 2), VectorXd::Zero(2)),
                      MatrixXd::Identity(2, 2), FeasibleSet::box(2, -1.0, 1.0));
}

}  // namespace

TEST_CASE("theta_eval") {
  const BrlsInstance inst = identity_instance();
  VectorXd x(2), y(2);
  x << 0.6, 0.2;

  y << 0.0, 1.0;
  CHECK(theta_eval(inst, x, y) == Approx(0.5).epsilon(1e-12));

  // C = 0 reduces to classical least squares
  const BrlsInstance zero_c(ResidualMap::affine(MatrixXd::Identity(2, 2), VectorXd::Zero(2)),
                            MatrixXd::Zero(2, 2), FeasibleSet::box(2, -1.0, 1.0));
  y << 1.0, 1.0;
  CHECK(theta_eval(zero_c, x, y) == Approx(0.5 * x.squaredNorm()).epsilon(1e-12));

  // zero residual when C y = F(x)
  y = x;
  CHECK(theta_eval(inst, x, y) == Approx(0.0).margin(1e-15));

  VectorXd bad(3);
  bad.setZero();
  CHECK_THROWS_AS(theta_eval(inst, x, bad), std::invalid_argument);
  CHECK_THROWS_AS(theta_eval(inst, bad, y), std::invalid_argument);
}

TEST_CASE("theta_grad_x closed forms and finite differences") {
  const BrlsInstance inst = identity_instance();
  VectorXd x(2), y(2);
  x << 0.6, 0.2;
  y << 0.0, 1.0;
  const VectorXd g = theta_grad_x(inst, x, y);
  CHECK(g(0) == Approx(0.6).epsilon(1e-12));
  CHECK(g(1) == Approx(-0.8).epsilon(1e-12));

  // phase retrieval at x = 0 with b = 0: F(0) = 0 and the Jacobian vanishes
  const BrlsInstance phase(ResidualMap::phase_retrieval(MatrixXd::Identity(2, 2), VectorXd::Zero(2)),
                           MatrixXd::Identity(2, 2), FeasibleSet::box(2, -1.0, 1.0));
  CHECK(theta_grad_x(phase, VectorXd::Zero(2), VectorXd::Zero(2)).norm() == Approx(0.0).margin(1e-15));

  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    testing::AffineInstanceSpec spec;
    spec.cls = trial % 2 == 0 ? MatrixClass::Acute : MatrixClass::General;
    spec.m = 2 + static_cast<int>(rng.below(3));
    spec.n = 3;
    spec.r = 4;
    BrlsInstance rand_inst = trial % 3 == 2
        ? BrlsInstance(ResidualMap::phase_retrieval(testing::random_matrix(rng, 4, spec.m, 0.5),
                                                    testing::random_vector(rng, 4, 0.5)),
                       testing::random_class_matrix(rng, MatrixClass::Acute, 4, 3, 0.5),
                       FeasibleSet::box(spec.m, -1.0, 1.0))
        : testing::random_affine_instance(rng, spec);
    const VectorXd xr = testing::random_point_in_box(rng, rand_inst.X);
    const VectorXd yr = testing::random_binary(rng, rand_inst.n());
    const VectorXd grad = theta_grad_x(rand_inst, xr, yr);
    for (int d = 0; d < rand_inst.m(); ++d) {
      VectorXd hi = xr, lo = xr;
      hi(d) += 1e-6;
      lo(d) -= 1e-6;
      const double fd = (theta_eval(rand_inst, hi, yr) - theta_eval(rand_inst, lo, yr)) / 2e-6;
      CHECK(grad(d) == Approx(fd).margin(1e-5));
    }
  }
}

TEST_CASE("inner_quadratic") {
  MatrixXd C(2, 2);
  C << 1.0, 1.0, 0.0, 1.0;  // columns (1,0) and (1,1)
  const BrlsInstance inst(ResidualMap::affine(MatrixXd::Identity(2, 2), VectorXd::Zero(2)), C,
                          FeasibleSet::box(2, -1.0, 1.0));
  VectorXd x(2);
  x << 0.0, 0.0;
  const InnerQuadratic q = inner_quadratic(inst, x);
  CHECK(q.Sigma(0, 0) == Approx(1.0));
  CHECK(q.Sigma(0, 1) == Approx(1.0));
  CHECK(q.Sigma(1, 0) == Approx(1.0));
  CHECK(q.Sigma(1, 1) == Approx(2.0));

  const BrlsInstance ident = identity_instance();
  VectorXd x2(2);
  x2 << 0.6, 0.2;
  const InnerQuadratic q2 = inner_quadratic(ident, x2);
  CHECK(q2.u(0) == Approx(0.6));
  CHECK(q2.u(1) == Approx(0.2));
  CHECK(q2.c0 == Approx(0.2));

  const BrlsInstance zero_c(ResidualMap::affine(MatrixXd::Identity(2, 2), VectorXd::Zero(2)),
                            MatrixXd::Zero(2, 2), FeasibleSet::box(2, -1.0, 1.0));
  const InnerQuadratic q3 = inner_quadratic(zero_c, x2);
  CHECK(q3.Sigma.norm() == 0.0);
  CHECK(q3.u.norm() == 0.0);

  // identity with theta_eval at binary points, 1e-10 relative
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    testing::AffineInstanceSpec spec;
    spec.cls = MatrixClass::General;
    spec.n = 4;
    const BrlsInstance rnd = testing::random_affine_instance(rng, spec);
    const VectorXd xr = testing::random_point_in_box(rng, rnd.X);
    const InnerQuadratic qr = inner_quadratic(rnd, xr);
    for (int k = 0; k < 8; ++k) {
      const VectorXd yr = testing::random_binary(rng, rnd.n());
      const double direct = theta_eval(rnd, xr, yr);
      CHECK(qr.eval(yr) == Approx(direct).epsilon(1e-10));
    }
  }
}

TEST_CASE("hrls_to_brls change of variables") {
  {  // delta = 0.5, Chat = I: C = I, F(x) = x + 0.5
    const HrlsInstance h(ResidualMap::affine(MatrixXd::Identity(2, 2), VectorXd::Zero(2)),
                         MatrixXd::Identity(2, 2), 0.5, FeasibleSet::box(2, -1.0, 1.0));
    const BrlsInstance b = hrls_to_brls(h);
    CHECK((b.C - MatrixXd::Identity(2, 2)).norm() == Approx(0.0).margin(1e-15));
    VectorXd x(2);
    x << 0.3, -0.4;
    const VectorXd fx = b.F(x);
    CHECK(fx(0) == Approx(0.8));
    CHECK(fx(1) == Approx(0.1));
  }
  {  // delta = 0.1: the transformed vertex maximum reproduces 0.29
    const HrlsInstance h(ResidualMap::affine(MatrixXd::Identity(2, 2), VectorXd::Zero(2)),
                         MatrixXd::Identity(2, 2), 0.1, FeasibleSet::box(2, -1.0, 1.0));
    const BrlsInstance b = hrls_to_brls(h);
    VectorXd x(2);
    x << 0.6, 0.2;
    double best = 0.0;
    for (int mask = 0; mask < 4; ++mask) {
      VectorXd y(2);
      y << (mask & 1 ? 1.0 : 0.0), (mask & 2 ? 1.0 : 0.0);
      best = std::max(best, theta_eval(b, x, y));
    }
    CHECK(best == Approx(0.29).epsilon(1e-12));
  }
  {  // pointwise objective identity under the variable map, tol 1e-12
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
      const int m = 2, n = 3, r = 4;
      const double delta = rng.uniform(0.05, 0.8);
      const HrlsInstance h(ResidualMap::affine(testing::random_matrix(rng, r, m),
                                               testing::random_vector(rng, r)),
                           testing::random_matrix(rng, r, n), delta, FeasibleSet::box(m, -1.0, 1.0));
      const BrlsInstance b = hrls_to_brls(h);
      const VectorXd x = testing::random_point_in_box(rng, h.X);
      VectorXd z(n);
      for (int i = 0; i < n; ++i) z(i) = rng.uniform(-delta, delta);
      const double hrls_value = 0.5 * (h.Fhat(x) - h.Chat * z).squaredNorm();
      const VectorXd y = z / (2.0 * delta) + 0.5 * VectorXd::Ones(n);
      CHECK(theta_eval(b, x, y) == Approx(hrls_value).margin(1e-12));
    }
  }
  {  // z = 0 maps to y = 1/2
    const VectorXd y = VectorXd::Zero(3) / 0.2 + 0.5 * VectorXd::Ones(3);
    CHECK((y - 0.5 * VectorXd::Ones(3)).norm() == 0.0);
  }
}

TEST_CASE("label_model_to_brls") {
  const FeasibleSet X = FeasibleSet::box(2, -1.0, 1.0);
  const ResidualMap Fhat = ResidualMap::affine(MatrixXd::Identity(2, 2), VectorXd::Zero(2));
  VectorXd b(2);
  b << 0.0, 1.0;

  {  // I = {1, 2}: D = diag(1, -1), columns e1 and -e2
    const BrlsInstance inst = label_model_to_brls(LabelUncertaintyModel(Fhat, b, {0, 1}, X));
    CHECK(inst.n() == 2);
    CHECK(inst.C(0, 0) == Approx(1.0));
    CHECK(inst.C(1, 0) == Approx(0.0));
    CHECK(inst.C(0, 1) == Approx(0.0));
    CHECK(inst.C(1, 1) == Approx(-1.0));
  }
  {  // I = {1}: single column e1
    const BrlsInstance inst = label_model_to_brls(LabelUncertaintyModel(Fhat, b, {0}, X));
    CHECK(inst.n() == 1);
    CHECK(inst.C(0, 0) == Approx(1.0));
    CHECK(inst.C(1, 0) == Approx(0.0));
  }
  {  // I empty: classical least squares with n = 0
    const BrlsInstance inst = label_model_to_brls(LabelUncertaintyModel(Fhat, b, {}, X));
    CHECK(inst.n() == 0);
    VectorXd x(2);
    x << 0.4, 0.9;
    CHECK(theta_eval(inst, x, VectorXd(0)) ==
          Approx(0.5 * (x - b).squaredNorm()).epsilon(1e-12));
  }
  {  // objective agrees with the diagonal-matrix formulation on the full model
    Rng rng(3);
    const BrlsInstance inst = label_model_to_brls(LabelUncertaintyModel(Fhat, b, {0, 1}, X));
    for (int t = 0; t < 20; ++t) {
      const VectorXd x = testing::random_vector(rng, 2);
      const VectorXd y = testing::random_binary(rng, 2);
      MatrixXd D = MatrixXd::Zero(2, 2);
      D(0, 0) = 1.0 - 2.0 * b(0);
      D(1, 1) = 1.0 - 2.0 * b(1);
      const double expected = 0.5 * (x - (b + D * y)).squaredNorm();
      CHECK(theta_eval(inst, x, y) == Approx(expected).margin(1e-12));
    }
  }
  VectorXd bad(2);
  bad << 0.5, 1.0;
  CHECK_THROWS_AS(LabelUncertaintyModel(Fhat, bad, {0}, X), std::invalid_argument);
}

TEST_CASE("project and diameter") {
  const FeasibleSet box = FeasibleSet::box(2, -1.0, 1.0);
  VectorXd x(2);
  x << 2.0, 0.5;
  VectorXd p = project(box, x);
  CHECK(p(0) == Approx(1.0));
  CHECK(p(1) == Approx(0.5));

  const FeasibleSet ball = FeasibleSet::ball(VectorXd::Zero(2), 1.0);
  x << 3.0, 4.0;
  p = project(ball, x);
  CHECK(p(0) == Approx(0.6));
  CHECK(p(1) == Approx(0.8));

  x << 0.2, -0.3;
  CHECK((project(box, x) - x).norm() == 0.0);
  CHECK((project(ball, x) - x).norm() == 0.0);

  CHECK(diameter(FeasibleSet::box(1, -1.0, 1.0)) == Approx(2.0));
  CHECK(diameter(FeasibleSet::ball(VectorXd::Zero(3), 3.0)) == Approx(6.0));
  CHECK(diameter(FeasibleSet::box(4, 0.0, 1.0)) == Approx(2.0));

  // idempotent and 1-Lipschitz on sampled pairs
  Rng rng(13);
  for (const FeasibleSet& X : {box, ball}) {
    for (int t = 0; t < 200; ++t) {
      const VectorXd a = testing::random_vector(rng, 2, 5.0);
      const VectorXd c = testing::random_vector(rng, 2, 5.0);
      const VectorXd pa = project(X, a);
      const VectorXd pc = project(X, c);
      CHECK(X.contains(pa, 1e-12));
      CHECK((project(X, pa) - pa).norm() <= 1e-14);
      CHECK((pa - pc).norm() <= (a - c).norm() + 1e-12);
    }
  }

  CHECK_THROWS_AS(FeasibleSet::box(VectorXd::Ones(2), VectorXd::Zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(FeasibleSet::ball(VectorXd::Zero(2), 0.0), std::invalid_argument);
}

TEST_CASE("lipschitz_estimates") {
  {  // A = I (1x1), C = (2), X = [-1,1]: L = 3, ell = 1
    MatrixXd A(1, 1), C(1, 1);
    A << 1.0;
    C << 2.0;
    const BrlsInstance inst(ResidualMap::affine(A, VectorXd::Zero(1)), C,
                            FeasibleSet::box(1, -1.0, 1.0));
    const LipschitzEstimates est = lipschitz_estimates(inst);
    CHECK(est.L == Approx(3.0).epsilon(1e-12));
    CHECK(est.ell == Approx(1.0).epsilon(1e-12));

    // L dominates every sampled gradient norm
    Rng rng(1);
    for (int t = 0; t < 1000; ++t) {
      VectorXd x(1), y(1);
      x << rng.uniform(-1.0, 1.0);
      y << (rng.uniform() < 0.5 ? 0.0 : 1.0);
      CHECK(theta_grad_x(inst, x, y).norm() <= est.L + 1e-12);
    }
  }
  {  // A = 0: constant residual map, L collapses to zero
    const BrlsInstance inst(ResidualMap::affine(MatrixXd::Zero(2, 2), VectorXd::Ones(2)),
                            MatrixXd::Identity(2, 2), FeasibleSet::box(2, -1.0, 1.0));
    CHECK(lipschitz_estimates(inst).L == Approx(0.0).margin(1e-15));
  }
  {  // ball of radius 0.5 around the origin, A = I, C = 0
    const BrlsInstance inst(ResidualMap::affine(MatrixXd::Identity(2, 2), VectorXd::Zero(2)),
                            MatrixXd::Zero(2, 0), FeasibleSet::ball(VectorXd::Zero(2), 0.5));
    const LipschitzEstimates est = lipschitz_estimates(inst);
    CHECK(est.L == Approx(0.5).epsilon(1e-12));
    CHECK(est.ell == Approx(1.0).epsilon(1e-12));
  }
  {  // phase retrieval: certified bounds dominate sampled gradients
    Rng rng(2);
    const MatrixXd A = testing::random_matrix(rng, 4, 2, 0.6);
    const VectorXd b = testing::random_vector(rng, 4, 0.4);
    const MatrixXd C = make_acute_matrix(rng, 4, 3, 0.5);
    const BrlsInstance inst(ResidualMap::phase_retrieval(A, b), C, FeasibleSet::box(2, -1.0, 1.0));
    const LipschitzEstimates est = lipschitz_estimates(inst);
    for (int t = 0; t < 1000; ++t) {
      const VectorXd x = testing::random_point_in_box(rng, inst.X);
      const VectorXd y = testing::random_binary(rng, 3);
      CHECK(theta_grad_x(inst, x, y).norm() <= est.L + 1e-9);
    }
  }
  {  // custom maps must supply their constants
    auto eval = [](const VectorXd& x) { return x; };
    auto jac = [](const VectorXd& x) {
      return MatrixXd(MatrixXd::Identity(x.size(), x.size()));
    };
    const BrlsInstance no_constants(ResidualMap::custom(2, 2, eval, jac), MatrixXd::Identity(2, 2),
                                    FeasibleSet::box(2, -1.0, 1.0));
    CHECK_THROWS_AS(lipschitz_estimates(no_constants), std::invalid_argument);
    const BrlsInstance with_constants(
        ResidualMap::custom(2, 2, eval, jac, std::make_pair(4.0, 1.0)), MatrixXd::Identity(2, 2),
        FeasibleSet::box(2, -1.0, 1.0));
    CHECK(lipschitz_estimates(with_constants).L == Approx(4.0));
  }
}

TEST_CASE("theta is nonnegative everywhere") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    testing::AffineInstanceSpec spec;
    spec.cls = MatrixClass::General;
    const BrlsInstance inst = testing::random_affine_instance(rng, spec);
    const VectorXd x = testing::random_point_in_box(rng, inst.X);
    VectorXd y(inst.n());
    for (int i = 0; i < inst.n(); ++i) y(i) = rng.uniform();
    CHECK(theta_eval(inst, x, y) >= 0.0);
  }
}
