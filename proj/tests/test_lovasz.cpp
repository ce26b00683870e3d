#include "brls/lovasz.hpp"

#include "brls/oracle.hpp"
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

TEST_CASE("chain_decompose") {
  {  // tie broken by ascending index
    VectorXd y(2);
    y << 0.5, 0.5;
    const ChainDecomposition d = chain_decompose(y);
    CHECK(d.order == std::vector<int>{0, 1});
    CHECK(d.weights(0) == Approx(0.5));
    CHECK(d.weights(1) == Approx(0.0).margin(1e-15));
    CHECK(d.weights(2) == Approx(0.5));
  }
  {  // vertex: single chain point with weight 1
    VectorXd y(3);
    y << 1.0, 0.0, 1.0;
    const ChainDecomposition d = chain_decompose(y);
    double weight_at_vertex = 0.0;
    for (int k = 0; k <= 3; ++k)
      if ((d.chain_point(k) - y).norm() == 0.0) weight_at_vertex += d.weights(k);
    CHECK(weight_at_vertex == Approx(1.0));
  }
  {
    VectorXd y(2);
    y << 1.0, 0.3;
    const ChainDecomposition d = chain_decompose(y);
    CHECK(d.order == std::vector<int>{0, 1});
    CHECK(d.weights(0) == Approx(0.0).margin(1e-15));
    CHECK(d.weights(1) == Approx(0.7));
    CHECK(d.weights(2) == Approx(0.3));
  }
  {  // reconstruction identity and weight simplex on random points
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 1 + static_cast<int>(rng.below(7));
      VectorXd y(n);
      for (int i = 0; i < n; ++i) y(i) = rng.uniform();
      const ChainDecomposition d = chain_decompose(y);
      CHECK(d.weights.minCoeff() >= -1e-15);
      CHECK(d.weights.sum() == Approx(1.0).margin(1e-12));
      VectorXd rebuilt = VectorXd::Zero(n);
      for (int k = 0; k <= n; ++k) rebuilt += d.weights(k) * d.chain_point(k);
      CHECK((rebuilt - y).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
  }
  VectorXd bad(2);
  bad << 1.2, 0.0;
  CHECK_THROWS_AS(chain_decompose(bad), std::invalid_argument);
}

TEST_CASE("lovasz_eval") {
  const BrlsInstance inst = identity_instance();
  VectorXd x(2), y(2);
  x << 0.6, 0.2;
  y << 0.5, 0.5;
  CHECK(lovasz_eval(inst, x, y) == Approx(0.3).epsilon(1e-12));

  // vertex agreement on all subsets
  for (int mask = 0; mask < 4; ++mask) {
    VectorXd v(2);
    v << (mask & 1 ? 1.0 : 0.0), (mask & 2 ? 1.0 : 0.0);
    CHECK(lovasz_eval(inst, x, v) == Approx(theta_eval(inst, x, v)).margin(1e-12));
  }

  // n = 1 is linear interpolation between the two vertex values
  MatrixXd A(1, 1), C(1, 1);
  A << 1.0;
  C << 0.7;
  const BrlsInstance line(ResidualMap::affine(A, VectorXd::Zero(1)), C,
                          FeasibleSet::box(1, -1.0, 1.0));
  VectorXd x1(1), y0(1), y1(1), t(1);
  x1 << 0.4;
  y0 << 0.0;
  y1 << 1.0;
  t << 0.3;
  const double expected =
      0.7 * theta_eval(line, x1, y0) + 0.3 * theta_eval(line, x1, y1);
  CHECK(lovasz_eval(line, x1, t) == Approx(expected).epsilon(1e-12));
}

TEST_CASE("vertex agreement on random instances") {
  Rng rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    testing::AffineInstanceSpec spec;
    spec.cls = static_cast<MatrixClass>(trial % 3);  // orthogonal/acute/obtuse
    spec.n = 2 + static_cast<int>(rng.below(5));
    spec.r = spec.n + 2;
    const BrlsInstance inst = testing::random_affine_instance(rng, spec);
    const VectorXd x = testing::random_point_in_box(rng, inst.X);
    for (std::uint32_t mask = 0; mask < (1u << inst.n()); ++mask) {
      VectorXd v(inst.n());
      for (int i = 0; i < inst.n(); ++i) v(i) = (mask >> i) & 1u ? 1.0 : 0.0;
      CHECK(lovasz_eval(inst, x, v) ==
            Approx(theta_eval(inst, x, v)).margin(1e-10 * (1.0 + theta_eval(inst, x, v))));
    }
  }
}

TEST_CASE("extension is concave in y when C is acute") {
  Rng rng(59);
  testing::AffineInstanceSpec spec;
  spec.cls = MatrixClass::Acute;
  spec.n = 5;
  spec.r = 6;
  const BrlsInstance inst = testing::random_affine_instance(rng, spec);
  const VectorXd x = testing::random_point_in_box(rng, inst.X);
  for (int trial = 0; trial < 1000; ++trial) {
    VectorXd a(inst.n()), b(inst.n());
    for (int i = 0; i < inst.n(); ++i) {
      a(i) = rng.uniform();
      b(i) = rng.uniform();
    }
    const double t = rng.uniform();
    const VectorXd mid = t * a + (1.0 - t) * b;
    const double lhs = lovasz_eval(inst, x, mid);
    const double rhs = t * lovasz_eval(inst, x, a) + (1.0 - t) * lovasz_eval(inst, x, b);
    CHECK(lhs >= rhs - 1e-9);
  }
}

TEST_CASE("extension is convex in x for fixed y when F is affine") {
  Rng rng(61);
  testing::AffineInstanceSpec spec;
  spec.cls = MatrixClass::Acute;
  spec.m = 3;
  const BrlsInstance inst = testing::random_affine_instance(rng, spec);
  for (int trial = 0; trial < 300; ++trial) {
    VectorXd y(inst.n());
    for (int i = 0; i < inst.n(); ++i) y(i) = rng.uniform();
    const VectorXd x1 = testing::random_point_in_box(rng, inst.X);
    const VectorXd x2 = testing::random_point_in_box(rng, inst.X);
    const double t = rng.uniform();
    const double lhs = lovasz_eval(inst, t * x1 + (1.0 - t) * x2, y);
    const double rhs = t * lovasz_eval(inst, x1, y) + (1.0 - t) * lovasz_eval(inst, x2, y);
    CHECK(lhs <= rhs + 1e-9);
  }
}

TEST_CASE("value functions agree and the extension never exceeds phi") {
  Rng rng(67);
  for (int trial = 0; trial < 5; ++trial) {
    testing::AffineInstanceSpec spec;
    spec.cls = MatrixClass::Acute;
    spec.n = 4;
    const BrlsInstance inst = testing::random_affine_instance(rng, spec);
    const VectorXd x = testing::random_point_in_box(rng, inst.X);
    const ValueAgreement agree = value_functions_agree(inst, x);
    CHECK(agree.lovasz_at_argmax == Approx(agree.phi).margin(1e-9));
    for (int s = 0; s < 10000; ++s) {
      VectorXd y(inst.n());
      for (int i = 0; i < inst.n(); ++i) y(i) = rng.uniform();
      CHECK(lovasz_eval(inst, x, y) <= agree.phi + 1e-9);
    }
  }

  {  // C = 0: the extension is constant and phi = 1/2 ||F||^2
    const BrlsInstance inst(ResidualMap::affine(MatrixXd::Identity(2, 2), VectorXd::Zero(2)),
                            MatrixXd::Zero(2, 2), FeasibleSet::box(2, -1.0, 1.0));
    VectorXd x(2);
    x << 0.3, -0.8;
    Rng rng2(5);
    for (int s = 0; s < 100; ++s) {
      VectorXd y(2);
      y << rng2.uniform(), rng2.uniform();
      CHECK(lovasz_eval(inst, x, y) == Approx(0.5 * x.squaredNorm()).margin(1e-12));
    }
  }
}

TEST_CASE("worked saddle example: midpoint extension and saddle point") {
  const BrlsInstance inst = testing::shifted_square_example();

  // Theta^L(x, 1/2) = ((x-1)^2 + (x+1)^2) / 2, minimized at x* = 0 with value 1
  Rng rng(71);
  for (int t = 0; t < 50; ++t) {
    VectorXd x(1), half(1);
    x << rng.uniform(-1.0, 1.0);
    half << 0.5;
    const double expected = 0.5 * ((x(0) - 1.0) * (x(0) - 1.0) + (x(0) + 1.0) * (x(0) + 1.0));
    CHECK(lovasz_eval(inst, x, half) == Approx(expected).margin(1e-12));
  }

  VectorXd x_star(1), half(1);
  x_star << 0.0;
  half << 0.5;
  const double at_saddle = lovasz_eval(inst, x_star, half);
  CHECK(at_saddle == Approx(1.0).margin(1e-12));
  // saddle inequalities of the extension at (0, 1/2)
  for (int t = 0; t <= 100; ++t) {
    VectorXd y(1), x(1);
    y << t / 100.0;
    x << -1.0 + 2.0 * t / 100.0;
    CHECK(lovasz_eval(inst, x_star, y) <= at_saddle + 1e-12);
    CHECK(lovasz_eval(inst, x, half) >= at_saddle - 1e-12);
  }
}
