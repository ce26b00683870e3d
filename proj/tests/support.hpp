#pragma once

// Shared instance generators for the test and acceptance suites.

#include "brls/experiments.hpp"
#include "brls/problem.hpp"
#include "brls/rng.hpp"

namespace brls::testing {

inline MatrixXd random_class_matrix(Rng& rng, MatrixClass cls, int r, int n, double scale = 1.0) {
  switch (cls) {
    case MatrixClass::Acute: return make_acute_matrix(rng, r, n, scale);
    case MatrixClass::Obtuse: return make_obtuse_matrix(rng, r, n, scale);
    case MatrixClass::Orthogonal: return make_orthogonal_matrix(rng, r, n, scale);
    case MatrixClass::General: return make_general_matrix(rng, r, n, scale);
  }
  throw std::logic_error("unreachable");
}

inline MatrixXd random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
  MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = scale * rng.normal();
  return M;
}

inline VectorXd random_vector(Rng& rng, int dim, double scale = 1.0) {
  VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = scale * rng.normal();
  return v;
}

inline VectorXd random_point_in_box(Rng& rng, const FeasibleSet& X) {
  VectorXd x(X.dim());
  for (int i = 0; i < X.dim(); ++i) x(i) = rng.uniform(X.lo()(i), X.hi()(i));
  return x;
}

inline VectorXd random_binary(Rng& rng, int n) {
  VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = rng.uniform() < 0.5 ? 1.0 : 0.0;
  return y;
}

struct AffineInstanceSpec {
  MatrixClass cls = MatrixClass::Acute;
  int m = 2;
  int n = 4;
  int r = 5;
  double box_halfwidth = 1.0;
  double a_scale = 0.5;
  double c_scale = 0.6;
};

inline BrlsInstance random_affine_instance(Rng& rng, const AffineInstanceSpec& spec) {
  MatrixXd A = random_matrix(rng, spec.r, spec.m, spec.a_scale);
  VectorXd b0 = random_vector(rng, spec.r, spec.a_scale);
  MatrixXd C = random_class_matrix(rng, spec.cls, spec.r, spec.n, spec.c_scale);
  return BrlsInstance(ResidualMap::affine(std::move(A), std::move(b0)), std::move(C),
                      FeasibleSet::box(spec.m, -spec.box_halfwidth, spec.box_halfwidth));
}

/// The worked 1-D saddle example in the library's [0,1] convention: the
/// shifted-domain objective (x - y)^2 with y in {-1, 1} maps to an affine
/// instance with A = sqrt(2), b0 = sqrt(2), C = 2 sqrt(2), X = [-1, 1], so
/// Theta(x, 0) = (x + 1)^2, Theta(x, 1) = (x - 1)^2 and the minimax value at
/// the optimum x* = 0 is exactly 1.
inline BrlsInstance shifted_square_example() {
  const double root2 = std::sqrt(2.0);
  MatrixXd A(1, 1), C(1, 1);
  A << root2;
  C << 2.0 * root2;
  VectorXd b0(1);
  b0 << root2;
  return BrlsInstance(ResidualMap::affine(A, b0), C, FeasibleSet::box(1, -1.0, 1.0));
}

}  // namespace brls::testing
