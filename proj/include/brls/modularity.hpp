#pragma once

#include "brls/problem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace brls {

enum class MatrixClass { Orthogonal, Acute, Obtuse, General };

inline const char* to_string(MatrixClass c) {
  switch (c) {
    case MatrixClass::Orthogonal: return "orthogonal";
    case MatrixClass::Acute: return "acute";
    case MatrixClass::Obtuse: return "obtuse";
    case MatrixClass::General: return "general";
  }
  return "?";
}

struct ModularityClass {
  MatrixClass verdict = MatrixClass::Orthogonal;
  MatrixXd angle_matrix;      // theta_ij in [0, pi], zeros on the diagonal
  double min_offdiag = 0.0;   // extreme off-diagonal inner products c_i'c_j
  double max_offdiag = 0.0;   // (both 0 when n < 2)
};

/// Default classification tolerance: strict for exact data, forgiving for
/// file-roundtripped data.
inline double default_classify_tol(const MatrixXd& C) {
  double max_sq = 0.0;
  for (int i = 0; i < C.cols(); ++i) max_sq = std::max(max_sq, C.col(i).squaredNorm());
  return 1e-10 * max_sq;
}

/// Column angle theta_ij = arccos(c_i'c_j / (||c_i|| ||c_j||)). Reporting
/// only; classification works on the inner products directly.
inline double angle_of(const MatrixXd& C, int i, int j) {
  if (i < 0 || j < 0 || i >= C.cols() || j >= C.cols())
    throw std::invalid_argument("angle_of: column index out of range");
  const double ni = C.col(i).norm(), nj = C.col(j).norm();
  if (ni == 0.0 || nj == 0.0)
    throw std::invalid_argument("angle_of: zero column");
  const double cosine = std::clamp(C.col(i).dot(C.col(j)) / (ni * nj), -1.0, 1.0);
  return std::acos(cosine);
}

/// Classifies C by the signs of the off-diagonal entries of C'C. An inner
/// product p counts as nonnegative if p >= -tol and nonpositive if p <= tol;
/// orthogonal means |p| <= tol for every pair. tol < 0 selects the default.
inline ModularityClass classify(const MatrixXd& C, double tol = -1.0) {
  const int n = static_cast<int>(C.cols());
  for (int i = 0; i < n; ++i)
    if (C.col(i).squaredNorm() == 0.0)
      throw std::invalid_argument("classify: column " + std::to_string(i + 1) + " is zero");
  if (tol < 0) tol = default_classify_tol(C);

  ModularityClass out;
  out.angle_matrix = MatrixXd::Zero(n, n);
  if (n < 2) {
    out.verdict = MatrixClass::Orthogonal;
    return out;
  }

  bool first = true;
  bool all_nonneg = true, all_nonpos = true;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double p = C.col(i).dot(C.col(j));
      if (first) {
        out.min_offdiag = out.max_offdiag = p;
        first = false;
      } else {
        out.min_offdiag = std::min(out.min_offdiag, p);
        out.max_offdiag = std::max(out.max_offdiag, p);
      }
      all_nonneg = all_nonneg && p >= -tol;
      all_nonpos = all_nonpos && p <= tol;
      const double a = angle_of(C, i, j);
      out.angle_matrix(i, j) = out.angle_matrix(j, i) = a;
    }
  }
  if (all_nonneg && all_nonpos)
    out.verdict = MatrixClass::Orthogonal;
  else if (all_nonneg)
    out.verdict = MatrixClass::Acute;
  else if (all_nonpos)
    out.verdict = MatrixClass::Obtuse;
  else
    out.verdict = MatrixClass::General;
  return out;
}

/// Dispatch variant that ignores identically-zero columns (they cannot
/// affect modularity: their inner products vanish). All-zero or empty C is
/// orthogonal, i.e. the inner problem is separable in y.
inline MatrixClass classify_for_dispatch(const MatrixXd& C, double tol = -1.0) {
  std::vector<int> nonzero;
  for (int i = 0; i < C.cols(); ++i)
    if (C.col(i).squaredNorm() != 0.0) nonzero.push_back(i);
  if (nonzero.size() < 2) return MatrixClass::Orthogonal;
  MatrixXd sub(C.rows(), static_cast<int>(nonzero.size()));
  for (int k = 0; k < static_cast<int>(nonzero.size()); ++k) sub.col(k) = C.col(nonzero[k]);
  return classify(sub, tol).verdict;
}

enum class ModularityVerdict { Supermodular, Submodular, Modular, Neither };

inline const char* to_string(ModularityVerdict v) {
  switch (v) {
    case ModularityVerdict::Supermodular: return "supermodular";
    case ModularityVerdict::Submodular: return "submodular";
    case ModularityVerdict::Modular: return "modular";
    case ModularityVerdict::Neither: return "neither";
  }
  return "?";
}

/// Exhaustive check of every marginal-difference inequality
///   h(y + e_i) - h(y) vs h(y' + e_i) - h(y')   for y <= y', i not in supp(y')
/// on h = Theta(x, .). Verification oracle only; n <= 16. tol <= 0 picks a
/// scale-aware default.
inline ModularityVerdict verify_modularity_bruteforce(const BrlsInstance& inst, const VectorXd& x,
                                                      double tol = -1.0) {
  const int n = inst.n();
  if (n > 16)
    throw std::invalid_argument("verify_modularity_bruteforce: n > 16 refused (enumeration)");

  const InnerQuadratic q = inner_quadratic(inst, x);
  const std::uint32_t count = 1u << n;
  std::vector<double> h(count);
  VectorXd y = VectorXd::Zero(n);
  double h_scale = 0.0;
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    for (int i = 0; i < n; ++i) y(i) = (mask >> i) & 1u ? 1.0 : 0.0;
    h[mask] = q.eval(y);
    h_scale = std::max(h_scale, std::abs(h[mask]));
  }
  if (tol <= 0) tol = 1e-9 * (1.0 + h_scale);

  double sub_violation = 0.0;  // submodularity wants the marginal to shrink as the set grows
  double sup_violation = 0.0;
  for (std::uint32_t upper = 0; upper < count; ++upper) {
    for (int i = 0; i < n; ++i) {
      const std::uint32_t bit = 1u << i;
      if (upper & bit) continue;
      const double d_upper = h[upper | bit] - h[upper];
      std::uint32_t sub = upper;
      for (;;) {
        const double d_lower = h[sub | bit] - h[sub];
        sub_violation = std::max(sub_violation, d_upper - d_lower);
        sup_violation = std::max(sup_violation, d_lower - d_upper);
        if (sub == 0) break;
        sub = (sub - 1) & upper;
      }
    }
  }

  const bool is_sub = sub_violation <= tol;
  const bool is_sup = sup_violation <= tol;
  if (is_sub && is_sup) return ModularityVerdict::Modular;
  if (is_sub) return ModularityVerdict::Submodular;
  if (is_sup) return ModularityVerdict::Supermodular;
  return ModularityVerdict::Neither;
}

}  // namespace brls
