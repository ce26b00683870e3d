#pragma once

#include "brls/problem.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace brls {

/// Axis-aligned evaluation grid for the outer variable. Grid lines start at
/// the lower corner with the given pitch and the upper corner is always
/// included explicitly, so box-boundary optima are representable.
struct GridSpec {
  VectorXd lo, hi, pitch;
  long long max_points = 10'000'000;

  static GridSpec over(const FeasibleSet& X, double pitch) {
    GridSpec g;
    if (X.kind() == FeasibleSet::Kind::Box) {
      g.lo = X.lo();
      g.hi = X.hi();
    } else {
      g.lo = X.center().array() - X.radius();
      g.hi = X.center().array() + X.radius();
    }
    g.pitch = VectorXd::Constant(X.dim(), pitch);
    return g;
  }

  std::vector<std::vector<double>> axes() const {
    std::vector<std::vector<double>> out(lo.size());
    long long total = 1;
    for (int d = 0; d < lo.size(); ++d) {
      if (!(pitch(d) > 0)) throw std::invalid_argument("grid pitch must be > 0");
      const double span = hi(d) - lo(d);
      std::vector<double>& axis = out[d];
      const long long steps = static_cast<long long>(std::floor(span / pitch(d) + 1e-9));
      for (long long i = 0; i <= steps; ++i) axis.push_back(lo(d) + static_cast<double>(i) * pitch(d));
      if (axis.back() < hi(d) - 1e-12 * (1.0 + std::abs(span))) axis.push_back(hi(d));
      else axis.back() = hi(d);
      total *= static_cast<long long>(axis.size());
      if (total > max_points) throw std::invalid_argument("grid exceeds the 1e7 point guard");
    }
    return out;
  }
};

/// Exact value function phi(x) = max over {0,1}^n of Theta(x,y), evaluated
/// independently of the solver paths: C y is assembled from two half-mask
/// partial-sum tables and every vertex objective is computed directly.
/// n <= 25.
inline double phi_bruteforce(const BrlsInstance& inst, const VectorXd& x) {
  const int n = inst.n();
  if (n > 25) throw std::invalid_argument("phi_bruteforce: n > 25 refused (enumeration)");
  const VectorXd fx = inst.F(x);
  if (n == 0) return 0.5 * fx.squaredNorm();

  const int n_lo = n / 2, n_hi = n - n_lo;
  const std::uint32_t lo_count = 1u << n_lo, hi_count = 1u << n_hi;
  MatrixXd lo_sum = MatrixXd::Zero(inst.r(), lo_count);
  MatrixXd hi_sum = MatrixXd::Zero(inst.r(), hi_count);
  for (std::uint32_t mask = 1; mask < lo_count; ++mask) {
    const int bit = std::countr_zero(mask);
    lo_sum.col(mask) = lo_sum.col(mask ^ (1u << bit)) + inst.C.col(bit);
  }
  for (std::uint32_t mask = 1; mask < hi_count; ++mask) {
    const int bit = std::countr_zero(mask);
    hi_sum.col(mask) = hi_sum.col(mask ^ (1u << bit)) + inst.C.col(n_lo + bit);
  }

  double best = 0.0;
  bool first = true;
  VectorXd residual(inst.r());
  for (std::uint32_t hi = 0; hi < hi_count; ++hi) {
    const VectorXd base = fx - hi_sum.col(hi);
    for (std::uint32_t lo = 0; lo < lo_count; ++lo) {
      residual = base - lo_sum.col(lo);
      const double v = 0.5 * residual.squaredNorm();
      if (first || v > best) {
        best = v;
        first = false;
      }
    }
  }
  return best;
}

namespace detail {

// Returns the argmax vertex as well; ascending-mask iteration makes the
// first maximum the smallest mask.
inline std::uint32_t phi_bruteforce_argmax(const BrlsInstance& inst, const VectorXd& x,
                                           double* value) {
  const int n = inst.n();
  const VectorXd fx = inst.F(x);
  std::uint32_t best_mask = 0;
  double best = 0.5 * fx.squaredNorm();
  for (std::uint32_t mask = 1; mask < (n >= 32 ? 0u : (1u << n)); ++mask) {
    VectorXd cy = VectorXd::Zero(inst.r());
    for (int i = 0; i < n; ++i)
      if ((mask >> i) & 1u) cy += inst.C.col(i);
    const double v = 0.5 * (fx - cy).squaredNorm();
    if (v > best) {
      best = v;
      best_mask = mask;
    }
  }
  *value = best;
  return best_mask;
}

}  // namespace detail

struct MinimaxResult {
  double value = 0.0;
  VectorXd x_star;
  VectorXd y_star;
};

/// Exhaustive min over the grid of max over {0,1}^n. Ties break to the
/// lexicographically smallest x (grid order) and then the smallest y mask.
/// Grid points outside X (ball instances) are skipped. n <= 20.
inline MinimaxResult minimax_bruteforce(const BrlsInstance& inst, const GridSpec& grid) {
  const int n = inst.n();
  const int m = inst.m();
  if (n > 20) throw std::invalid_argument("minimax_bruteforce: n > 20 refused");
  if (grid.lo.size() != m) detail::fail_dim("grid vs outer dimension");
  const std::vector<std::vector<double>> axes = grid.axes();

  // Precompute C y and 1/2||C y||^2 per vertex when the table fits; the
  // per-point maximization is then a dot product per vertex.
  const bool tabulate = n <= 16 && (static_cast<long long>(inst.r()) << n) <= (1LL << 22);
  MatrixXd cy_table;
  VectorXd half_sq;
  const std::uint32_t count = 1u << n;
  if (tabulate) {
    cy_table = MatrixXd::Zero(inst.r(), count);
    for (std::uint32_t mask = 1; mask < count; ++mask) {
      const int bit = std::countr_zero(mask);
      cy_table.col(mask) = cy_table.col(mask ^ (1u << bit)) + inst.C.col(bit);
    }
    half_sq.resize(count);
    for (std::uint32_t mask = 0; mask < count; ++mask)
      half_sq(mask) = 0.5 * cy_table.col(mask).squaredNorm();
  }

  MinimaxResult best;
  bool found = false;
  std::vector<int> idx(m, 0);
  VectorXd x(m);
  for (;;) {
    for (int d = 0; d < m; ++d) x(d) = axes[d][idx[d]];
    if (inst.X.contains(x, 1e-12)) {
      double phi;
      if (tabulate) {
        const VectorXd fx = inst.F(x);
        const double c0 = 0.5 * fx.squaredNorm();
        const VectorXd cross = cy_table.transpose() * fx;
        phi = c0;
        for (std::uint32_t mask = 0; mask < count; ++mask)
          phi = std::max(phi, c0 - cross(mask) + half_sq(mask));
      } else {
        phi = phi_bruteforce(inst, x);
      }
      if (!found || phi < best.value) {
        best.value = phi;
        best.x_star = x;
        found = true;
      }
    }
    int d = m - 1;
    while (d >= 0 && ++idx[d] == static_cast<int>(axes[d].size())) idx[d--] = 0;
    if (d < 0) break;
  }
  if (!found) throw std::invalid_argument("no grid point lies inside X");

  double value = 0.0;
  const std::uint32_t mask = detail::phi_bruteforce_argmax(inst, best.x_star, &value);
  best.value = value;
  best.y_star = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    if ((mask >> i) & 1u) best.y_star(i) = 1.0;
  return best;
}

/// Checks Theta(x, y') <= Theta(x, y) + tol for every vertex y' and
/// Theta(x, y) <= Theta(x', y) + tol for every grid x' in X.
inline bool saddle_check(const BrlsInstance& inst, const VectorXd& x, const VectorXd& y,
                         const GridSpec& grid, double tol = 1e-9) {
  if (inst.n() > 20) throw std::invalid_argument("saddle_check: n > 20 refused");
  const double here = theta_eval(inst, x, y);
  if (phi_bruteforce(inst, x) > here + tol) return false;

  const std::vector<std::vector<double>> axes = grid.axes();
  std::vector<int> idx(inst.m(), 0);
  VectorXd xp(inst.m());
  for (;;) {
    for (int d = 0; d < inst.m(); ++d) xp(d) = axes[d][idx[d]];
    if (inst.X.contains(xp, 1e-12) && theta_eval(inst, xp, y) < here - tol) return false;
    int d = inst.m() - 1;
    while (d >= 0 && ++idx[d] == static_cast<int>(axes[d].size())) idx[d--] = 0;
    if (d < 0) break;
  }
  return true;
}

}  // namespace brls
