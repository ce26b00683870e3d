#pragma once

#include "brls/problem.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace brls {

/// Chain decomposition of y in [0,1]^n behind the Lovász extension: indices
/// sorted by decreasing value (ties broken by ascending index, which makes
/// outputs bit-reproducible; any tie rule yields the same extension value),
/// weights w_k = y_{j_k} - y_{j_{k+1}} with y_{j_0} = 1 and y_{j_{n+1}} = 0.
struct ChainDecomposition {
  std::vector<int> order;  // j_1 .. j_n (0-based)
  VectorXd weights;        // w_0 .. w_n, nonnegative, summing to 1

  /// Indicator vector of {j_1, ..., j_k}; k = 0 is the zero vector.
  VectorXd chain_point(int k) const {
    VectorXd e = VectorXd::Zero(static_cast<int>(order.size()));
    for (int t = 0; t < k; ++t) e(order[t]) = 1.0;
    return e;
  }
};

inline ChainDecomposition chain_decompose(const VectorXd& y) {
  const int n = static_cast<int>(y.size());
  for (int i = 0; i < n; ++i)
    if (y(i) < -1e-12 || y(i) > 1.0 + 1e-12)
      throw std::invalid_argument("chain_decompose: y outside the unit cube");

  ChainDecomposition d;
  d.order.resize(n);
  std::iota(d.order.begin(), d.order.end(), 0);
  std::sort(d.order.begin(), d.order.end(), [&](int a, int b) {
    if (y(a) != y(b)) return y(a) > y(b);
    return a < b;
  });
  d.weights.resize(n + 1);
  auto clamped = [&](int k) {  // y_{j_0} = 1, y_{j_{n+1}} = 0
    if (k == 0) return 1.0;
    if (k == n + 1) return 0.0;
    return std::clamp(y(d.order[k - 1]), 0.0, 1.0);
  };
  for (int k = 0; k <= n; ++k) d.weights(k) = clamped(k) - clamped(k + 1);
  return d;
}

/// Lovász extension of Theta(x, .) at y: sum_k w_k Theta(x, e_{j_1..j_k}).
/// Costs n+1 objective evaluations; agrees with theta_eval at every vertex.
inline double lovasz_eval(const BrlsInstance& inst, const VectorXd& x, const VectorXd& y) {
  if (y.size() != inst.n()) detail::fail_dim("y vs noise dimension");
  const ChainDecomposition d = chain_decompose(y);
  const VectorXd fx = inst.F(x);
  VectorXd cy = VectorXd::Zero(inst.r());  // C times the current chain point
  double total = d.weights(0) * 0.5 * fx.squaredNorm();
  for (int k = 1; k <= inst.n(); ++k) {
    cy += inst.C.col(d.order[k - 1]);
    total += d.weights(k) * 0.5 * (fx - cy).squaredNorm();
  }
  return total;
}

struct ValueAgreement {
  double phi = 0.0;               // max of Theta(x, .) over the vertices
  double lovasz_at_argmax = 0.0;  // extension evaluated at the argmax vertex
  VectorXd argmax;
};

/// Vertex brute force for the continuous-relaxation theory: the extension
/// never exceeds phi(x) and attains it at the maximizing vertex. n <= 16.
inline ValueAgreement value_functions_agree(const BrlsInstance& inst, const VectorXd& x) {
  const int n = inst.n();
  if (n > 16) throw std::invalid_argument("value_functions_agree: n > 16 refused (enumeration)");
  const InnerQuadratic q = inner_quadratic(inst, x);
  VectorXd y = VectorXd::Zero(n);
  VectorXd best_y = y;
  double best = q.c0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    for (int i = 0; i < n; ++i) y(i) = (mask >> i) & 1u ? 1.0 : 0.0;
    const double v = q.eval(y);
    if (v > best) {
      best = v;
      best_y = y;
    }
  }
  ValueAgreement out;
  out.phi = best;
  out.argmax = best_y;
  out.lovasz_at_argmax = lovasz_eval(inst, x, best_y);
  return out;
}

}  // namespace brls
