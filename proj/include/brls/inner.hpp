#pragma once

#include "brls/maxflow.hpp"
#include "brls/modularity.hpp"
#include "brls/problem.hpp"

#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace brls {

enum class InnerMethod { BruteForce, MinCut, DoubleGreedy, OrthogonalClosedForm };

inline const char* to_string(InnerMethod m) {
  switch (m) {
    case InnerMethod::BruteForce: return "brute_force";
    case InnerMethod::MinCut: return "min_cut";
    case InnerMethod::DoubleGreedy: return "double_greedy";
    case InnerMethod::OrthogonalClosedForm: return "orthogonal_closed_form";
  }
  return "?";
}

struct InnerSolution {
  VectorXd y;
  double value = 0.0;
  InnerMethod method = InnerMethod::BruteForce;
  /// gamma of the approximation claim: 1 for exact methods, 1/3 for double
  /// greedy on obtuse instances, absent when no theory backs the run.
  std::optional<double> guarantee;
};

enum class InnerPolicy { Auto, ForceBruteForce };

inline constexpr int kEnumerationLimit = 25;

namespace detail {

inline VectorXd mask_to_vector(std::uint32_t mask, int n) {
  VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = (mask >> i) & 1u ? 1.0 : 0.0;
  return y;
}

inline double quadratic_at_mask(const MatrixXd& Sigma, const VectorXd& u, double c0,
                                std::uint32_t mask) {
  const int n = static_cast<int>(u.size());
  const VectorXd y = mask_to_vector(mask, n);
  return 0.5 * y.dot(Sigma * y) - u.dot(y) + c0;
}

// Gray-code walk over {0,1}^n with O(n) incremental updates of the quadratic
// form. Bit i of the mask is coordinate y_{i+1} (y_1 least significant).
// Ties go to the smaller mask; candidates near the running maximum are
// re-evaluated from scratch so the walk's accumulated rounding cannot
// decide them.
inline std::uint32_t gray_argmax(const MatrixXd& Sigma, const VectorXd& u, double c0,
                                 double* best_value) {
  const int n = static_cast<int>(u.size());
  std::uint32_t best_mask = 0;
  double best = c0;  // y = 0
  if (n == 0) {
    *best_value = best;
    return 0;
  }

  const std::uint32_t count = 1u << n;
  VectorXd sigma_y = VectorXd::Zero(n);  // Sigma * y at the current vertex
  long double running = c0;
  std::uint32_t gray = 0;
  for (std::uint32_t step = 1; step < count; ++step) {
    const int bit = std::countr_zero(step);
    const std::uint32_t bit_mask = 1u << bit;
    gray ^= bit_mask;
    const double diag = Sigma(bit, bit);
    if (gray & bit_mask) {
      running += sigma_y(bit) + 0.5 * diag - u(bit);
      sigma_y += Sigma.col(bit);
    } else {
      sigma_y -= Sigma.col(bit);
      running += -(sigma_y(bit) + diag) + 0.5 * diag + u(bit);
    }
    if (static_cast<double>(running) >= best - 1e-9 * (1.0 + std::abs(best))) {
      const double value = quadratic_at_mask(Sigma, u, c0, gray);
      if (value > best || (value == best && gray < best_mask)) {
        best = value;
        best_mask = gray;
      }
    }
  }
  *best_value = best;
  return best_mask;
}

// Exact maximization of the supermodular quadratic via an s-t minimum cut.
//
// Maximizing Theta(x,y) = 1/2 y'Sigma y - u'y + c0 over {0,1}^n is
// minimizing f(y) = sum_i (u_i - Sigma_ii/2) y_i - sum_{i<j} Sigma_ij y_i y_j,
// whose pairwise terms are submodular exactly when Sigma_ij >= 0 off the
// diagonal (the acute case). Each pairwise term splits as
//   -S y_i y_j = -S y_j + S [y_i = 0][y_j = 1],
// a unary adjustment on j plus an edge i -> j of capacity S. A node on the
// sink side of the cut means y_i = 1: a unary weight w y_i with w >= 0
// becomes a source->i edge, w < 0 an i->sink edge of capacity -w (plus a
// constant invisible to the cut). Off-diagonal entries inside the
// classification tolerance are clamped to zero.
inline std::uint32_t mincut_argmax(const MatrixXd& Sigma, const VectorXd& u) {
  const int n = static_cast<int>(u.size());
  if (n == 0) return 0;
  if (n > 31) throw std::invalid_argument("min-cut argmax packs y into 32-bit masks");

  VectorXd unary(n);
  for (int i = 0; i < n; ++i) unary(i) = u(i) - 0.5 * Sigma(i, i);

  MaxFlowGraph graph(n + 2);
  const int source = n, sink = n + 1;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double w = Sigma(i, j);
      if (w <= 0.0) continue;
      graph.add_edge(i, j, w);
      unary(j) -= w;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (unary(i) > 0.0)
      graph.add_edge(source, i, unary(i));
    else if (unary(i) < 0.0)
      graph.add_edge(i, sink, -unary(i));
  }
  graph.run(source, sink);
  const std::vector<char> on_source_side = graph.source_side();

  std::uint32_t mask = 0;
  for (int i = 0; i < n; ++i)
    if (!on_source_side[i]) mask |= 1u << i;
  return mask;
}

// One double-greedy pass in natural coordinate order. When the instance is
// claimed submodular the step invariant a + b >= 0 is asserted.
inline VectorXd double_greedy_core(const MatrixXd& Sigma, const VectorXd& u, bool submodular) {
  const int n = static_cast<int>(u.size());
  VectorXd lower = VectorXd::Zero(n);
  VectorXd sigma_lower = VectorXd::Zero(n);        // Sigma * lower
  VectorXd sigma_upper = Sigma.rowwise().sum();    // Sigma * upper, upper = 1
  for (int k = 0; k < n; ++k) {
    const double diag = Sigma(k, k);
    const double a = sigma_lower(k) + 0.5 * diag - u(k);
    const double b = -sigma_upper(k) + 0.5 * diag + u(k);
    if (submodular && a + b < -1e-9 * (1.0 + std::abs(a) + std::abs(b)))
      throw std::logic_error("double_greedy: a + b < 0 on a submodular instance");
    if (a >= b) {  // ties go to 1
      lower(k) = 1.0;
      sigma_lower += Sigma.col(k);
    } else {
      sigma_upper -= Sigma.col(k);
    }
  }
  return lower;
}

}  // namespace detail

/// Exact maximizer of Theta(x, .) by enumeration; ties broken by the
/// smallest binary value with y_1 the least significant bit. n <= 25.
inline InnerSolution brute_force_max(const BrlsInstance& inst, const VectorXd& x) {
  if (inst.n() > kEnumerationLimit)
    throw std::invalid_argument("brute_force_max: n > 25 refused (enumeration)");
  const InnerQuadratic q = inner_quadratic(inst, x);
  double value = 0.0;
  const std::uint32_t mask = detail::gray_argmax(q.Sigma, q.u, q.c0, &value);
  InnerSolution sol;
  sol.y = detail::mask_to_vector(mask, inst.n());
  sol.value = theta_eval(inst, x, sol.y);
  sol.method = InnerMethod::BruteForce;
  sol.guarantee = 1.0;
  return sol;
}

/// Exact maximizer for acute (or orthogonal) C via the min-cut reduction.
/// Replaces a general submodular minimizer: Theta(x,.) is always quadratic
/// in y, so the pairwise-energy graph cut is exact for every instance the
/// dispatch sends here.
inline InnerSolution mincut_supermodular_max(const BrlsInstance& inst, const VectorXd& x) {
  const MatrixClass cls = classify_for_dispatch(inst.C);
  if (cls != MatrixClass::Acute && cls != MatrixClass::Orthogonal)
    throw std::invalid_argument(
        "mincut_supermodular_max requires an acute or orthogonal C; use double_greedy "
        "(obtuse) or brute_force_max");
  const InnerQuadratic q = inner_quadratic(inst, x);
  InnerSolution sol;
  sol.y = detail::mask_to_vector(detail::mincut_argmax(q.Sigma, q.u), inst.n());
  sol.value = theta_eval(inst, x, sol.y);
  sol.method = InnerMethod::MinCut;
  sol.guarantee = 1.0;
  return sol;
}

/// Deterministic double greedy: grows a lower iterate from 0 and shrinks an
/// upper iterate from 1, one coordinate per step; a >= b sets the coordinate
/// to 1 (ties go to 1). 1/3-approximation when C is obtuse, exact when C is
/// orthogonal; on other instances it still returns a feasible point but
/// claims no guarantee.
inline InnerSolution double_greedy(const BrlsInstance& inst, const VectorXd& x) {
  const MatrixClass cls = classify_for_dispatch(inst.C);
  const bool submodular = cls == MatrixClass::Obtuse || cls == MatrixClass::Orthogonal;
  const InnerQuadratic q = inner_quadratic(inst, x);
  InnerSolution sol;
  sol.y = detail::double_greedy_core(q.Sigma, q.u, submodular);
  sol.value = theta_eval(inst, x, sol.y);
  sol.method = InnerMethod::DoubleGreedy;
  if (cls == MatrixClass::Orthogonal)
    sol.guarantee = 1.0;
  else if (cls == MatrixClass::Obtuse)
    sol.guarantee = 1.0 / 3.0;
  return sol;
}

/// Explicit inner value of the hypercube problem for column-orthogonal Chat:
///   max_{z in [-d,d]^n} 1/2 ||Fhat(x) - Chat z||^2
///     = 1/2 ||Fhat(x)||^2 + d ||Chat' Fhat(x)||_1 + 1/2 d^2 ||Chat||_F^2,
/// which also equals phi(x) of the transformed binary instance.
inline double orthogonal_closed_form(const HrlsInstance& h, const VectorXd& x) {
  if (classify(h.Chat).verdict != MatrixClass::Orthogonal)
    throw std::invalid_argument("orthogonal_closed_form requires column-orthogonal Chat");
  const VectorXd fx = h.Fhat(x);
  return 0.5 * fx.squaredNorm() + h.delta * (h.Chat.transpose() * fx).lpNorm<1>() +
         0.5 * h.delta * h.delta * h.Chat.squaredNorm();
}

/// Per-run cache for the outer loops: Sigma = C'C and the dispatch class do
/// not depend on x, so they are computed once. Calls are pure in x.
class InnerOracle {
 public:
  explicit InnerOracle(const BrlsInstance& inst, InnerPolicy policy = InnerPolicy::Auto)
      : inst_(&inst), sigma_(inst.C.transpose() * inst.C), cls_(classify_for_dispatch(inst.C)) {
    if (policy == InnerPolicy::ForceBruteForce) {
      if (inst.n() > kEnumerationLimit)
        throw std::invalid_argument("brute-force policy refused: n > 25");
      method_ = InnerMethod::BruteForce;
      gamma_ = 1.0;
      return;
    }
    switch (cls_) {
      case MatrixClass::Orthogonal:
      case MatrixClass::Acute:
        method_ = InnerMethod::MinCut;
        gamma_ = 1.0;
        break;
      case MatrixClass::Obtuse:
        method_ = InnerMethod::DoubleGreedy;
        gamma_ = 1.0 / 3.0;
        break;
      case MatrixClass::General:
        if (inst.n() > kEnumerationLimit)
          throw std::invalid_argument(
              "solve_inner: general C with n > 25 has no tractable exact solver here");
        method_ = InnerMethod::BruteForce;
        gamma_ = 1.0;
        break;
    }
  }

  MatrixClass dispatch_class() const { return cls_; }
  InnerMethod method() const { return method_; }
  double gamma() const { return gamma_; }

  InnerSolution solve(const VectorXd& x) const {
    const VectorXd fx = (*inst_).F(x);
    const VectorXd u = inst_->C.transpose() * fx;
    const double c0 = 0.5 * fx.squaredNorm();

    InnerSolution sol;
    sol.method = method_;
    sol.guarantee = gamma_;
    switch (method_) {
      case InnerMethod::BruteForce: {
        double value = 0.0;
        sol.y = detail::mask_to_vector(detail::gray_argmax(sigma_, u, c0, &value), inst_->n());
        break;
      }
      case InnerMethod::MinCut:
        sol.y = detail::mask_to_vector(detail::mincut_argmax(sigma_, u), inst_->n());
        break;
      case InnerMethod::DoubleGreedy:
        sol.y = detail::double_greedy_core(sigma_, u, true);
        break;
      default:
        throw std::logic_error("unreachable");
    }
    sol.value = 0.5 * (fx - inst_->C * sol.y).squaredNorm();
    return sol;
  }

 private:
  const BrlsInstance* inst_;
  MatrixXd sigma_;
  MatrixClass cls_;
  InnerMethod method_ = InnerMethod::BruteForce;
  double gamma_ = 1.0;
};

/// Dispatch entry point matching the algorithms' ALG slot; see InnerOracle
/// for the per-run cached variant.
inline InnerSolution solve_inner(const BrlsInstance& inst, const VectorXd& x,
                                 const ModularityClass& cls,
                                 InnerPolicy policy = InnerPolicy::Auto) {
  if (policy == InnerPolicy::ForceBruteForce) return brute_force_max(inst, x);
  switch (cls.verdict) {
    case MatrixClass::Orthogonal:
    case MatrixClass::Acute:
      return mincut_supermodular_max(inst, x);
    case MatrixClass::Obtuse:
      return double_greedy(inst, x);
    case MatrixClass::General:
      if (inst.n() > kEnumerationLimit)
        throw std::invalid_argument(
            "solve_inner: general C with n > 25 has no tractable exact solver here");
      return brute_force_max(inst, x);
  }
  throw std::logic_error("unreachable");
}

}  // namespace brls
