#pragma once

#include "brls/inner.hpp"
#include "brls/oracle.hpp"
#include "brls/problem.hpp"
#include "brls/rng.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace brls {

/// Iteration count backing the outer guarantees:
///   gamma = 1    ->  ceil( ((D^2 + L^2) / (2 eps))^2 )
///   gamma = 1/3  ->  ceil( 9 ((D^2 + L^2) / (2 eps))^2 )
/// Other gammas have no theory here and are rejected.
inline long long iteration_count(double eps, double D, double L, double gamma) {
  if (!(eps > 0) || !(D > 0) || !(L > 0))
    throw std::invalid_argument("iteration_count requires eps, D, L > 0");
  double mult;
  if (gamma == 1.0)
    mult = 1.0;
  else if (std::abs(gamma - 1.0 / 3.0) < 1e-12)
    mult = 9.0;
  else
    throw std::invalid_argument("iteration_count: gamma must be 1 or 1/3");
  const double base = (D * D + L * L) / (2.0 * eps);
  const double k = mult * base * base;
  if (k >= 9.0e18)
    throw std::invalid_argument("iteration_count overflows; supply an explicit K");
  return std::max(1LL, static_cast<long long>(std::ceil(k)));
}

struct QualityClaim {
  double alpha = 1.0;
  double eps = 0.0;
  std::string backed_by;  // which statement the claim rests on
};

struct TraceEntry {
  long long k = 0;
  double theta = 0.0;           // Theta(x_k, y_k)
  std::optional<double> phi;    // exact phi(x_k) when recorded
};

struct OuterReport {
  VectorXd x_hat;
  VectorXd y_hat;
  double phi_estimate = 0.0;  // Theta(x_hat, y_hat); equals phi(x_hat) for exact inner solvers
  std::vector<TraceEntry> trace;
  std::optional<QualityClaim> quality;
  std::uint64_t rng_seed = 0;
  long long K = 0;
  double step = 0.0;
  InnerMethod inner_method = InnerMethod::BruteForce;
  double gamma = 1.0;
  std::vector<std::string> warnings;
  std::vector<VectorXd> iterates;      // x_0 .. x_{K-1} (resp. x_K) when recorded
  std::vector<VectorXd> inner_points;  // y_k when recorded
};

struct LinearRunConfig {
  double eps = 0.1;
  long long K = 0;  // 0 -> theorem formula from (eps, D, L, gamma)
  VectorXd x0;      // empty -> projection of the origin
  InnerPolicy inner_policy = InnerPolicy::Auto;
  bool record_phi = false;  // exact phi(x_k) per iteration, desk scale only
  bool record_iterates = true;
};

namespace detail {

inline VectorXd resolve_x0(const BrlsInstance& inst, const VectorXd& x0,
                           std::vector<std::string>* warnings) {
  if (x0.size() == 0) return project(inst.X, VectorXd::Zero(inst.m()));
  if (x0.size() != inst.m()) fail_dim("x0 vs outer dimension");
  if (!inst.X.contains(x0, 1e-12)) {
    warnings->push_back("x0 outside X; projected");
    return project(inst.X, x0);
  }
  return x0;
}

}  // namespace detail

/// Projected gradient loop for affine F: K steps of
///   y_k = ALG(Theta(x_k, .)),  x_{k+1} = Proj_X(x_k - K^{-1/2} grad_x Theta(x_k, y_k)),
/// returning the averaged iterate and one final inner solve at it. The step
/// is exactly K^{-1/2}: no line search, no scaling, so the additive-error
/// constants stay literal. With the default K the output is an eps-global
/// minimax point (exact inner solver) or a (1/3, eps)-approximate minimax
/// point (double greedy on obtuse C).
inline OuterReport pg_linear(const BrlsInstance& inst, const LinearRunConfig& cfg = {}) {
  if (inst.F.kind() != ResidualMap::Kind::Affine)
    throw std::invalid_argument("pg_linear requires an affine residual map; see pg_nonlinear");

  OuterReport report;
  const VectorXd x0 = detail::resolve_x0(inst, cfg.x0, &report.warnings);
  const InnerOracle oracle(inst, cfg.inner_policy);
  const double gamma = oracle.gamma();
  const double D = diameter(inst.X);
  const LipschitzEstimates lip = lipschitz_estimates(inst);

  const long long K = cfg.K > 0 ? cfg.K : iteration_count(cfg.eps, D, lip.L, gamma);
  const double step = 1.0 / std::sqrt(static_cast<double>(K));
  const bool can_record_phi = cfg.record_phi && inst.n() <= kEnumerationLimit;
  if (cfg.record_phi && !can_record_phi)
    report.warnings.push_back("record_phi skipped: n > 25");

  VectorXd x = x0;
  VectorXd x_sum = VectorXd::Zero(inst.m());
  report.trace.reserve(static_cast<std::size_t>(std::min<long long>(K, 1 << 22)));
  for (long long k = 0; k < K; ++k) {
    const InnerSolution sol = oracle.solve(x);
    TraceEntry entry;
    entry.k = k;
    entry.theta = sol.value;
    if (can_record_phi) entry.phi = phi_bruteforce(inst, x);
    report.trace.push_back(entry);
    if (cfg.record_iterates) {
      report.iterates.push_back(x);
      report.inner_points.push_back(sol.y);
    }
    x_sum += x;
    x = project(inst.X, x - step * theta_grad_x(inst, x, sol.y));
  }

  report.x_hat = x_sum / static_cast<double>(K);
  const InnerSolution final_sol = oracle.solve(report.x_hat);
  report.y_hat = final_sol.y;
  report.phi_estimate = final_sol.value;
  report.K = K;
  report.step = step;
  report.inner_method = oracle.method();
  report.gamma = gamma;

  QualityClaim claim;
  claim.alpha = gamma;
  if (cfg.K <= 0) {
    claim.eps = cfg.eps;
    claim.backed_by = gamma == 1.0 ? "exact-subsolver K rule" : "one-third-greedy 9x K rule";
  } else {
    // additive error achieved by the actual K, at quality (gamma, eps/gamma)
    claim.eps = (D * D + lip.L * lip.L) / (2.0 * std::sqrt(static_cast<double>(K))) / gamma;
    claim.backed_by = "explicit K";
  }
  report.quality = claim;
  return report;
}

struct NonlinearRunConfig {
  double eps = 0.1;
  double Delta = -1.0;  // < 0 -> phi(x0), using 0 as the lower bound on min phi
  double mu = -1.0;     // < 0 -> sqrt(Delta / (L^2 ell (K+1)))
  long long K = -1;     // < 0 -> floor(64 L^2 ell Delta / eps^4)
  std::uint64_t seed = 0;
  VectorXd x0;
  InnerPolicy inner_policy = InnerPolicy::Auto;
  bool record_phi = false;
  bool record_iterates = true;
};

/// Projected gradient loop for differentiable F with a fixed step mu over
/// K+1 iterations; the returned x_hat is drawn uniformly from the trajectory
/// {x_0..x_K} with the seeded generator, so runs are bit-reproducible. The
/// index is drawn after skipping K+1 reserved words of the stream; adding
/// trace instrumentation never perturbs the selection. Requires an exact
/// (gamma = 1) inner solver.
inline OuterReport pg_nonlinear(const BrlsInstance& inst, const NonlinearRunConfig& cfg) {
  OuterReport report;
  const VectorXd x0 = detail::resolve_x0(inst, cfg.x0, &report.warnings);
  const InnerOracle oracle(inst, cfg.inner_policy);
  if (oracle.gamma() != 1.0)
    throw std::invalid_argument(
        "pg_nonlinear requires an exact inner solver (min cut on acute C, or the "
        "brute-force policy); the double-greedy 1/3 guarantee is not enough");

  const bool defaults_used = cfg.K < 0 && cfg.mu < 0 && cfg.Delta < 0;
  const double Delta = cfg.Delta >= 0 ? cfg.Delta : oracle.solve(x0).value;

  double L = 0.0, ell = 0.0;
  if (cfg.K < 0 || cfg.mu < 0) {
    const LipschitzEstimates lip = lipschitz_estimates(inst);
    L = lip.L;
    ell = lip.ell;
  }

  long long K;
  if (cfg.K >= 0) {
    K = cfg.K;
  } else {
    const double k_real = 64.0 * L * L * ell * Delta / std::pow(cfg.eps, 4);
    if (k_real >= 9.0e18)
      throw std::invalid_argument("theorem K overflows; supply an explicit K");
    K = static_cast<long long>(std::floor(k_real));
  }
  double mu;
  if (cfg.mu >= 0) {
    mu = cfg.mu;
  } else {
    const double denom = L * L * ell * static_cast<double>(K + 1);
    mu = (Delta > 0 && denom > 0) ? std::sqrt(Delta / denom) : 0.0;
  }

  Rng rng(cfg.seed);
  rng.skip(static_cast<std::uint64_t>(K) + 1);
  const long long pick = static_cast<long long>(rng.below(static_cast<std::uint64_t>(K) + 1));

  const bool can_record_phi = cfg.record_phi && inst.n() <= kEnumerationLimit;
  if (cfg.record_phi && !can_record_phi)
    report.warnings.push_back("record_phi skipped: n > 25");

  VectorXd x = x0;
  VectorXd x_hat;
  for (long long k = 0; k <= K; ++k) {
    const InnerSolution sol = oracle.solve(x);
    TraceEntry entry;
    entry.k = k;
    entry.theta = sol.value;
    if (can_record_phi) entry.phi = phi_bruteforce(inst, x);
    report.trace.push_back(entry);
    if (cfg.record_iterates) {
      report.iterates.push_back(x);
      report.inner_points.push_back(sol.y);
    }
    if (k == pick) x_hat = x;
    x = project(inst.X, x - mu * theta_grad_x(inst, x, sol.y));
  }

  report.x_hat = x_hat;
  const InnerSolution final_sol = oracle.solve(x_hat);
  report.y_hat = final_sol.y;
  report.phi_estimate = final_sol.value;
  report.rng_seed = cfg.seed;
  report.K = K;
  report.step = mu;
  report.inner_method = oracle.method();
  report.gamma = 1.0;
  if (defaults_used) {
    QualityClaim claim;
    claim.alpha = 1.0;
    claim.eps = cfg.eps;
    claim.backed_by = "expected Moreau-gradient bound (theorem defaults)";
    report.quality = claim;
  }
  return report;
}

struct MoreauEstimate {
  double value = 0.0;           // 2 ell ||x - prox(x)||
  VectorXd prox_point;
  double subsolve_residual = 0.0;  // projected-gradient-mapping norm at the prox point
};

struct MoreauOptions {
  int restarts = 8;
  int iterations = 2500;
  std::uint64_t seed = 17;
};

/// Estimates ||grad phi_{1/(2 ell)}(x)|| = 2 ell ||x - prox(x)|| where
/// prox(x) minimizes phi(w) + ell ||w - x||^2 over X (an ell-strongly convex
/// problem). Solved by multistart projected subgradient with exact inner
/// evaluations of phi; desk scale only, and reported as an estimate together
/// with the sub-solve residual.
inline MoreauEstimate moreau_grad_estimate(const BrlsInstance& inst, const VectorXd& x, double ell,
                                           const MoreauOptions& opts = {}) {
  if (!(ell > 0)) throw std::invalid_argument("moreau_grad_estimate requires ell > 0");
  InnerPolicy policy = InnerPolicy::Auto;
  if (classify_for_dispatch(inst.C) == MatrixClass::Obtuse ||
      classify_for_dispatch(inst.C) == MatrixClass::General)
    policy = InnerPolicy::ForceBruteForce;
  const InnerOracle oracle(inst, policy);

  auto objective = [&](const VectorXd& w, VectorXd* grad) {
    const InnerSolution sol = oracle.solve(w);
    if (grad) *grad = theta_grad_x(inst, w, sol.y) + 2.0 * ell * (w - x);
    return sol.value + ell * (w - x).squaredNorm();
  };

  std::vector<VectorXd> starts;
  starts.push_back(project(inst.X, x));
  if (inst.X.kind() == FeasibleSet::Kind::Box)
    starts.push_back(0.5 * (inst.X.lo() + inst.X.hi()));
  else
    starts.push_back(inst.X.center());
  Rng rng(opts.seed);
  for (int s = 0; s < opts.restarts; ++s) {
    VectorXd w(inst.m());
    if (inst.X.kind() == FeasibleSet::Kind::Box) {
      for (int d = 0; d < inst.m(); ++d) w(d) = rng.uniform(inst.X.lo()(d), inst.X.hi()(d));
    } else {
      for (int d = 0; d < inst.m(); ++d) w(d) = rng.normal();
      w = project(inst.X, inst.X.center() + w * (inst.X.radius() * rng.uniform()));
    }
    starts.push_back(w);
  }

  VectorXd best_w;
  double best_value = 0.0;
  bool first = true;
  for (const VectorXd& start : starts) {
    VectorXd w = start;
    VectorXd grad(inst.m());
    VectorXd w_best = w;
    double v_best = objective(w, &grad);
    for (int t = 0; t < opts.iterations; ++t) {
      // strongly convex subgradient schedule
      const double step = 2.0 / (ell * (static_cast<double>(t) + 2.0));
      w = project(inst.X, w - step * grad);
      const double v = objective(w, &grad);
      if (v < v_best) {
        v_best = v;
        w_best = w;
      }
    }
    if (first || v_best < best_value) {
      best_value = v_best;
      best_w = w_best;
      first = false;
    }
  }

  MoreauEstimate est;
  est.prox_point = best_w;
  est.value = 2.0 * ell * (x - best_w).norm();
  VectorXd grad(inst.m());
  objective(best_w, &grad);
  const double tau = 1.0 / (2.0 * ell);
  est.subsolve_residual = (best_w - project(inst.X, best_w - tau * grad)).norm() / tau;
  return est;
}

struct MinimaxCertificate {
  bool ok = false;
  bool lower_ok = false;   // alpha * max_y Theta(x,y) <= Theta(x,y*)
  bool upper_ok = false;   // Theta(x,y*) <= (1/alpha) min-max + eps
  double phi_at_x = 0.0;
  double theta_at_pair = 0.0;
  double grid_minimax = 0.0;
  double grid_pitch = 0.0;
};

/// Grid-based check of the approximate-minimax inequalities. The min-max
/// reference value is exhaustive over the grid, so the certificate is exact
/// up to the grid error reported through grid_pitch. n <= 20, m <= 3.
inline MinimaxCertificate check_approx_minimax(const BrlsInstance& inst, const VectorXd& x_hat,
                                               const VectorXd& y_hat, double alpha, double eps,
                                               double pitch = 0.02, double tol = 1e-9) {
  if (!(alpha > 0) || alpha > 1) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (inst.m() > 3) throw std::invalid_argument("check_approx_minimax: m > 3 refused");
  if (inst.n() > 20) throw std::invalid_argument("check_approx_minimax: n > 20 refused");

  MinimaxCertificate cert;
  cert.grid_pitch = pitch;
  cert.phi_at_x = phi_bruteforce(inst, x_hat);
  cert.theta_at_pair = theta_eval(inst, x_hat, y_hat);
  cert.grid_minimax = minimax_bruteforce(inst, GridSpec::over(inst.X, pitch)).value;
  cert.lower_ok = alpha * cert.phi_at_x <= cert.theta_at_pair + tol;
  cert.upper_ok = cert.theta_at_pair <= cert.grid_minimax / alpha + eps + tol;
  cert.ok = cert.lower_ok && cert.upper_ok;
  return cert;
}

}  // namespace brls
