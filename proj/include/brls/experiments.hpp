#pragma once

#include "brls/inner.hpp"
#include "brls/io.hpp"
#include "brls/modularity.hpp"
#include "brls/outer.hpp"
#include "brls/problem.hpp"
#include "brls/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace brls {

struct ResultRow {
  std::string model;
  double param = 0.0;
  std::string metric;
  double value = 0.0;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  void add(std::string model, double param, std::string metric, double value) {
    rows.push_back({std::move(model), param, std::move(metric), value});
  }

  std::string to_csv() const {
    std::string out = "model,param,metric,value\n";
    for (const ResultRow& row : rows) {
      out += row.model;
      out += ',';
      out += io::format_double(row.param);
      out += ',';
      out += row.metric;
      out += ',';
      out += io::format_double(row.value);
      out += '\n';
    }
    return out;
  }

  void save_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << to_csv();
  }
};

inline void save_result_table(const ResultTable& table, const std::string& path) {
  table.save_csv(path);
}

inline Eigen::MatrixXd load_csv_matrix(const std::string& path) { return io::load_matrix(path); }

// ---------------------------------------------------------------------------
// Random matrix generators shared by the experiments and the test suites.
// ---------------------------------------------------------------------------

/// Acute: componentwise |N(0,1)| columns normalized to `scale`; nonnegative
/// entries give pairwise nonnegative (generically positive) inner products.
inline MatrixXd make_acute_matrix(Rng& rng, int r, int n, double scale = 1.0) {
  MatrixXd C(r, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < r; ++i) C(i, j) = std::abs(rng.normal());
    C.col(j) *= scale / C.col(j).norm();
  }
  return C;
}

/// Obtuse: at most r + 1 vectors in R^r can be pairwise strictly obtuse, so
/// this builds n <= r simplex-like columns v_i = e_i - (1/n) 1 inside an
/// n-dimensional coordinate block (pairwise inner products -1/n < 0),
/// normalizes them to `scale` and applies a seeded rotation so the block is
/// not axis-aligned.
inline MatrixXd make_obtuse_matrix(Rng& rng, int r, int n, double scale = 1.0) {
  if (n > r) throw std::invalid_argument("obtuse generator needs n <= r");
  MatrixXd V = MatrixXd::Zero(r, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) V(i, j) = (i == j ? 1.0 : 0.0) - 1.0 / n;
    V.col(j) *= scale / V.col(j).norm();
  }
  MatrixXd G(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) G(i, j) = rng.normal();
  const MatrixXd Q = Eigen::HouseholderQR<MatrixXd>(G).householderQ();
  return Q * V;
}

/// Column-orthogonal with random nonzero column scales of magnitude around
/// `scale` and random signs. Requires n <= r.
inline MatrixXd make_orthogonal_matrix(Rng& rng, int r, int n, double scale = 1.0) {
  if (n > r) throw std::invalid_argument("orthogonal generator needs n <= r");
  MatrixXd G(r, n);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(G);
  MatrixXd Q = MatrixXd(qr.householderQ()).leftCols(n);
  for (int j = 0; j < n; ++j) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    Q.col(j) *= sign * scale * rng.uniform(0.5, 1.5);
  }
  return Q;
}

/// Gaussian columns redrawn until the verdict is General (mixed signs).
inline MatrixXd make_general_matrix(Rng& rng, int r, int n, double scale = 1.0) {
  if (n < 3) throw std::invalid_argument("general verdict needs n >= 3");
  for (int attempt = 0; attempt < 1000; ++attempt) {
    MatrixXd C(r, n);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < n; ++j) C(i, j) = scale * rng.normal();
    if (classify(C).verdict == MatrixClass::General) return C;
  }
  throw std::runtime_error("could not draw a general matrix");
}

// ---------------------------------------------------------------------------
// Synthetic label-corruption classification. The wearable dataset behind the
// published figures is proprietary; this generator keeps the pipeline shape
// (clustered features -> labels -> flips -> partial corruption knowledge),
// so ordering claims are reproducible while absolute accuracies are not.
// ---------------------------------------------------------------------------

struct ClassificationConfig {
  std::uint64_t seed = 1;
  int r = 500;              // training rows (cluster means)
  int m = 20;               // features
  double rho = 0.3;         // noise ratio: ceil(rho r) labels flipped
  double frac_known = 0.7;  // fraction of flips included in the index set I
  int r_test = 2000;
  double eps = 0.25;        // target accuracy for the RLS solver
  long long K = 3000;       // iteration budget; 0 selects the theorem default
  double box_radius = 10.0;
  double feature_noise = 0.08;
};

struct ClassificationData {
  MatrixXd A;
  VectorXd b;  // corrupted labels
  std::vector<int> flipped;
  std::vector<int> I;  // known subset of the flips, size round(frac_known * flips)
  MatrixXd A_test;
  VectorXd b_true_test;
  VectorXd x_true;
  VectorXd b_true;  // uncorrupted training labels
};

/// Planted linear model: rows concentrate near two centroids whose scores
/// under x_true are 0 and 1, labels threshold the scores at 0.5, and exactly
/// ceil(rho r) labels are flipped at seeded-random indices. Deterministic
/// per seed.
inline ClassificationData gen_classification(const ClassificationConfig& cfg) {
  Rng rng(cfg.seed);
  ClassificationData data;

  VectorXd x_true(cfg.m);
  for (int i = 0; i < cfg.m; ++i) x_true(i) = rng.normal();
  x_true.normalize();
  VectorXd g(cfg.m);
  for (int i = 0; i < cfg.m; ++i) g(i) = rng.normal();
  const VectorXd mu0 = g - g.dot(x_true) * x_true;  // score 0
  const VectorXd mu1 = mu0 + x_true;                // score 1
  data.x_true = x_true;

  const auto fill = [&](int rows, MatrixXd& A, VectorXd& labels) {
    A.resize(rows, cfg.m);
    labels.resize(rows);
    for (int j = 0; j < rows; ++j) {
      const bool ill = rng.uniform() < 0.5;
      for (int k = 0; k < cfg.m; ++k)
        A(j, k) = (ill ? mu1(k) : mu0(k)) + cfg.feature_noise * rng.normal();
      labels(j) = A.row(j).dot(x_true) > 0.5 ? 1.0 : 0.0;
    }
  };
  fill(cfg.r, data.A, data.b_true);

  const int flips = static_cast<int>(std::ceil(cfg.rho * cfg.r));
  std::vector<int> perm(cfg.r);
  for (int i = 0; i < cfg.r; ++i) perm[i] = i;
  for (int i = cfg.r - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  data.flipped.assign(perm.begin(), perm.begin() + flips);
  std::sort(data.flipped.begin(), data.flipped.end());

  data.b = data.b_true;
  for (const int j : data.flipped) data.b(j) = 1.0 - data.b(j);

  std::vector<int> pool = data.flipped;
  for (int i = static_cast<int>(pool.size()) - 1; i > 0; --i)
    std::swap(pool[i], pool[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  const int known = static_cast<int>(std::llround(cfg.frac_known * flips));
  data.I.assign(pool.begin(), pool.begin() + std::min<int>(known, flips));
  std::sort(data.I.begin(), data.I.end());

  fill(cfg.r_test, data.A_test, data.b_true_test);
  return data;
}

namespace detail {

// Accelerated proximal gradient for 1/2||Ax - b||^2 + weight ||x||_1 with a
// monotone restart; stops when the gradient-mapping norm drops to tol.
inline std::optional<VectorXd> lasso_solve(const MatrixXd& A, const VectorXd& b, double weight,
                                           VectorXd x, double tol, int max_iter) {
  const MatrixXd AtA = A.transpose() * A;
  const VectorXd Atb = A.transpose() * b;
  const double lip = Eigen::SelfAdjointEigenSolver<MatrixXd>(AtA).eigenvalues().maxCoeff();
  if (!(lip > 0)) return x;
  const double step = 1.0 / lip;

  const auto soft = [&](VectorXd v) {
    for (int i = 0; i < v.size(); ++i) {
      const double t = weight * step;
      v(i) = v(i) > t ? v(i) - t : (v(i) < -t ? v(i) + t : 0.0);
    }
    return v;
  };
  const auto smooth_value = [&](const VectorXd& v) {
    return 0.5 * (A * v - b).squaredNorm() + weight * v.lpNorm<1>();
  };

  VectorXd z = x;
  double momentum = 1.0;
  double fx = smooth_value(x);
  for (int iter = 0; iter < max_iter; ++iter) {
    const VectorXd x_next = soft(z - step * (AtA * z - Atb));
    const VectorXd mapped = soft(x_next - step * (AtA * x_next - Atb));
    if ((x_next - mapped).norm() / step <= tol) return x_next;
    const double f_next = smooth_value(x_next);
    if (f_next > fx) {  // restart
      z = x_next;
      momentum = 1.0;
    } else {
      const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      z = x_next + ((momentum - 1.0) / momentum_next) * (x_next - x);
      momentum = momentum_next;
    }
    x = x_next;
    fx = f_next;
  }
  return std::nullopt;
}

inline double accuracy_of(const MatrixXd& A_test, const VectorXd& b_true, const VectorXd& x) {
  const VectorXd scores = A_test * x;
  double wrong = 0.0;
  for (int j = 0; j < scores.size(); ++j) {
    const double pred = scores(j) > 0.5 ? 1.0 : 0.0;
    wrong += std::abs(pred - b_true(j));
  }
  return 1.0 - wrong / static_cast<double>(scores.size());
}

inline void add_confusion_rows(ResultTable& table, const std::string& model, double rho,
                               const MatrixXd& A_test, const VectorXd& b_true, const VectorXd& x) {
  double counts[2][2] = {{0, 0}, {0, 0}};
  const VectorXd scores = A_test * x;
  for (int j = 0; j < scores.size(); ++j) {
    const int pred = scores(j) > 0.5 ? 1 : 0;
    counts[b_true(j) > 0.5 ? 1 : 0][pred] += 1.0;
  }
  table.add(model, rho, "true0_pred0", counts[0][0]);
  table.add(model, rho, "true0_pred1", counts[0][1]);
  table.add(model, rho, "true1_pred0", counts[1][0]);
  table.add(model, rho, "true1_pred1", counts[1][1]);
}

}  // namespace detail

/// Fits LS (normal equations), LASSO (proximal gradient, penalty weight 1)
/// and the two RLS variants (full and partial corruption knowledge) on one
/// corrupted training set, then scores test accuracy with the 0.5 threshold.
/// The RLS instances are scaled by 1/sqrt(r) (mean rather than summed
/// squares) so the K^{-1/2} projected-gradient step is stable; this rescales
/// the objective without moving its minimizers. Solver failures surface as a
/// solver_error row, never as a silent NaN.
inline ResultTable run_classification(const ClassificationConfig& cfg,
                                      std::map<std::string, OuterReport>* reports = nullptr) {
  const ClassificationData data = gen_classification(cfg);
  ResultTable table;

  const MatrixXd& A = data.A;
  const Eigen::LDLT<MatrixXd> ldlt(A.transpose() * A);
  const VectorXd x_ls = ldlt.solve(A.transpose() * data.b);
  table.add("LS", cfg.rho, "accuracy", detail::accuracy_of(data.A_test, data.b_true_test, x_ls));
  detail::add_confusion_rows(table, "LS", cfg.rho, data.A_test, data.b_true_test, x_ls);

  const std::optional<VectorXd> x_lasso =
      detail::lasso_solve(A, data.b, 1.0, x_ls, 1e-8, 200000);
  if (x_lasso) {
    table.add("LASSO", cfg.rho, "accuracy",
              detail::accuracy_of(data.A_test, data.b_true_test, *x_lasso));
    detail::add_confusion_rows(table, "LASSO", cfg.rho, data.A_test, data.b_true_test, *x_lasso);
  } else {
    table.add("LASSO", cfg.rho, "solver_error", 1.0);
  }

  const FeasibleSet X = FeasibleSet::box(cfg.m, -cfg.box_radius, cfg.box_radius);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.r));
  const int percent = static_cast<int>(std::llround(cfg.frac_known * 100.0));
  const std::vector<std::pair<std::string, const std::vector<int>*>> variants = {
      {"RLS(100%C)", &data.flipped},
      {"RLS(" + std::to_string(percent) + "%C)", &data.I}};
  for (const auto& [name, index_set] : variants) {
    try {
      const LabelUncertaintyModel model(ResidualMap::affine(A, VectorXd::Zero(cfg.r)), data.b,
                                        *index_set, X);
      const BrlsInstance full = label_model_to_brls(model);
      const BrlsInstance inst(
          ResidualMap::affine(scale * full.F.matrix(), scale * full.F.offset()),
          scale * full.C, X);
      LinearRunConfig run;
      run.eps = cfg.eps;
      run.K = cfg.K;
      run.x0 = project(X, x_ls);
      run.record_iterates = false;
      const OuterReport report = pg_linear(inst, run);
      if (reports) (*reports)[name] = report;
      table.add(name, cfg.rho, "accuracy",
                detail::accuracy_of(data.A_test, data.b_true_test, report.x_hat));
      detail::add_confusion_rows(table, name, cfg.rho, data.A_test, data.b_true_test,
                                 report.x_hat);
    } catch (const std::exception&) {
      table.add(name, cfg.rho, "solver_error", 1.0);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Phase retrieval under hypercube uncertainty.
// ---------------------------------------------------------------------------

/// Worst-case error E_lambda(x) = max over y in [-lambda, lambda]^n of
/// 1/2 ||F(x) - C y||^2, computed exactly: transform to binary form and use
/// the min cut for acute/orthogonal C, brute force otherwise (the metric may
/// not be approximated, so obtuse C is limited to enumeration scale).
inline double worst_case_error(const ResidualMap& F, const MatrixXd& C, const VectorXd& x,
                               double lambda) {
  if (lambda < 0) throw std::invalid_argument("worst_case_error: lambda must be >= 0");
  if (lambda == 0.0 || C.cols() == 0) return 0.5 * F(x).squaredNorm();
  const FeasibleSet dummy = FeasibleSet::box(x.array() - 1.0, x.array() + 1.0);
  const BrlsInstance inst = hrls_to_brls(HrlsInstance(F, C, lambda, dummy));
  const MatrixClass cls = classify_for_dispatch(inst.C);
  if (cls == MatrixClass::Acute || cls == MatrixClass::Orthogonal)
    return mincut_supermodular_max(inst, x).value;
  if (inst.n() > kEnumerationLimit)
    throw std::invalid_argument(
        "worst_case_error must be exact: non-acute C needs n <= 25 (reduce n)");
  return brute_force_max(inst, x).value;
}

struct PhaseConfig {
  std::uint64_t seed = 1;
  int m = 20;
  int r = 40;
  int n = 10;
  int sparsity = 3;
  double delta = 1e-2;  // training noise level
  std::vector<double> lambda_grid = {0.0,  0.02, 0.04, 0.06, 0.08, 0.1,
                                     0.12, 0.14, 0.16, 0.18, 0.2};
  MatrixClass c_shape = MatrixClass::Acute;  // acute or obtuse
  int trials = 10;
  double box_radius = 0.0;  // 0 -> 10 ||x_true||_inf per trial
  double gauss_noise = 1e-3;
  double c_scale = 1.0;
  long long K = 1500;     // shared iteration budget
  double mu = 0.0;        // 0 -> per-trial data-driven step (see run manifest)
  int warm_start_iters = 50;
};

namespace detail {

// Practical fixed step for the phase solvers: the certified curvature bound
// over the whole box would stall a fixed-step method, so the step uses the
// local bound on a radius around the planted signal. Recorded in the run
// manifest; deterministic per trial.
inline double phase_step(const MatrixXd& A, const VectorXd& b, const MatrixXd& C,
                         double x_scale) {
  const double normA = spectral_norm(A);
  const double M = normA * x_scale;
  double row_sum = 0.0;
  for (int i = 0; i < C.rows(); ++i) row_sum = std::max(row_sum, C.row(i).lpNorm<1>());
  const double b_inf = b.size() > 0 ? b.lpNorm<Eigen::Infinity>() : 0.0;
  const double ell = 2.0 * normA * normA * (3.0 * M * M + b_inf + row_sum);
  return ell > 0 ? 0.5 / ell : 1.0;
}

inline VectorXd phase_warm_start(const BrlsInstance& ls_inst, VectorXd x, double mu, int iters) {
  const VectorXd empty(0);
  for (int t = 0; t < iters; ++t)
    x = project(ls_inst.X, x - mu * theta_grad_x(ls_inst, x, empty));
  return x;
}

inline VectorXd phase_lasso(const BrlsInstance& ls_inst, VectorXd x, double mu, long long K,
                            double weight) {
  const VectorXd empty(0);
  for (long long t = 0; t < K; ++t) {
    VectorXd v = x - mu * theta_grad_x(ls_inst, x, empty);
    for (int i = 0; i < v.size(); ++i) {
      const double tau = mu * weight;
      v(i) = v(i) > tau ? v(i) - tau : (v(i) < -tau ? v(i) + tau : 0.0);
    }
    x = project(ls_inst.X, v);  // exact prox of l1 + box, both separable
  }
  return x;
}

}  // namespace detail

/// One trial: Gaussian measurements, sparse planted signal, intensities
/// corrupted by small Gaussian noise plus a structured term C y with
/// y in [-delta, delta]^n. LS and LASSO run plain (proximal) projected
/// gradient, RLS runs pg_nonlinear on the transformed binary instance; all
/// share the start, step and budget. Emits mean worst-case errors and the
/// robustness gaps per evaluation level lambda.
inline ResultTable run_phase(const PhaseConfig& cfg, std::vector<ResultTable>* per_trial = nullptr) {
  if (cfg.c_shape != MatrixClass::Acute && cfg.c_shape != MatrixClass::Obtuse)
    throw std::invalid_argument("phase experiment supports acute or obtuse C");
  for (std::size_t i = 1; i < cfg.lambda_grid.size(); ++i)
    if (cfg.lambda_grid[i] < cfg.lambda_grid[i - 1] || cfg.lambda_grid.front() < 0)
      throw std::invalid_argument("lambda grid must be nonnegative ascending");
  if (cfg.trials < 1) throw std::invalid_argument("trials must be >= 1");

  const std::size_t levels = cfg.lambda_grid.size();
  std::vector<double> sum_ls(levels, 0.0), sum_lasso(levels, 0.0), sum_rls(levels, 0.0);

  for (int trial = 0; trial < cfg.trials; ++trial) {
    Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(trial));

    MatrixXd A(cfg.r, cfg.m);
    const double scale_a = 1.0 / std::sqrt(static_cast<double>(cfg.m));
    for (int i = 0; i < cfg.r; ++i)
      for (int j = 0; j < cfg.m; ++j) A(i, j) = scale_a * rng.normal();

    VectorXd x_true = VectorXd::Zero(cfg.m);
    {
      std::vector<int> perm(cfg.m);
      for (int i = 0; i < cfg.m; ++i) perm[i] = i;
      for (int i = cfg.m - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
      for (int k = 0; k < std::min(cfg.sparsity, cfg.m); ++k) x_true(perm[k]) = rng.normal();
    }

    const MatrixXd C = cfg.c_shape == MatrixClass::Acute
                           ? make_acute_matrix(rng, cfg.r, cfg.n, cfg.c_scale)
                           : make_obtuse_matrix(rng, cfg.r, cfg.n, cfg.c_scale);

    VectorXd y_noise(cfg.n);
    for (int i = 0; i < cfg.n; ++i) y_noise(i) = rng.uniform(-cfg.delta, cfg.delta);
    VectorXd b = (A * x_true).array().square();
    for (int i = 0; i < cfg.r; ++i) b(i) += cfg.gauss_noise * rng.normal();
    b += C * y_noise;

    const double x_inf = x_true.lpNorm<Eigen::Infinity>();
    const double radius = cfg.box_radius > 0 ? cfg.box_radius : 10.0 * std::max(0.1, x_inf);
    const FeasibleSet X = FeasibleSet::box(cfg.m, -radius, radius);
    const ResidualMap Fhat = ResidualMap::phase_retrieval(A, b);
    const BrlsInstance ls_inst(Fhat, MatrixXd(cfg.r, 0), X);

    const double mu =
        cfg.mu > 0 ? cfg.mu : detail::phase_step(A, b, 2.0 * cfg.delta * C, 2.0 * std::max(0.5, x_inf));

    VectorXd x_init(cfg.m);
    for (int i = 0; i < cfg.m; ++i) x_init(i) = 0.1 * rng.normal();
    const VectorXd x0 = detail::phase_warm_start(ls_inst, project(X, x_init), mu,
                                                 cfg.warm_start_iters);

    const std::uint64_t seed_ls = rng.next_word();
    const std::uint64_t seed_rls = rng.next_word();

    NonlinearRunConfig ls_run;
    ls_run.K = cfg.K;
    ls_run.mu = mu;
    ls_run.seed = seed_ls;
    ls_run.x0 = x0;
    ls_run.record_iterates = false;
    const VectorXd x_ls = pg_nonlinear(ls_inst, ls_run).x_hat;

    const VectorXd x_lasso = detail::phase_lasso(ls_inst, x0, mu, cfg.K, 1.0);

    const BrlsInstance rls_inst = hrls_to_brls(HrlsInstance(Fhat, C, cfg.delta, X));
    NonlinearRunConfig rls_run;
    rls_run.K = cfg.K;
    rls_run.mu = mu;
    rls_run.seed = seed_rls;
    rls_run.x0 = x0;
    rls_run.record_iterates = false;
    rls_run.inner_policy = cfg.c_shape == MatrixClass::Acute ? InnerPolicy::Auto
                                                             : InnerPolicy::ForceBruteForce;
    const VectorXd x_rls = pg_nonlinear(rls_inst, rls_run).x_hat;

    ResultTable trial_table;
    for (std::size_t li = 0; li < levels; ++li) {
      const double lambda = cfg.lambda_grid[li];
      const double e_ls = worst_case_error(Fhat, C, x_ls, lambda);
      const double e_lasso = worst_case_error(Fhat, C, x_lasso, lambda);
      const double e_rls = worst_case_error(Fhat, C, x_rls, lambda);
      sum_ls[li] += e_ls;
      sum_lasso[li] += e_lasso;
      sum_rls[li] += e_rls;
      if (per_trial) {
        trial_table.add("LS", lambda, "E_lambda", e_ls);
        trial_table.add("LASSO", lambda, "E_lambda", e_lasso);
        trial_table.add("RLS", lambda, "E_lambda", e_rls);
      }
    }
    if (per_trial) per_trial->push_back(std::move(trial_table));
  }

  ResultTable table;
  const double trials = static_cast<double>(cfg.trials);
  for (std::size_t li = 0; li < levels; ++li) {
    const double lambda = cfg.lambda_grid[li];
    table.add("LS", lambda, "E_lambda", sum_ls[li] / trials);
    table.add("LASSO", lambda, "E_lambda", sum_lasso[li] / trials);
    table.add("RLS", lambda, "E_lambda", sum_rls[li] / trials);
    table.add("RLS", lambda, "delta_ls", (sum_ls[li] - sum_rls[li]) / trials);
    table.add("RLS", lambda, "delta_lasso", (sum_lasso[li] - sum_rls[li]) / trials);
  }
  return table;
}

}  // namespace brls
