#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace brls {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace detail {

inline double spectral_norm(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  return svd.singularValues()(0);
}

[[noreturn]] inline void fail_dim(const std::string& what) {
  throw std::invalid_argument("dimension mismatch: " + what);
}

}  // namespace detail

/// Residual map F: R^m -> R^r of the robust least squares objective
/// Theta(x,y) = 1/2 ||F(x) - C y||^2.
class ResidualMap {
 public:
  enum class Kind { Affine, PhaseRetrieval, Custom };

  using EvalFn = std::function<VectorXd(const VectorXd&)>;
  using JacobianFn = std::function<MatrixXd(const VectorXd&)>;

  /// F(x) = A x + b0, Jacobian constantly A.
  static ResidualMap affine(MatrixXd A, VectorXd b0) {
    if (b0.size() != A.rows()) detail::fail_dim("affine offset vs A rows");
    ResidualMap f;
    f.kind_ = Kind::Affine;
    f.A_ = std::move(A);
    f.offset_ = std::move(b0);
    return f;
  }

  /// F(x) = (A x)^2 - b elementwise, Jacobian 2 diag(A x) A.
  static ResidualMap phase_retrieval(MatrixXd A, VectorXd b) {
    if (b.size() != A.rows()) detail::fail_dim("intensities b vs A rows");
    ResidualMap f;
    f.kind_ = Kind::PhaseRetrieval;
    f.A_ = std::move(A);
    f.offset_ = std::move(b);
    return f;
  }

  /// User-supplied map. Lipschitz constants (L for Theta(.,y), ell for its
  /// gradient) must be provided by the caller if outer solvers are to derive
  /// default iteration counts; they are never sampled.
  static ResidualMap custom(int rows, int cols, EvalFn eval, JacobianFn jacobian,
                            std::optional<std::pair<double, double>> lipschitz = std::nullopt) {
    ResidualMap f;
    f.kind_ = Kind::Custom;
    f.custom_rows_ = rows;
    f.custom_cols_ = cols;
    f.eval_ = std::move(eval);
    f.jacobian_ = std::move(jacobian);
    f.custom_lipschitz_ = lipschitz;
    return f;
  }

  Kind kind() const { return kind_; }
  int rows() const { return kind_ == Kind::Custom ? custom_rows_ : static_cast<int>(A_.rows()); }
  int cols() const { return kind_ == Kind::Custom ? custom_cols_ : static_cast<int>(A_.cols()); }

  const MatrixXd& matrix() const { return A_; }
  const VectorXd& offset() const { return offset_; }
  const std::optional<std::pair<double, double>>& custom_lipschitz() const {
    return custom_lipschitz_;
  }

  VectorXd operator()(const VectorXd& x) const {
    if (x.size() != cols()) detail::fail_dim("x vs residual map domain");
    switch (kind_) {
      case Kind::Affine:
        return A_ * x + offset_;
      case Kind::PhaseRetrieval:
        return (A_ * x).array().square().matrix() - offset_;
      case Kind::Custom:
        return eval_(x);
    }
    throw std::logic_error("unreachable");
  }

  MatrixXd jacobian(const VectorXd& x) const {
    if (x.size() != cols()) detail::fail_dim("x vs residual map domain");
    switch (kind_) {
      case Kind::Affine:
        return A_;
      case Kind::PhaseRetrieval:
        return 2.0 * (A_ * x).asDiagonal() * A_;
      case Kind::Custom:
        return jacobian_(x);
    }
    throw std::logic_error("unreachable");
  }

 private:
  Kind kind_ = Kind::Affine;
  MatrixXd A_;
  VectorXd offset_;
  EvalFn eval_;
  JacobianFn jacobian_;
  int custom_rows_ = 0;
  int custom_cols_ = 0;
  std::optional<std::pair<double, double>> custom_lipschitz_;
};

/// Convex compact feasible set for the outer variable: axis box or
/// Euclidean ball, both with exact projection.
class FeasibleSet {
 public:
  enum class Kind { Box, Ball };

  static FeasibleSet box(VectorXd lo, VectorXd hi) {
    if (lo.size() != hi.size()) detail::fail_dim("box bounds");
    for (int i = 0; i < lo.size(); ++i)
      if (lo(i) > hi(i)) throw std::invalid_argument("box requires lo <= hi componentwise");
    FeasibleSet s;
    s.kind_ = Kind::Box;
    s.lo_ = std::move(lo);
    s.hi_ = std::move(hi);
    return s;
  }

  static FeasibleSet box(int dim, double lo, double hi) {
    return box(VectorXd::Constant(dim, lo), VectorXd::Constant(dim, hi));
  }

  static FeasibleSet ball(VectorXd center, double radius) {
    if (!(radius > 0)) throw std::invalid_argument("ball requires radius > 0");
    FeasibleSet s;
    s.kind_ = Kind::Ball;
    s.center_ = std::move(center);
    s.radius_ = radius;
    return s;
  }

  Kind kind() const { return kind_; }
  int dim() const { return kind_ == Kind::Box ? static_cast<int>(lo_.size()) : static_cast<int>(center_.size()); }
  const VectorXd& lo() const { return lo_; }
  const VectorXd& hi() const { return hi_; }
  const VectorXd& center() const { return center_; }
  double radius() const { return radius_; }

  bool contains(const VectorXd& x, double tol = 0.0) const {
    if (x.size() != dim()) return false;
    if (kind_ == Kind::Box)
      return (x.array() >= lo_.array() - tol).all() && (x.array() <= hi_.array() + tol).all();
    return (x - center_).norm() <= radius_ + tol;
  }

 private:
  Kind kind_ = Kind::Box;
  VectorXd lo_, hi_;
  VectorXd center_;
  double radius_ = 0.0;
};

/// Euclidean projection onto X: componentwise clamp for a box, radial
/// scaling for a ball. Idempotent and 1-Lipschitz.
inline VectorXd project(const FeasibleSet& X, const VectorXd& x) {
  if (x.size() != X.dim()) detail::fail_dim("x vs feasible set");
  if (X.kind() == FeasibleSet::Kind::Box)
    return x.cwiseMax(X.lo()).cwiseMin(X.hi());
  const VectorXd d = x - X.center();
  const double norm = d.norm();
  if (norm <= X.radius()) return x;
  return X.center() + (X.radius() / norm) * d;
}

inline double diameter(const FeasibleSet& X) {
  if (X.kind() == FeasibleSet::Kind::Box) return (X.hi() - X.lo()).norm();
  return 2.0 * X.radius();
}

/// The Binary Robust Least Squares problem
///   min_{x in X} max_{y in {0,1}^n} Theta(x,y) = 1/2 ||F(x) - C y||^2.
///
/// The modularity machinery (classify, angles) assumes every column of C is
/// nonzero and rejects zero columns; the instance itself stays evaluable with
/// zero columns (C = 0 is the classical least squares degenerate case).
struct BrlsInstance {
  ResidualMap F;
  MatrixXd C;
  FeasibleSet X;

  BrlsInstance(ResidualMap F_, MatrixXd C_, FeasibleSet X_)
      : F(std::move(F_)), C(std::move(C_)), X(std::move(X_)) {
    if (C.rows() != F.rows()) detail::fail_dim("C rows vs residual dimension");
    if (X.dim() != F.cols()) detail::fail_dim("feasible set vs residual map domain");
  }

  int r() const { return F.rows(); }
  int m() const { return F.cols(); }
  int n() const { return static_cast<int>(C.cols()); }
};

/// Hypercube-uncertainty variant min_x max_{z in [-delta,delta]^n}
/// 1/2 ||Fhat(x) - Chat z||^2, reducible to BRLS by an affine change of
/// variables.
struct HrlsInstance {
  ResidualMap Fhat;
  MatrixXd Chat;
  double delta;
  FeasibleSet X;

  HrlsInstance(ResidualMap Fhat_, MatrixXd Chat_, double delta_, FeasibleSet X_)
      : Fhat(std::move(Fhat_)), Chat(std::move(Chat_)), delta(delta_), X(std::move(X_)) {
    if (!(delta > 0)) throw std::invalid_argument("hypercube half-width delta must be > 0");
    if (Chat.rows() != Fhat.rows()) detail::fail_dim("Chat rows vs residual dimension");
    if (X.dim() != Fhat.cols()) detail::fail_dim("feasible set vs residual map domain");
  }
};

/// Binary classification with partially known label corruption: observed
/// labels b in {0,1}^r, suspicious index set I. Owns the induced diagonal
/// matrix with entries 1 - 2 b_i on I (the paper's diameter symbol is a
/// different D and lives with FeasibleSet).
struct LabelUncertaintyModel {
  ResidualMap Fhat;
  VectorXd b;           // entries in {0,1}
  std::vector<int> I;   // 0-based indices into [0, r)
  FeasibleSet X;

  LabelUncertaintyModel(ResidualMap Fhat_, VectorXd b_, std::vector<int> I_, FeasibleSet X_)
      : Fhat(std::move(Fhat_)), b(std::move(b_)), I(std::move(I_)), X(std::move(X_)) {
    if (b.size() != Fhat.rows()) detail::fail_dim("labels b vs residual dimension");
    for (int i = 0; i < b.size(); ++i)
      if (b(i) != 0.0 && b(i) != 1.0)
        throw std::invalid_argument("labels must be binary");
    for (int idx : I)
      if (idx < 0 || idx >= b.size())
        throw std::invalid_argument("index set I out of range");
  }
};

/// Inner objective written as the quadratic 1/2 y' Sigma y - u' y + c0 with
/// Sigma = C'C, u = C'F(x), c0 = 1/2 ||F(x)||^2. Agrees with theta_eval on
/// all of [0,1]^n.
struct InnerQuadratic {
  MatrixXd Sigma;
  VectorXd u;
  double c0 = 0.0;

  double eval(const VectorXd& y) const {
    return 0.5 * y.dot(Sigma * y) - u.dot(y) + c0;
  }
};

inline double theta_eval(const BrlsInstance& inst, const VectorXd& x, const VectorXd& y) {
  if (y.size() != inst.n()) detail::fail_dim("y vs noise dimension");
  return 0.5 * (inst.F(x) - inst.C * y).squaredNorm();
}

/// Gradient of Theta in x: J_F(x)' (F(x) - C y). Specialized per variant so
/// the phase-retrieval Jacobian is never materialized.
inline VectorXd theta_grad_x(const BrlsInstance& inst, const VectorXd& x, const VectorXd& y) {
  if (y.size() != inst.n()) detail::fail_dim("y vs noise dimension");
  const VectorXd residual = inst.F(x) - inst.C * y;
  switch (inst.F.kind()) {
    case ResidualMap::Kind::Affine:
      return inst.F.matrix().transpose() * residual;
    case ResidualMap::Kind::PhaseRetrieval: {
      const VectorXd s = inst.F.matrix() * x;
      return 2.0 * inst.F.matrix().transpose() * s.cwiseProduct(residual);
    }
    case ResidualMap::Kind::Custom:
      return inst.F.jacobian(x).transpose() * residual;
  }
  throw std::logic_error("unreachable");
}

inline InnerQuadratic inner_quadratic(const BrlsInstance& inst, const VectorXd& x) {
  const VectorXd fx = inst.F(x);
  InnerQuadratic q;
  q.Sigma = inst.C.transpose() * inst.C;
  q.u = inst.C.transpose() * fx;
  q.c0 = 0.5 * fx.squaredNorm();
  return q;
}

/// Change of variables y = z/(2 delta) + 1/2: F(x) = Fhat(x) + delta Chat 1
/// and C = 2 delta Chat. Objective values agree pointwise under the map and
/// the inner value functions coincide.
inline BrlsInstance hrls_to_brls(const HrlsInstance& h) {
  const VectorXd shift = h.delta * h.Chat * VectorXd::Ones(h.Chat.cols());
  const MatrixXd C = 2.0 * h.delta * h.Chat;
  switch (h.Fhat.kind()) {
    case ResidualMap::Kind::Affine:
      return BrlsInstance(ResidualMap::affine(h.Fhat.matrix(), h.Fhat.offset() + shift), C, h.X);
    case ResidualMap::Kind::PhaseRetrieval:
      // (Ax)^2 - b + shift = (Ax)^2 - (b - shift): stays in the variant.
      return BrlsInstance(ResidualMap::phase_retrieval(h.Fhat.matrix(), h.Fhat.offset() - shift),
                          C, h.X);
    case ResidualMap::Kind::Custom: {
      // Lipschitz constants of the shifted map differ; the caller must
      // re-supply them if outer defaults are wanted.
      const ResidualMap base = h.Fhat;
      auto eval = [base, shift](const VectorXd& x) { return base(x) + shift; };
      auto jac = [base](const VectorXd& x) { return base.jacobian(x); };
      return BrlsInstance(
          ResidualMap::custom(base.rows(), base.cols(), std::move(eval), std::move(jac)), C, h.X);
    }
  }
  throw std::logic_error("unreachable");
}

/// F(x) = Fhat(x) - b and C = D restricted to the columns indexed by I: the
/// columns for i outside I are identically zero and are dropped, so the
/// nonzero-column assumption on C holds and n becomes |I|. I empty yields a
/// classical least squares instance with n = 0.
inline BrlsInstance label_model_to_brls(const LabelUncertaintyModel& model) {
  const int r = model.Fhat.rows();
  std::vector<int> idx = model.I;
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  MatrixXd C = MatrixXd::Zero(r, static_cast<int>(idx.size()));
  for (int k = 0; k < static_cast<int>(idx.size()); ++k)
    C(idx[k], k) = 1.0 - 2.0 * model.b(idx[k]);

  switch (model.Fhat.kind()) {
    case ResidualMap::Kind::Affine:
      return BrlsInstance(ResidualMap::affine(model.Fhat.matrix(), model.Fhat.offset() - model.b),
                          C, model.X);
    case ResidualMap::Kind::PhaseRetrieval:
      return BrlsInstance(
          ResidualMap::phase_retrieval(model.Fhat.matrix(), model.Fhat.offset() + model.b), C,
          model.X);
    case ResidualMap::Kind::Custom: {
      const ResidualMap base = model.Fhat;
      const VectorXd b = model.b;
      auto eval = [base, b](const VectorXd& x) { return base(x) - b; };
      auto jac = [base](const VectorXd& x) { return base.jacobian(x); };
      return BrlsInstance(
          ResidualMap::custom(base.rows(), base.cols(), std::move(eval), std::move(jac)), C,
          model.X);
    }
  }
  throw std::logic_error("unreachable");
}

struct LipschitzEstimates {
  double L = 0.0;    // uniform Lipschitz constant of Theta(.,y) over X, y in [0,1]^n
  double ell = 0.0;  // uniform Lipschitz constant of grad_x Theta(.,y)
};

namespace detail {

inline double max_norm_over(const FeasibleSet& X) {
  if (X.kind() == FeasibleSet::Kind::Box) {
    double s = 0.0;
    for (int i = 0; i < X.dim(); ++i)
      s += std::max(X.lo()(i) * X.lo()(i), X.hi()(i) * X.hi()(i));
    return std::sqrt(s);
  }
  return X.center().norm() + X.radius();
}

// Exact max of ||A x||_inf over a box (per-row interval endpoints) or a
// certified bound over a ball.
inline double max_inf_norm_Ax(const MatrixXd& A, const FeasibleSet& X) {
  double best = 0.0;
  if (X.kind() == FeasibleSet::Kind::Box) {
    for (int i = 0; i < A.rows(); ++i) {
      double hi = 0.0, lo = 0.0;
      for (int j = 0; j < A.cols(); ++j) {
        const double a = A(i, j);
        hi += a > 0 ? a * X.hi()(j) : a * X.lo()(j);
        lo += a > 0 ? a * X.lo()(j) : a * X.hi()(j);
      }
      best = std::max(best, std::max(std::abs(hi), std::abs(lo)));
    }
  } else {
    for (int i = 0; i < A.rows(); ++i)
      best = std::max(best, std::abs(A.row(i).dot(X.center())) + A.row(i).norm() * X.radius());
  }
  return best;
}

}  // namespace detail

/// Certified upper bounds (L, ell) from operator norms, never sampled
/// estimates; any upper bound keeps the iteration-count formulas valid.
/// Custom maps must carry their own constants.
inline LipschitzEstimates lipschitz_estimates(const BrlsInstance& inst) {
  const double normC = detail::spectral_norm(inst.C);
  const double sqrt_n = std::sqrt(static_cast<double>(inst.n()));
  switch (inst.F.kind()) {
    case ResidualMap::Kind::Affine: {
      const double normA = detail::spectral_norm(inst.F.matrix());
      const double R = detail::max_norm_over(inst.X);
      LipschitzEstimates est;
      est.L = normA * (normA * R + inst.F.offset().norm() + normC * sqrt_n);
      est.ell = normA * normA;
      return est;
    }
    case ResidualMap::Kind::PhaseRetrieval: {
      const MatrixXd& A = inst.F.matrix();
      const VectorXd& b = inst.F.offset();
      const double normA = detail::spectral_norm(A);
      const double M = detail::max_inf_norm_Ax(A, inst.X);
      const double resid_bound =
          std::sqrt(static_cast<double>(inst.r())) * M * M + b.norm() + normC * sqrt_n;
      double row_sum = 0.0;
      for (int i = 0; i < inst.C.rows(); ++i)
        row_sum = std::max(row_sum, inst.C.row(i).lpNorm<1>());
      const double b_inf = b.size() > 0 ? b.lpNorm<Eigen::Infinity>() : 0.0;
      LipschitzEstimates est;
      est.L = 2.0 * normA * M * resid_bound;
      est.ell = 2.0 * normA * normA * (3.0 * M * M + b_inf + row_sum);
      return est;
    }
    case ResidualMap::Kind::Custom:
      if (inst.F.custom_lipschitz()) {
        LipschitzEstimates est;
        est.L = inst.F.custom_lipschitz()->first;
        est.ell = inst.F.custom_lipschitz()->second;
        return est;
      }
      throw std::invalid_argument(
          "custom residual maps must supply their own (L, ell); the library never samples them");
  }
  throw std::logic_error("unreachable");
}

}  // namespace brls
