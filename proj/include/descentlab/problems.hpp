#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "descentlab/errors.hpp"
#include "descentlab/types.hpp"

namespace descentlab {

enum class ProblemKind {
  Quadratic,           // F(w) = 1/2 w'Qw + q'w
  LeastSquares,        // F(w) = 1/2 ||X'w - y||^2, X is p x n
  Logistic,            // F(w) = sum_i log(1 + exp(y_i x_i'w)), labels +-1
  CompositeL1,         // F(w) = f(w) + lambda ||w||_1 with smooth inner f
  FiniteSumQuadratic,  // F(w) = 1/n sum_i (1/2 w'Q_i w + q_i'w)
};

// Certified structure constants of an instance.  L is the gradient Lipschitz
// modulus of the smooth part; mu the convexity modulus (can be <= 0); L_avg
// the mean-squared component smoothness for finite sums (>= L); M a
// subgradient norm bound valid on ||w - w*|| <= region_radius (global when
// region_radius is absent).
struct StructureConstants {
  double L = 0.0;
  double mu = 0.0;
  std::optional<double> L_avg;
  std::optional<double> M;
  std::optional<double> F_star;
  std::optional<Weights> w_star;
  std::optional<double> region_radius;
};

struct QuadraticComponent {
  Matrix Q;
  Weights q;
};

// Spectral norm of a symmetric matrix by power iteration on A^2 with the
// fixed start vector (1,...,1)/sqrt(p).  Throws NumericFailure with the
// iteration count when the eigenvalue estimate has not stabilized.
double spectral_norm_power(const Matrix& A, double rel_tol = 1e-10,
                           int max_iters = 10000);

// An objective instance with exact oracles.  Immutable after construction;
// all oracles are pure and safe for concurrent use.
class ProblemInstance {
 public:
  // Empty instance; every oracle rejects it until a factory fills it in.
  ProblemInstance() = default;

  static ProblemInstance quadratic(Matrix Q, Weights q);
  static ProblemInstance least_squares(Matrix X, Weights y);
  static ProblemInstance logistic(Matrix X, Weights y);
  static ProblemInstance composite_l1(const ProblemInstance& inner, double lambda,
                                      std::optional<double> region_radius = {});
  static ProblemInstance finite_sum_quadratic(std::vector<QuadraticComponent> comps);

  ProblemKind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool is_convex() const { return convex_; }
  bool is_composite() const { return kind_ == ProblemKind::CompositeL1; }
  // Number of finite-sum components (0 when the kind has none).
  int num_components() const;
  double l1_weight() const { return lambda_; }
  const ProblemInstance& inner() const;

  // F(w); includes the l1 term for composite instances.
  double value(const Weights& w) const;
  // f(w), the smooth part only.
  double smooth_value(const Weights& w) const;
  // Gradient of the smooth part.
  Weights grad(const Weights& w) const;
  // Gradient of component i; averaging over all i reproduces grad exactly
  // (components of the logistic sum are scaled by n for that reason).
  Weights component_grad(int i, const Weights& w) const;
  // An element of the subdifferential of F; zero coordinates of the l1 term
  // contribute 0 (minimal-norm tie-break).
  Weights subgradient(const Weights& w) const;
  // Qv for the plain quadratic kind.
  Weights hessian_apply(const Weights& v) const;

  const StructureConstants& constants() const { return constants_; }
  // Recompute the certified constants from the data.
  StructureConstants certify_constants() const;

  // Raw data accessors (valid for the matching kind).
  const Matrix& Q() const;
  const Weights& q() const;
  const Matrix& X() const;
  const Weights& y() const;
  const std::vector<QuadraticComponent>& components() const;

 private:
  void check_dim(const Weights& w) const;

  ProblemKind kind_ = ProblemKind::Quadratic;
  int dim_ = 0;
  bool convex_ = false;
  double lambda_ = 0.0;
  std::optional<double> region_radius_;
  Matrix Q_;   // Quadratic
  Weights q_;
  Matrix X_;   // LeastSquares / Logistic (columns are samples)
  Weights y_;
  std::vector<QuadraticComponent> comps_;
  std::shared_ptr<const ProblemInstance> inner_;  // CompositeL1
  StructureConstants constants_;
};

}  // namespace descentlab
