#include "descentlab/problems.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

namespace descentlab {

namespace {

constexpr double kSymTol = 1e-12;

void require_symmetric(const Matrix& Q, const char* what) {
  if (Q.rows() != Q.cols()) {
    throw InvalidArgument(std::string(what) + ": matrix must be square");
  }
  const double asym = (Q - Q.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  if (asym > kSymTol * scale) {
    throw InvalidArgument(std::string(what) + ": matrix is not symmetric");
  }
}

// log(1 + exp(z)) without overflow.
double log1p_exp(double z) {
  if (z > 0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

// 1 / (1 + exp(-z)) without overflow.
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double min_eigenvalue(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

double spectral_norm_power(const Matrix& A, double rel_tol, int max_iters) {
  const auto p = A.rows();
  if (p == 0) return 0.0;
  // Fixed pseudorandom unit start: deterministic, and unlike structured
  // vectors it is not orthogonal to the top eigenvector of plain matrices
  // (the all-ones vector is, e.g., for [[2,-1],[-1,2]]).
  std::mt19937_64 rng(0x5eed5eedULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Weights v(p);
  for (Eigen::Index i = 0; i < p; ++i) v[i] = gauss(rng);
  v /= v.norm();
  // Iterate on A^2 so the sign of extreme eigenvalues cannot stall progress.
  for (int it = 0; it < max_iters; ++it) {
    Weights av = A * (A * v);
    const double mu = v.dot(av);  // estimate of lambda^2
    if ((av - mu * v).norm() <= rel_tol * std::max(1.0, std::abs(mu))) {
      return std::sqrt(std::max(0.0, mu));
    }
    const double norm = av.norm();
    if (norm == 0.0) return 0.0;
    v = av / norm;
  }
  throw NumericFailure("power iteration did not converge", max_iters);
}

ProblemInstance ProblemInstance::quadratic(Matrix Q, Weights q) {
  require_symmetric(Q, "quadratic");
  if (Q.rows() != q.size()) {
    throw InvalidArgument("quadratic: Q and q dimensions disagree");
  }
  ProblemInstance p;
  p.kind_ = ProblemKind::Quadratic;
  p.dim_ = static_cast<int>(q.size());
  p.Q_ = std::move(Q);
  p.q_ = std::move(q);
  p.constants_ = p.certify_constants();
  p.convex_ = p.constants_.mu >= -1e-10;
  return p;
}

ProblemInstance ProblemInstance::least_squares(Matrix X, Weights y) {
  if (X.cols() != y.size()) {
    throw InvalidArgument("least_squares: X columns must match y length");
  }
  ProblemInstance p;
  p.kind_ = ProblemKind::LeastSquares;
  p.dim_ = static_cast<int>(X.rows());
  p.X_ = std::move(X);
  p.y_ = std::move(y);
  p.constants_ = p.certify_constants();
  p.convex_ = true;
  return p;
}

ProblemInstance ProblemInstance::logistic(Matrix X, Weights y) {
  if (X.cols() != y.size()) {
    throw InvalidArgument("logistic: X columns must match y length");
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 1.0 && y[i] != -1.0) {
      throw InvalidArgument("logistic: labels must be +1 or -1");
    }
  }
  ProblemInstance p;
  p.kind_ = ProblemKind::Logistic;
  p.dim_ = static_cast<int>(X.rows());
  p.X_ = std::move(X);
  p.y_ = std::move(y);
  p.constants_ = p.certify_constants();
  p.convex_ = true;
  return p;
}

ProblemInstance ProblemInstance::composite_l1(const ProblemInstance& inner, double lambda,
                                              std::optional<double> region_radius) {
  if (inner.is_composite()) {
    throw InvalidArgument("composite_l1: inner problem must be a smooth kind");
  }
  if (lambda < 0) {
    throw InvalidArgument("composite_l1: lambda must be nonnegative");
  }
  ProblemInstance p;
  p.kind_ = ProblemKind::CompositeL1;
  p.dim_ = inner.dim();
  p.lambda_ = lambda;
  p.region_radius_ = region_radius;
  p.inner_ = std::make_shared<const ProblemInstance>(inner);
  p.convex_ = inner.is_convex();
  p.constants_ = p.certify_constants();
  return p;
}

ProblemInstance ProblemInstance::finite_sum_quadratic(std::vector<QuadraticComponent> comps) {
  if (comps.empty()) {
    throw InvalidArgument("finite_sum_quadratic: needs at least one component");
  }
  const auto p0 = comps.front().q.size();
  for (const auto& c : comps) {
    require_symmetric(c.Q, "finite_sum_quadratic");
    if (c.Q.rows() != p0 || c.q.size() != p0) {
      throw InvalidArgument("finite_sum_quadratic: component dimensions disagree");
    }
  }
  ProblemInstance p;
  p.kind_ = ProblemKind::FiniteSumQuadratic;
  p.dim_ = static_cast<int>(p0);
  p.comps_ = std::move(comps);
  p.constants_ = p.certify_constants();
  p.convex_ = p.constants_.mu >= -1e-10;
  return p;
}

int ProblemInstance::num_components() const {
  switch (kind_) {
    case ProblemKind::FiniteSumQuadratic:
      return static_cast<int>(comps_.size());
    case ProblemKind::Logistic:
      return static_cast<int>(y_.size());
    default:
      return 0;
  }
}

const ProblemInstance& ProblemInstance::inner() const {
  if (!inner_) throw InvalidArgument("inner(): not a composite instance");
  return *inner_;
}

void ProblemInstance::check_dim(const Weights& w) const {
  if (w.size() != dim_) {
    throw InvalidArgument("weights dimension does not match problem dimension");
  }
}

double ProblemInstance::smooth_value(const Weights& w) const {
  check_dim(w);
  switch (kind_) {
    case ProblemKind::Quadratic:
      return 0.5 * w.dot(Q_ * w) + q_.dot(w);
    case ProblemKind::LeastSquares:
      return 0.5 * (X_.transpose() * w - y_).squaredNorm();
    case ProblemKind::Logistic: {
      double s = 0.0;
      for (Eigen::Index i = 0; i < y_.size(); ++i) {
        s += log1p_exp(y_[i] * X_.col(i).dot(w));
      }
      return s;
    }
    case ProblemKind::CompositeL1:
      return inner_->smooth_value(w);
    case ProblemKind::FiniteSumQuadratic: {
      double s = 0.0;
      for (const auto& c : comps_) {
        s += 0.5 * w.dot(c.Q * w) + c.q.dot(w);
      }
      return s / static_cast<double>(comps_.size());
    }
  }
  throw InvalidArgument("unknown problem kind");
}

double ProblemInstance::value(const Weights& w) const {
  if (kind_ == ProblemKind::CompositeL1) {
    return inner_->smooth_value(w) + lambda_ * w.lpNorm<1>();
  }
  return smooth_value(w);
}

Weights ProblemInstance::grad(const Weights& w) const {
  check_dim(w);
  switch (kind_) {
    case ProblemKind::Quadratic:
      return Q_ * w + q_;
    case ProblemKind::LeastSquares:
      return X_ * (X_.transpose() * w - y_);
    case ProblemKind::Logistic:
    case ProblemKind::FiniteSumQuadratic: {
      // Mean of the component gradients, fixed summation order, so that
      // (1/n) sum_i component_grad(i, w) reproduces this value exactly.
      const int n = num_components();
      Weights g = Weights::Zero(dim_);
      for (int i = 0; i < n; ++i) g += component_grad(i, w);
      return g / static_cast<double>(n);
    }
    case ProblemKind::CompositeL1:
      return inner_->grad(w);
  }
  throw InvalidArgument("unknown problem kind");
}

Weights ProblemInstance::component_grad(int i, const Weights& w) const {
  check_dim(w);
  const int n = num_components();
  if (n == 0) {
    throw Unsupported("component_grad: problem has no finite-sum components");
  }
  if (i < 0 || i >= n) {
    throw InvalidArgument("component_grad: index out of range");
  }
  if (kind_ == ProblemKind::FiniteSumQuadratic) {
    return comps_[i].Q * w + comps_[i].q;
  }
  // Logistic per-sample term, scaled by n so the mean over i equals grad.
  const double s = sigmoid(y_[i] * X_.col(i).dot(w));
  return (static_cast<double>(n) * y_[i] * s) * X_.col(i);
}

Weights ProblemInstance::subgradient(const Weights& w) const {
  check_dim(w);
  if (kind_ == ProblemKind::CompositeL1) {
    if (!convex_) {
      throw Unsupported("subgradient: nonconvex nonsmooth instance");
    }
    Weights g = inner_->grad(w);
    for (Eigen::Index j = 0; j < w.size(); ++j) {
      if (w[j] > 0) g[j] += lambda_;
      else if (w[j] < 0) g[j] -= lambda_;
      // sign(0) contributes 0: minimal-norm subgradient at the kink
    }
    return g;
  }
  return grad(w);
}

Weights ProblemInstance::hessian_apply(const Weights& v) const {
  if (kind_ != ProblemKind::Quadratic) {
    throw Unsupported("hessian_apply: only available for the quadratic kind");
  }
  check_dim(v);
  return Q_ * v;
}

const Matrix& ProblemInstance::Q() const {
  if (kind_ != ProblemKind::Quadratic) throw InvalidArgument("Q(): wrong kind");
  return Q_;
}
const Weights& ProblemInstance::q() const {
  if (kind_ != ProblemKind::Quadratic) throw InvalidArgument("q(): wrong kind");
  return q_;
}
const Matrix& ProblemInstance::X() const {
  if (kind_ != ProblemKind::LeastSquares && kind_ != ProblemKind::Logistic) {
    throw InvalidArgument("X(): wrong kind");
  }
  return X_;
}
const Weights& ProblemInstance::y() const {
  if (kind_ != ProblemKind::LeastSquares && kind_ != ProblemKind::Logistic) {
    throw InvalidArgument("y(): wrong kind");
  }
  return y_;
}
const std::vector<QuadraticComponent>& ProblemInstance::components() const {
  if (kind_ != ProblemKind::FiniteSumQuadratic) {
    throw InvalidArgument("components(): wrong kind");
  }
  return comps_;
}

StructureConstants ProblemInstance::certify_constants() const {
  StructureConstants c;
  switch (kind_) {
    case ProblemKind::Quadratic: {
      c.L = spectral_norm_power(Q_);
      c.mu = min_eigenvalue(Q_);
      if (c.mu >= -1e-10) {
        // Stationary point of the convex quadratic: solve Q w = -q.
        Weights ws;
        if (c.mu > 1e-12 * std::max(1.0, c.L)) {
          ws = Q_.ldlt().solve(-q_);
        } else {
          ws = Q_.completeOrthogonalDecomposition().solve(-q_);
        }
        if ((Q_ * ws + q_).norm() <= 1e-8 * (1.0 + c.L)) {
          c.w_star = ws;
          c.F_star = 0.5 * ws.dot(Q_ * ws) + q_.dot(ws);
        }
      }
      break;
    }
    case ProblemKind::LeastSquares: {
      const Matrix G = X_ * X_.transpose();
      c.L = spectral_norm_power(G);
      c.mu = std::max(0.0, min_eigenvalue(G));
      Weights ws = X_.transpose().completeOrthogonalDecomposition().solve(y_);
      if ((X_ * (X_.transpose() * ws - y_)).norm() <= 1e-8 * (1.0 + c.L)) {
        c.w_star = ws;
        c.F_star = 0.5 * (X_.transpose() * ws - y_).squaredNorm();
      }
      break;
    }
    case ProblemKind::Logistic: {
      const Matrix G = X_ * X_.transpose();
      c.L = 0.25 * spectral_norm_power(G);
      c.mu = 0.0;
      // The infimum is generally not attained: no w_star / F_star.
      break;
    }
    case ProblemKind::FiniteSumQuadratic: {
      const double n = static_cast<double>(comps_.size());
      Matrix Qbar = Matrix::Zero(dim_, dim_);
      Matrix Qsq = Matrix::Zero(dim_, dim_);
      Weights qbar = Weights::Zero(dim_);
      for (const auto& comp : comps_) {
        Qbar += comp.Q;
        Qsq += comp.Q * comp.Q;
        qbar += comp.q;
      }
      Qbar /= n;
      Qsq /= n;
      qbar /= n;
      c.L = spectral_norm_power(Qbar);
      // Mean-squared component smoothness; always >= L.
      c.L_avg = std::sqrt(spectral_norm_power(Qsq));
      c.mu = min_eigenvalue(Qbar);
      if (c.mu >= -1e-10) {
        Weights ws;
        if (c.mu > 1e-12 * std::max(1.0, c.L)) {
          ws = Qbar.ldlt().solve(-qbar);
        } else {
          ws = Qbar.completeOrthogonalDecomposition().solve(-qbar);
        }
        if ((Qbar * ws + qbar).norm() <= 1e-8 * (1.0 + c.L)) {
          c.w_star = ws;
          c.F_star = value(ws);
        }
      }
      break;
    }
    case ProblemKind::CompositeL1: {
      const StructureConstants ic = inner_->constants();
      c.L = ic.L;
      c.mu = ic.mu;
      c.region_radius = region_radius_;
      const double p = static_cast<double>(dim_);
      if (c.L == 0.0) {
        // Affine smooth part: the gradient is a constant vector.
        Weights g0 = inner_->grad(Weights::Zero(dim_));
        c.M = g0.norm() + lambda_ * std::sqrt(p);
        if (g0.cwiseAbs().maxCoeff() <= lambda_) {
          c.w_star = Weights::Zero(dim_);
          c.F_star = value(*c.w_star);
        }
      } else if (convex_ || ic.mu >= -1e-10) {
        // Proximal-gradient fixed point of f + lambda ||.||_1.
        const double eta = 1.0 / c.L;
        const double thr = eta * lambda_;
        Weights w = Weights::Zero(dim_);
        const double tol = 1e-13 * (1.0 + c.L);
        for (long it = 0; it < 2000000; ++it) {
          Weights u = w - eta * inner_->grad(w);
          Weights next(dim_);
          for (Eigen::Index j = 0; j < next.size(); ++j) {
            if (u[j] > thr) next[j] = u[j] - thr;
            else if (u[j] < -thr) next[j] = u[j] + thr;
            else next[j] = 0.0;
          }
          const double move = (next - w).norm() / eta;
          w = next;
          if (move <= tol) break;
        }
        c.w_star = w;
        c.F_star = value(w);
        if (region_radius_) {
          c.M = inner_->grad(w).norm() + c.L * *region_radius_ +
                lambda_ * std::sqrt(p);
        }
      }
      break;
    }
  }
  return c;
}

}  // namespace descentlab
