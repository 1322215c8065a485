#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "descentlab/problems.hpp"

namespace dltest {

using descentlab::Matrix;
using descentlab::ProblemInstance;
using descentlab::QuadraticComponent;
using descentlab::Weights;

inline Weights random_vector(std::mt19937_64& rng, int p, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Weights w(p);
  for (int i = 0; i < p; ++i) w[i] = g(rng);
  return w;
}

// Symmetric positive definite matrix with eigenvalues in [lo, hi].
inline Matrix random_spd(std::mt19937_64& rng, int p, double lo, double hi) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix A(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) A(i, j) = g(rng);
  const Eigen::HouseholderQR<Matrix> qr(A);
  const Matrix Qorth = qr.householderQ();
  std::uniform_real_distribution<double> u(lo, hi);
  Weights eig(p);
  for (int i = 0; i < p; ++i) eig[i] = u(rng);
  return Qorth * eig.asDiagonal() * Qorth.transpose();
}

// Scalar finite-sum fixture with components 1/2 (w - a_i)^2 for a = (0, 2, 4);
// mean objective minimized at w = 2.
inline ProblemInstance three_anchor_fixture() {
  std::vector<QuadraticComponent> comps;
  for (double a : {0.0, 2.0, 4.0}) {
    Matrix Q(1, 1);
    Q(0, 0) = 1.0;
    Weights q(1);
    q[0] = -a;
    comps.push_back({Q, q});
  }
  return ProblemInstance::finite_sum_quadratic(std::move(comps));
}

// F(w) = ||w||_1 in R^p, built as a composite with a zero smooth part.
inline ProblemInstance l1_norm_fixture(int p) {
  return ProblemInstance::composite_l1(
      ProblemInstance::quadratic(Matrix::Zero(p, p), Weights::Zero(p)), 1.0);
}

// Central finite difference of F at w.
inline Weights numeric_gradient(const ProblemInstance& problem, const Weights& w) {
  const double h = 1e-6 * (1.0 + w.norm());
  Weights g(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    Weights wp = w, wm = w;
    wp[i] += h;
    wm[i] -= h;
    g[i] = (problem.smooth_value(wp) - problem.smooth_value(wm)) / (2.0 * h);
  }
  return g;
}

}  // namespace dltest
