#pragma once

#include <functional>
#include <vector>

#include "descentlab/problems.hpp"
#include "descentlab/types.hpp"

namespace descentlab {

enum class ProxKind { Zero, L1, SqL2, Box, L2Ball, GroupL2, ScalarSeparable };

// Differentiable scalar regularizer g with first and second derivatives,
// applied coordinate-wise through the optimality equation.
struct ScalarFunction {
  std::function<double(double)> value;
  std::function<double(double)> deriv;
  std::function<double(double)> second;
};

struct ProxSpec {
  ProxKind kind = ProxKind::Zero;
  double gamma = 1.0;
  double weight = 0.0;  // lambda for L1 / SqL2 / GroupL2
  Weights lo, hi;       // Box bounds
  double radius = 0.0;  // L2Ball
  std::vector<std::vector<int>> blocks;  // GroupL2 partition of {0..p-1}
  ScalarFunction scalar;

  static ProxSpec zero(double gamma = 1.0);
  static ProxSpec l1(double lambda, double gamma = 1.0);
  static ProxSpec sq_l2(double lambda, double gamma = 1.0);
  static ProxSpec box(Weights lo, Weights hi, double gamma = 1.0);
  static ProxSpec l2_ball(double radius, double gamma = 1.0);
  static ProxSpec group_l2(std::vector<std::vector<int>> blocks, double lambda,
                           double gamma = 1.0);
  static ProxSpec scalar_separable(ScalarFunction g, double gamma = 1.0);
};

// argmin_z { gamma g(z) + 1/2 ||z - w||^2 }.
Weights prox(const ProxSpec& spec, const Weights& w);
Weights prox(const ProxSpec& spec, double gamma, const Weights& w);

// Same point computed through the conjugate: w - gamma prox_{g*/gamma}(w/gamma).
// Implemented for L1 (linf-ball projection) and GroupL2 (l2-ball projection).
Weights prox_via_moreau(const ProxSpec& spec, const Weights& w);
Weights prox_via_moreau(const ProxSpec& spec, double gamma, const Weights& w);

// g(z) for the spec (indicator kinds return 0 inside, throw outside).
double prox_penalty(const ProxSpec& spec, const Weights& z);

// G_beta(w) = (w - prox_{beta g}(w - beta grad f(w))) / beta.
Weights gradient_mapping(const ProblemInstance& problem, const ProxSpec& spec,
                         const Weights& w, double beta);

}  // namespace descentlab
