#include "descentlab/schedules.hpp"

#include <cmath>

#include "descentlab/errors.hpp"

namespace descentlab {

StepPolicy StepPolicy::constant(double eta) {
  if (eta <= 0) throw InvalidArgument("constant schedule: eta must be positive");
  StepPolicy p;
  p.kind_ = Kind::Constant;
  p.eta0_ = eta;
  return p;
}

StepPolicy StepPolicy::diminishing(double C, double beta_shift, double nu) {
  if (C <= 0 || nu <= 0) throw InvalidArgument("diminishing schedule: C, nu must be positive");
  if (beta_shift <= 0) throw InvalidArgument("diminishing schedule: beta must be positive");
  StepPolicy p;
  p.kind_ = Kind::Diminishing;
  p.C_ = C;
  p.beta_shift_ = beta_shift;
  p.nu_ = nu;
  return p;
}

StepPolicy StepPolicy::staircase(double C, double beta_shift, double nu, int s) {
  if (C <= 0 || nu <= 0) throw InvalidArgument("staircase schedule: C, nu must be positive");
  if (beta_shift <= 0) throw InvalidArgument("staircase schedule: beta must be positive");
  if (s < 1) throw InvalidArgument("staircase schedule: s must be >= 1");
  StepPolicy p;
  p.kind_ = Kind::Staircase;
  p.C_ = C;
  p.beta_shift_ = beta_shift;
  p.nu_ = nu;
  p.s_ = s;
  return p;
}

StepPolicy StepPolicy::adaptive_accumulator(double C, double eps) {
  if (C <= 0) throw InvalidArgument("adaptive schedule: C must be positive");
  if (eps < 0) throw InvalidArgument("adaptive schedule: eps must be nonnegative");
  StepPolicy p;
  p.kind_ = Kind::AdaptiveAccumulator;
  p.C_ = C;
  p.eps_ = eps;
  return p;
}

StepPolicy StepPolicy::barzilai_borwein(double eta0) {
  if (eta0 <= 0) throw InvalidArgument("bb schedule: fallback eta0 must be positive");
  StepPolicy p;
  p.kind_ = Kind::BarzilaiBorwein;
  p.eta0_ = eta0;
  return p;
}

StepPolicy StepPolicy::exact_quadratic() {
  StepPolicy p;
  p.kind_ = Kind::ExactQuadratic;
  return p;
}

double StepPolicy::next_step(int t, const Weights& w, const Weights& g,
                             const ProblemInstance& problem) {
  degenerate_ = false;
  double eta = 0.0;
  switch (kind_) {
    case Kind::Constant:
      eta = eta0_;
      break;
    case Kind::Diminishing:
      eta = C_ / std::pow(static_cast<double>(t) + beta_shift_, nu_);
      break;
    case Kind::Staircase: {
      const double stair = static_cast<double>((t + s_ - 1) / s_);  // ceil(t/s), 0 at t=0
      eta = C_ / std::pow(stair + beta_shift_, nu_);
      break;
    }
    case Kind::AdaptiveAccumulator:
      accumulated_ += g.squaredNorm();
      eta = C_ / std::sqrt(accumulated_ + eps_);
      break;
    case Kind::BarzilaiBorwein: {
      if (!has_prev_) {
        eta = eta0_;
      } else {
        const double den = (g - prev_g_).norm();
        if (den < 1e-15) {
          degenerate_ = true;
          eta = last_eta_ > 0 ? last_eta_ : eta0_;
        } else {
          eta = (w - prev_w_).norm() / den;
        }
      }
      prev_w_ = w;
      prev_g_ = g;
      has_prev_ = true;
      break;
    }
    case Kind::ExactQuadratic: {
      if (problem.kind() != ProblemKind::Quadratic) {
        throw InvalidArgument("exact schedule: problem must be a plain quadratic");
      }
      const double curvature = g.dot(problem.hessian_apply(g));
      if (curvature <= 0) {
        throw Unsupported("exact schedule: nonconvex curvature along the direction");
      }
      eta = g.squaredNorm() / curvature;
      break;
    }
  }
  if (!(eta > 0) || !std::isfinite(eta)) {
    throw NumericFailure("schedule emitted a nonpositive or non-finite step", t);
  }
  last_eta_ = eta;
  return eta;
}

}  // namespace descentlab
