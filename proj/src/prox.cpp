#include "descentlab/prox.hpp"

#include <algorithm>
#include <cmath>

#include "descentlab/errors.hpp"

namespace descentlab {

namespace {

void validate(const ProxSpec& spec, const Weights& w, double gamma) {
  if (gamma <= 0) throw InvalidArgument("prox: gamma must be positive");
  switch (spec.kind) {
    case ProxKind::Box:
      if (spec.lo.size() != w.size() || spec.hi.size() != w.size()) {
        throw InvalidArgument("prox: box bounds dimension mismatch");
      }
      if ((spec.lo.array() > spec.hi.array()).any()) {
        throw InvalidArgument("prox: box needs lo <= hi");
      }
      break;
    case ProxKind::L2Ball:
      if (spec.radius <= 0) throw InvalidArgument("prox: ball radius must be positive");
      break;
    case ProxKind::GroupL2: {
      std::vector<char> seen(w.size(), 0);
      for (const auto& blk : spec.blocks) {
        for (int j : blk) {
          if (j < 0 || j >= w.size() || seen[j]) {
            throw InvalidArgument("prox: blocks must partition the coordinates");
          }
          seen[j] = 1;
        }
      }
      if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
        throw InvalidArgument("prox: blocks must cover every coordinate");
      }
      break;
    }
    case ProxKind::ScalarSeparable:
      if (!spec.scalar.value || !spec.scalar.deriv) {
        throw InvalidArgument("prox: scalar function handles missing");
      }
      break;
    default:
      break;
  }
}

double soft_threshold(double v, double thr) {
  // |v| == thr maps to 0, matching the minimal-norm subgradient tie-break.
  if (v > thr) return v - thr;
  if (v < -thr) return v + thr;
  return 0.0;
}

// Solve g'(z) + (z - w)/gamma = 0 by safeguarded bisection with Newton
// polishing.  The residual is strictly increasing for convex g.
double solve_scalar(const ScalarFunction& g, double gamma, double w) {
  const auto residual = [&](double z) { return g.deriv(z) + (z - w) / gamma; };
  double lo = w - gamma * std::abs(g.deriv(w)) - 1.0;
  double hi = w + gamma * std::abs(g.deriv(w)) + 1.0;
  double flo = residual(lo);
  double fhi = residual(hi);
  for (int grow = 0; grow < 64 && flo * fhi > 0; ++grow) {
    const double width = hi - lo;
    lo -= width;
    hi += width;
    flo = residual(lo);
    fhi = residual(hi);
  }
  if (flo * fhi > 0) {
    throw NumericFailure("scalar prox: failed to bracket the root", 64);
  }
  double z = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double r = residual(z);
    if (std::abs(r) <= 1e-12) return z;
    if (r > 0) hi = z; else lo = z;
    double znext = z;
    if (g.second) {
      const double rp = g.second(z) + 1.0 / gamma;
      if (rp > 0) znext = z - r / rp;
    }
    if (!(znext > lo && znext < hi)) znext = 0.5 * (lo + hi);
    z = znext;
  }
  throw NumericFailure("scalar prox: no convergence after 200 iterations", 200);
}

}  // namespace

ProxSpec ProxSpec::zero(double gamma) {
  ProxSpec s;
  s.kind = ProxKind::Zero;
  s.gamma = gamma;
  return s;
}
ProxSpec ProxSpec::l1(double lambda, double gamma) {
  ProxSpec s;
  s.kind = ProxKind::L1;
  s.weight = lambda;
  s.gamma = gamma;
  return s;
}
ProxSpec ProxSpec::sq_l2(double lambda, double gamma) {
  ProxSpec s;
  s.kind = ProxKind::SqL2;
  s.weight = lambda;
  s.gamma = gamma;
  return s;
}
ProxSpec ProxSpec::box(Weights lo, Weights hi, double gamma) {
  ProxSpec s;
  s.kind = ProxKind::Box;
  s.lo = std::move(lo);
  s.hi = std::move(hi);
  s.gamma = gamma;
  return s;
}
ProxSpec ProxSpec::l2_ball(double radius, double gamma) {
  ProxSpec s;
  s.kind = ProxKind::L2Ball;
  s.radius = radius;
  s.gamma = gamma;
  return s;
}
ProxSpec ProxSpec::group_l2(std::vector<std::vector<int>> blocks, double lambda,
                            double gamma) {
  ProxSpec s;
  s.kind = ProxKind::GroupL2;
  s.blocks = std::move(blocks);
  s.weight = lambda;
  s.gamma = gamma;
  return s;
}
ProxSpec ProxSpec::scalar_separable(ScalarFunction g, double gamma) {
  ProxSpec s;
  s.kind = ProxKind::ScalarSeparable;
  s.scalar = std::move(g);
  s.gamma = gamma;
  return s;
}

Weights prox(const ProxSpec& spec, const Weights& w) {
  return prox(spec, spec.gamma, w);
}

Weights prox(const ProxSpec& spec, double gamma, const Weights& w) {
  validate(spec, w, gamma);
  switch (spec.kind) {
    case ProxKind::Zero:
      return w;
    case ProxKind::L1: {
      const double thr = gamma * spec.weight;
      Weights z(w.size());
      for (Eigen::Index j = 0; j < w.size(); ++j) z[j] = soft_threshold(w[j], thr);
      return z;
    }
    case ProxKind::SqL2:
      // g(z) = (lambda/2) ||z||^2
      return w / (1.0 + gamma * spec.weight);
    case ProxKind::Box:
      return w.cwiseMax(spec.lo).cwiseMin(spec.hi);
    case ProxKind::L2Ball: {
      const double n = w.norm();
      if (n <= spec.radius) return w;
      return w * (spec.radius / n);
    }
    case ProxKind::GroupL2: {
      Weights z = w;
      const double thr = gamma * spec.weight;
      for (const auto& blk : spec.blocks) {
        double nb = 0.0;
        for (int j : blk) nb += w[j] * w[j];
        nb = std::sqrt(nb);
        const double scale = nb <= thr ? 0.0 : 1.0 - thr / nb;
        for (int j : blk) z[j] = scale * w[j];
      }
      return z;
    }
    case ProxKind::ScalarSeparable: {
      Weights z(w.size());
      for (Eigen::Index j = 0; j < w.size(); ++j) {
        z[j] = solve_scalar(spec.scalar, gamma, w[j]);
      }
      return z;
    }
  }
  throw InvalidArgument("unknown prox kind");
}

Weights prox_via_moreau(const ProxSpec& spec, const Weights& w) {
  return prox_via_moreau(spec, spec.gamma, w);
}

Weights prox_via_moreau(const ProxSpec& spec, double gamma, const Weights& w) {
  validate(spec, w, gamma);
  switch (spec.kind) {
    case ProxKind::L1: {
      // Conjugate of lambda||.||_1 is the indicator of the linf ball of
      // radius lambda; its prox is the coordinate-wise clip.
      Weights z(w.size());
      for (Eigen::Index j = 0; j < w.size(); ++j) {
        const double u = w[j] / gamma;
        z[j] = w[j] - gamma * std::clamp(u, -spec.weight, spec.weight);
      }
      return z;
    }
    case ProxKind::GroupL2: {
      // Block-wise l2 norm conjugates to the l2-ball indicator per block.
      Weights z = w;
      for (const auto& blk : spec.blocks) {
        double nb = 0.0;
        for (int j : blk) nb += w[j] * w[j];
        nb = std::sqrt(nb) / gamma;
        const double scale = nb <= spec.weight ? 1.0 : spec.weight / nb;
        for (int j : blk) z[j] = w[j] - scale * w[j];
      }
      return z;
    }
    default:
      throw Unsupported("prox_via_moreau: conjugate not implemented for this kind");
  }
}

double prox_penalty(const ProxSpec& spec, const Weights& z) {
  switch (spec.kind) {
    case ProxKind::Zero:
      return 0.0;
    case ProxKind::L1:
      return spec.weight * z.lpNorm<1>();
    case ProxKind::SqL2:
      return 0.5 * spec.weight * z.squaredNorm();
    case ProxKind::Box:
      if ((z.array() < spec.lo.array() - 1e-12).any() ||
          (z.array() > spec.hi.array() + 1e-12).any()) {
        throw InvalidArgument("prox_penalty: point outside the box");
      }
      return 0.0;
    case ProxKind::L2Ball:
      if (z.norm() > spec.radius + 1e-12) {
        throw InvalidArgument("prox_penalty: point outside the ball");
      }
      return 0.0;
    case ProxKind::GroupL2: {
      double s = 0.0;
      for (const auto& blk : spec.blocks) {
        double nb = 0.0;
        for (int j : blk) nb += z[j] * z[j];
        s += std::sqrt(nb);
      }
      return spec.weight * s;
    }
    case ProxKind::ScalarSeparable: {
      double s = 0.0;
      for (Eigen::Index j = 0; j < z.size(); ++j) s += spec.scalar.value(z[j]);
      return s;
    }
  }
  throw InvalidArgument("unknown prox kind");
}

Weights gradient_mapping(const ProblemInstance& problem, const ProxSpec& spec,
                         const Weights& w, double beta) {
  if (beta <= 0) throw InvalidArgument("gradient_mapping: beta must be positive");
  const Weights step = w - beta * problem.grad(w);
  return (w - prox(spec, beta, step)) / beta;
}

}  // namespace descentlab
