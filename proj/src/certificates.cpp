#include "descentlab/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "descentlab/errors.hpp"

namespace descentlab {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double binomial(int n, int b) {
  double c = 1.0;
  for (int i = 0; i < b; ++i) c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
  return c;
}

std::vector<std::vector<int>> all_batches(int n, int b) {
  std::vector<std::vector<int>> out;
  std::vector<int> idx(b);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    out.push_back(idx);
    int j = b - 1;
    while (j >= 0 && idx[j] == n - b + j) --j;
    if (j < 0) break;
    ++idx[j];
    for (int k = j + 1; k < b; ++k) idx[k] = idx[k - 1] + 1;
  }
  return out;
}

const Weights& require_w_star(const ProblemInstance& problem, const char* scheme) {
  const auto& ws = problem.constants().w_star;
  if (!ws) throw InvalidArgument(std::string(scheme) + ": certified w* missing");
  return *ws;
}

double require_f_star(const ProblemInstance& problem, const char* scheme) {
  const auto& fs = problem.constants().F_star;
  if (!fs) throw InvalidArgument(std::string(scheme) + ": certified F* missing");
  return *fs;
}

double require_L(const ProblemInstance& problem, const char* scheme) {
  const double L = problem.constants().L;
  if (!(L > 0)) throw InvalidArgument(std::string(scheme) + ": certified L missing");
  return L;
}

void check_steps(CertificateTrace& trace) {
  const std::size_t T = trace.Delta.size();
  for (std::size_t t = 0; t < T; ++t) {
    const double delta = trace.Delta[t];
    if (delta < -1e-12) {
      throw CertificateFailure("certificate-failure(" + std::to_string(t) +
                                   "): Delta_t negative, step size precondition violated",
                               static_cast<long>(t), delta);
    }
    const double slack =
        trace.omega[t] * trace.D[t] + trace.E[t] - trace.D[t + 1] - delta;
    trace.slack[t] = slack;
    trace.min_slack = std::min(trace.min_slack, slack);
    const double tol = 1e-9 * (1.0 + std::abs(trace.D[t]));
    if (slack < -tol) {
      throw CertificateFailure("certificate-failure(" + std::to_string(t) +
                                   "): recursion slack " + std::to_string(slack),
                               static_cast<long>(t), slack);
    }
  }
}

}  // namespace

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::SubgradientConvex: return "subgradient_convex";
    case Scheme::GdNonconvex: return "gd_nonconvex";
    case Scheme::GdConvex: return "gd_convex";
    case Scheme::NesterovConvex: return "nesterov_convex";
    case Scheme::SgdConvexEnumerated: return "sgd_convex_enumerated";
    case Scheme::SgdNonconvexEnumerated: return "sgd_nonconvex_enumerated";
    case Scheme::HybridVR: return "hybrid_vr";
  }
  return "unknown";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "subgradient_convex") return Scheme::SubgradientConvex;
  if (name == "gd_nonconvex") return Scheme::GdNonconvex;
  if (name == "gd_convex") return Scheme::GdConvex;
  if (name == "nesterov_convex") return Scheme::NesterovConvex;
  if (name == "sgd_convex_enumerated") return Scheme::SgdConvexEnumerated;
  if (name == "sgd_nonconvex_enumerated") return Scheme::SgdNonconvexEnumerated;
  if (name == "hybrid_vr") return Scheme::HybridVR;
  throw InvalidArgument("unknown certificate scheme: " + name);
}

CertificateTrace certify_deterministic(const RunRecord& run,
                                       const ProblemInstance& problem, Scheme scheme) {
  const int T = run.steps();
  if (T < 1) throw InvalidArgument("certify_deterministic: empty run");

  CertificateTrace trace;
  trace.scheme = scheme;
  trace.D.resize(static_cast<std::size_t>(T) + 1, kNan);
  trace.Delta.resize(static_cast<std::size_t>(T), kNan);
  trace.E.resize(static_cast<std::size_t>(T), 0.0);
  trace.omega.resize(static_cast<std::size_t>(T), 1.0);
  trace.slack.resize(static_cast<std::size_t>(T), kNan);
  trace.bound.resize(static_cast<std::size_t>(T) + 1, kNan);

  const auto fval = [&](int t) { return run.f[static_cast<std::size_t>(t)]; };

  switch (scheme) {
    case Scheme::SubgradientConvex: {
      require_w_star(problem, "subgradient_convex");
      const double fstar = require_f_star(problem, "subgradient_convex");
      const double R0 = std::sqrt(run.dist_sq[0]);
      for (int t = 0; t <= T; ++t) trace.D[t] = 0.5 * run.dist_sq[t];
      for (int t = 0; t < T; ++t) {
        trace.Delta[t] = run.eta[t] * (fval(t) - fstar);
        trace.E[t] = 0.5 * run.eta[t] * run.eta[t] * run.grad_norm_sq[t];
      }
      if (problem.constants().M) {
        const auto bounds = averaged_gap_bounds(R0, *problem.constants().M, run.eta);
        for (int t = 0; t < T; ++t) trace.bound[t] = bounds[static_cast<std::size_t>(t)];
      }
      break;
    }
    case Scheme::GdNonconvex: {
      const double L = require_L(problem, "gd_nonconvex");
      const double fstar = require_f_star(problem, "gd_nonconvex");
      for (int t = 0; t <= T; ++t) trace.D[t] = fval(t) - fstar;
      double s_running = 0.0;
      for (int t = 0; t < T; ++t) {
        const double eta = run.eta[t];
        trace.Delta[t] = eta * (1.0 - 0.5 * L * eta) * run.grad_norm_sq[t];
        s_running += eta * (1.0 - 0.5 * L * eta);
        // Running bound on min_{j<=t} ||grad F(w^j)||^2.
        trace.bound[t] = s_running > 0 ? trace.D[0] / s_running : kNan;
      }
      break;
    }
    case Scheme::GdConvex: {
      const double L = require_L(problem, "gd_convex");
      require_w_star(problem, "gd_convex");
      const double fstar = require_f_star(problem, "gd_convex");
      for (int t = 0; t < T; ++t) {
        if (std::abs(run.eta[t] * L - 1.0) > 1e-9) {
          throw InvalidArgument("gd_convex: certificate requires the constant step 1/L");
        }
      }
      const double R0_sq = run.dist_sq[0];
      for (int t = 0; t <= T; ++t) {
        trace.D[t] = 0.5 * L * run.dist_sq[t] + static_cast<double>(t) * (fval(t) - fstar);
        if (t >= 1) trace.bound[t] = L * R0_sq / (2.0 * static_cast<double>(t));
      }
      for (int t = 0; t < T; ++t) {
        trace.Delta[t] = static_cast<double>(t) / (2.0 * L) * run.grad_norm_sq[t];
      }
      break;
    }
    case Scheme::NesterovConvex: {
      const double L = require_L(problem, "nesterov_convex");
      const Weights& ws = require_w_star(problem, "nesterov_convex");
      const double fstar = require_f_star(problem, "nesterov_convex");
      if (run.thetas.size() != static_cast<std::size_t>(T) ||
          run.aux_iterates.size() != static_cast<std::size_t>(T) + 1) {
        throw InvalidArgument("nesterov_convex: run lacks theta/extrapolation traces");
      }
      const double R0_sq = run.dist_sq[0];
      const auto theta_prev = [&](int t) {
        return t == 0 ? 0.5 : run.thetas[static_cast<std::size_t>(t - 1)];
      };
      for (int t = 0; t <= T; ++t) {
        const double tp = theta_prev(t);
        trace.D[t] = tp * tp * (fval(t) - fstar) +
                     0.5 * L * (run.aux_iterates[static_cast<std::size_t>(t)] - ws).squaredNorm();
        trace.bound[t] = 2.0 * L * R0_sq /
                         ((static_cast<double>(t) + 1.0) * (static_cast<double>(t) + 1.0));
      }
      for (int t = 0; t < T; ++t) {
        const double tp = theta_prev(t);
        const double th = run.thetas[static_cast<std::size_t>(t)];
        trace.Delta[t] = (tp * tp - th * (th - 1.0)) * (fval(t) - fstar);
      }
      break;
    }
    default:
      throw InvalidArgument("certify_deterministic: scheme needs the enumerated engine");
  }

  check_steps(trace);
  return trace;
}

CertificateTrace certify_stochastic_enumerated(const ProblemInstance& problem,
                                               const SgdDriverSpec& spec,
                                               const Weights& w0, int T, Scheme scheme) {
  if (scheme != Scheme::SgdConvexEnumerated && scheme != Scheme::SgdNonconvexEnumerated) {
    throw InvalidArgument("certify_stochastic_enumerated: not an enumerated scheme");
  }
  if (spec.estimator != EstimatorState::Kind::MiniBatch) {
    throw Unsupported("enumerated certification covers the minibatch estimator");
  }
  const auto policy_kind = spec.step.kind();
  if (policy_kind != StepPolicy::Kind::Constant &&
      policy_kind != StepPolicy::Kind::Diminishing &&
      policy_kind != StepPolicy::Kind::Staircase) {
    throw Unsupported("enumerated certification needs a step size deterministic in t");
  }
  const int n = problem.num_components();
  if (n < 1) throw InvalidArgument("enumerated certification: no components");
  if (T < 1) throw InvalidArgument("enumerated certification: T must be >= 1");
  if (w0.size() != problem.dim()) {
    throw InvalidArgument("enumerated certification: w0 dimension mismatch");
  }
  const double K = binomial(n, spec.batch);
  if (std::pow(K, T) > 1e6) {
    throw Unsupported("enumerated certification: batch-sequence tree exceeds 1e6 paths");
  }
  const auto batches = all_batches(n, spec.batch);
  const auto nbatches = static_cast<double>(batches.size());

  const bool convex_scheme = scheme == Scheme::SgdConvexEnumerated;
  const Weights* ws = nullptr;
  double fstar = 0.0;
  double L = 0.0;
  if (convex_scheme) {
    ws = &require_w_star(problem, "sgd_convex_enumerated");
    fstar = require_f_star(problem, "sgd_convex_enumerated");
  } else {
    L = require_L(problem, "sgd_nonconvex_enumerated");
    fstar = require_f_star(problem, "sgd_nonconvex_enumerated");
  }

  StepPolicy policy = spec.step;
  const Weights gzero = Weights::Zero(problem.dim());
  std::vector<double> etas(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) etas[t] = policy.next_step(t, w0, gzero, problem);

  CertificateTrace trace;
  trace.scheme = scheme;
  trace.D.assign(static_cast<std::size_t>(T) + 1, 0.0);
  trace.Delta.assign(static_cast<std::size_t>(T), 0.0);
  trace.E.assign(static_cast<std::size_t>(T), 0.0);
  trace.omega.assign(static_cast<std::size_t>(T), 1.0);
  trace.slack.assign(static_cast<std::size_t>(T),
                     std::numeric_limits<double>::infinity());
  trace.bound.assign(static_cast<std::size_t>(T) + 1, kNan);
  {
    Weights mean = Weights::Zero(problem.dim());
    for (const auto& b : batches) mean += batch_gradient(problem, w0, b);
    mean /= nbatches;
    trace.root_unbiasedness_error = (mean - problem.grad(w0)).norm();
  }

  // Pass 1: the frozen constant (max estimator norm, or max conditional
  // variance) over the whole tree.
  double frozen = 0.0;
  {
    std::function<void(const Weights&, int)> walk = [&](const Weights& w, int t) {
      if (t >= T) return;
      Weights mean = Weights::Zero(problem.dim());
      std::vector<Weights> vs;
      vs.reserve(batches.size());
      for (const auto& b : batches) {
        vs.push_back(batch_gradient(problem, w, b));
        mean += vs.back();
      }
      mean /= nbatches;
      if (convex_scheme) {
        for (const auto& v : vs) frozen = std::max(frozen, v.squaredNorm());
      } else {
        double var = 0.0;
        for (const auto& v : vs) var += (v - mean).squaredNorm();
        frozen = std::max(frozen, var / nbatches);
      }
      for (const auto& v : vs) walk(w - etas[static_cast<std::size_t>(t)] * v, t + 1);
    };
    walk(w0, 0);
  }
  trace.frozen_constant = frozen;

  const auto potential = [&](const Weights& w) {
    return convex_scheme ? 0.5 * (w - *ws).squaredNorm() : problem.value(w) - fstar;
  };

  // Pass 2: assert the conditional recursion at every node and aggregate the
  // expected trace quantities.
  std::size_t nodes = 0, paths = 0;
  std::function<void(const Weights&, int, double)> walk = [&](const Weights& w, int t,
                                                              double prob) {
    const double Dt = potential(w);
    trace.D[static_cast<std::size_t>(t)] += prob * Dt;
    if (t >= T) {
      ++paths;
      return;
    }
    ++nodes;
    const double eta = etas[static_cast<std::size_t>(t)];
    double delta, err;
    if (convex_scheme) {
      delta = eta * (problem.value(w) - fstar);
      err = 0.5 * eta * eta * frozen;
    } else {
      delta = eta * (1.0 - 0.5 * L * eta) * problem.grad(w).squaredNorm();
      err = 0.5 * L * eta * eta * frozen;
    }
    double mean_next = 0.0;
    std::vector<Weights> children;
    children.reserve(batches.size());
    for (const auto& b : batches) {
      children.push_back(w - eta * batch_gradient(problem, w, b));
      mean_next += potential(children.back());
    }
    mean_next /= nbatches;
    const double slack = Dt + err - mean_next - delta;
    auto& st = trace.slack[static_cast<std::size_t>(t)];
    st = std::min(st, slack);
    trace.min_slack = std::min(trace.min_slack, slack);
    if (slack < -1e-12) {
      throw CertificateFailure("certificate-failure at tree depth " + std::to_string(t) +
                                   ": conditional recursion violated",
                               t, slack);
    }
    trace.Delta[static_cast<std::size_t>(t)] += prob * delta;
    trace.E[static_cast<std::size_t>(t)] += prob * err;
    const double child_prob = prob / nbatches;
    for (const auto& child : children) walk(child, t + 1, child_prob);
  };
  walk(w0, 0, 1.0);
  trace.nodes_checked = nodes;
  trace.paths = paths;
  return trace;
}

HybridCertParams hybrid_default_params(double L, long long T) {
  if (!(L > 0)) throw InvalidArgument("hybrid params: L must be positive");
  if (T < 1) throw InvalidArgument("hybrid params: T must be >= 1");
  HybridCertParams p;
  const double tp1 = static_cast<double>(T) + 1.0;
  p.eta = 1.0 / (L * std::cbrt(tp1));
  const double le = L * p.eta;
  p.c = (1.0 - le + 2.0 * le * le) / (2.0 * L * le);
  const double rhs = 1.0 - 2.0 * le * le / (1.0 - le + 2.0 * le * le);
  p.beta = 1.0 - std::sqrt(rhs);
  p.sigma_init_sq = 1.0 / (std::cbrt(tp1) * std::cbrt(tp1));
  return p;
}

HybridCertReport certify_hybrid(const std::vector<RunRecord>& ensemble,
                                const HybridCertParams& params,
                                const ProblemInstance& problem) {
  if (ensemble.size() < 20) {
    throw InvalidArgument("certify_hybrid: needs an ensemble of at least 20 runs");
  }
  const auto& consts = problem.constants();
  // The variance recursion is stated under mean-squared component smoothness.
  const double L = consts.L_avg.value_or(consts.L);
  if (!(L > 0)) throw InvalidArgument("certify_hybrid: certified L missing");
  const double fstar = require_f_star(problem, "certify_hybrid");
  const double eta = params.eta;
  const double beta = params.beta;
  const double c = params.c;
  if (!(eta > 0.0) || eta > 1.0 / L + 1e-12) {
    throw InvalidArgument("certify_hybrid: eta must lie in (0, 1/L]");
  }
  if (!std::isfinite(params.sigma_hat_sq) || params.sigma_hat_sq < 0) {
    throw InvalidArgument("certify_hybrid: sigma_hat_sq missing");
  }

  HybridCertReport rep;
  const double omb_sq = (1.0 - beta) * (1.0 - beta);
  rep.cond1_residual = std::abs(2.0 * L * L * eta * eta * c * omb_sq - eta * (1.0 - L * eta));
  rep.cond2_residual = std::abs(c * omb_sq - (c - eta));
  const double le = L * eta;
  const double feas_rhs = 1.0 - 2.0 * le * le / (1.0 - le + 2.0 * le * le);
  rep.beta_feasibility_margin = feas_rhs - omb_sq;
  const bool cond1_ok = 2.0 * L * L * eta * eta * c * omb_sq <= eta * (1.0 - L * eta) + 1e-12;
  const bool cond2_ok = c * omb_sq <= c - eta + 1e-12;
  if (!cond1_ok || !cond2_ok || rep.beta_feasibility_margin < -1e-12) {
    throw InvalidArgument("certify_hybrid: invalid-params, parameter conditions violated");
  }

  // Ensemble average of (1/(T+1)) sum_t ||grad F(w^t)||^2 over the iterates a
  // step was taken from.
  const std::size_t steps = ensemble.front().eta.size();
  const long long T = static_cast<long long>(steps) - 1;
  std::vector<double> metrics;
  metrics.reserve(ensemble.size());
  for (const auto& run : ensemble) {
    if (run.eta.size() != steps) {
      throw InvalidArgument("certify_hybrid: ensemble runs have mismatched horizons");
    }
    double m = 0.0;
    for (std::size_t t = 0; t < steps; ++t) m += run.grad_norm_sq[t];
    metrics.push_back(m / static_cast<double>(steps));
  }
  const double K = static_cast<double>(metrics.size());
  double mean = 0.0;
  for (double m : metrics) mean += m;
  mean /= K;
  double var = 0.0;
  for (double m : metrics) var += (m - mean) * (m - mean);
  var /= (K - 1.0);
  rep.ensemble_mean = mean;
  rep.ensemble_stderr = std::sqrt(var / K);
  rep.margin = 3.0 * rep.ensemble_stderr;

  const double tp1 = static_cast<double>(T) + 1.0;
  const double f0_gap = ensemble.front().f[0] - fstar;
  const double v0_sq = ensemble.front().grad_norm_sq[0];  // v0 is the exact gradient
  rep.bound = 2.0 * f0_gap / (eta * tp1) + v0_sq / tp1 +
              params.sigma_init_sq / (2.0 * L * L * eta * eta * tp1) +
              beta * beta * params.sigma_hat_sq / (L * L * eta * eta);
  rep.bound_ok = rep.ensemble_mean <= rep.bound + rep.margin;
  if (!rep.bound_ok) {
    throw CertificateFailure("certify_hybrid: rate bound violated beyond the sampling margin",
                             T, rep.bound + rep.margin - rep.ensemble_mean);
  }
  return rep;
}

double max_enumerated_minibatch_variance(const ProblemInstance& problem,
                                         const std::vector<RunRecord>& ensemble,
                                         int batch) {
  double worst = 0.0;
  const EstimatorState probe =
      EstimatorState::minibatch(batch, 0, problem.num_components());
  for (const auto& run : ensemble) {
    if (run.iterates.empty()) {
      throw InvalidArgument("minibatch variance scan: run lacks recorded iterates");
    }
    for (const auto& w : run.iterates) {
      worst = std::max(worst, enumerate_conditional_variance(probe, problem, w));
    }
  }
  return worst;
}

std::string bound_name(BoundKind k) {
  switch (k) {
    case BoundKind::GdConvexLastIterate: return "gd_convex";
    case BoundKind::NesterovLastIterate: return "nesterov";
    case BoundKind::GdNonconvexMinGrad: return "gd_nonconvex";
    case BoundKind::SgdAvgFixedStep: return "sgd_fixed";
    case BoundKind::SgdAvgDiminishing: return "sgd_diminishing";
    case BoundKind::HybridVrAvgGradSq: return "hybrid_vr";
  }
  return "unknown";
}

BoundKind bound_from_name(const std::string& name) {
  if (name == "gd_convex") return BoundKind::GdConvexLastIterate;
  if (name == "nesterov") return BoundKind::NesterovLastIterate;
  if (name == "gd_nonconvex") return BoundKind::GdNonconvexMinGrad;
  if (name == "sgd_fixed") return BoundKind::SgdAvgFixedStep;
  if (name == "sgd_diminishing") return BoundKind::SgdAvgDiminishing;
  if (name == "hybrid_vr") return BoundKind::HybridVrAvgGradSq;
  throw InvalidArgument("unknown bound kind: " + name);
}

double evaluate_bound(BoundKind kind, const StructureConstants& constants,
                      const BoundInputs& in) {
  const auto need = [](double v, const char* what) {
    if (!std::isfinite(v)) throw InvalidArgument(std::string("evaluate_bound: missing ") + what);
    return v;
  };
  const double L = constants.L;
  switch (kind) {
    case BoundKind::GdConvexLastIterate: {
      if (in.t < 1) throw InvalidArgument("evaluate_bound: iterate index must be >= 1");
      const double R0 = need(in.R0, "R0");
      return L * R0 * R0 / (2.0 * static_cast<double>(in.t));
    }
    case BoundKind::NesterovLastIterate: {
      if (in.t < 0) throw InvalidArgument("evaluate_bound: iterate index must be >= 0");
      const double R0 = need(in.R0, "R0");
      const double tp1 = static_cast<double>(in.t) + 1.0;
      return 2.0 * L * R0 * R0 / (tp1 * tp1);
    }
    case BoundKind::GdNonconvexMinGrad: {
      if (in.t < 0) throw InvalidArgument("evaluate_bound: horizon must be >= 0");
      const double eta = need(in.eta, "eta");
      const double gamma = eta * (1.0 - 0.5 * L * eta);
      if (!(gamma > 0)) throw InvalidArgument("evaluate_bound: eta outside (0, 2/L)");
      return need(in.f0_gap, "f0_gap") / (gamma * (static_cast<double>(in.t) + 1.0));
    }
    case BoundKind::SgdAvgFixedStep: {
      const double R0 = need(in.R0, "R0");
      const double C = need(in.C, "C");
      const double M = need(in.M, "M");
      const double s = std::sqrt(static_cast<double>(in.t) + 1.0);
      return R0 * R0 / (2.0 * C * s) + M * M * C / (2.0 * s);
    }
    case BoundKind::SgdAvgDiminishing: {
      const double R0 = need(in.R0, "R0");
      const double C = need(in.C, "C");
      const double M = need(in.M, "M");
      const double tp1 = static_cast<double>(in.t) + 1.0;
      const double den = 4.0 * C * (std::sqrt(tp1) - 1.0);
      if (!(den > 0)) throw InvalidArgument("evaluate_bound: horizon too small");
      return R0 * R0 / den +
             M * M * C * (1.0 + std::log(tp1)) / (4.0 * (std::sqrt(tp1) - 1.0));
    }
    case BoundKind::HybridVrAvgGradSq: {
      const double eta = need(in.eta, "eta");
      const double beta = need(in.beta, "beta");
      const double Leff = constants.L_avg.value_or(L);
      const double tp1 = static_cast<double>(in.t) + 1.0;
      return 2.0 * need(in.f0_gap, "f0_gap") / (eta * tp1) +
             need(in.v0_norm_sq, "v0_norm_sq") / tp1 +
             need(in.sigma_init_sq, "sigma_init_sq") / (2.0 * Leff * Leff * eta * eta * tp1) +
             beta * beta * need(in.sigma_hat_sq, "sigma_hat_sq") / (Leff * Leff * eta * eta);
    }
  }
  throw InvalidArgument("unknown bound kind");
}

OutputCertificate certify_output(const RunRecord& run, OutputMode mode,
                                 const ProblemInstance& problem,
                                 const std::vector<double>* gammas) {
  if (run.iterates.empty()) {
    throw InvalidArgument("certify_output: run lacks recorded iterates");
  }
  const std::size_t n_iter = run.iterates.size();
  // Averaging covers the iterates a step was taken from, so step-size
  // weights pair with their iterates; a constant schedule then makes the
  // weighted and uniform averages coincide.
  const std::size_t n_avg = run.eta.empty() ? n_iter : run.eta.size();
  OutputCertificate out;
  double weighted_mean_f = kNan;

  switch (mode) {
    case OutputMode::LastIterate:
      out.w_hat = run.iterates.back();
      break;
    case OutputMode::UniformAverage: {
      Weights sum = Weights::Zero(problem.dim());
      double fsum = 0.0;
      for (std::size_t t = 0; t < n_avg; ++t) {
        sum += run.iterates[t];
        fsum += run.f[t];
      }
      out.w_hat = sum / static_cast<double>(n_avg);
      weighted_mean_f = fsum / static_cast<double>(n_avg);
      break;
    }
    case OutputMode::WeightedAverage: {
      const std::vector<double>& weights = gammas ? *gammas : run.eta;
      if (weights.size() > n_iter) {
        throw InvalidArgument("certify_output: gamma weights length mismatch");
      }
      Weights sum = Weights::Zero(problem.dim());
      double fsum = 0.0, S = 0.0;
      for (std::size_t t = 0; t < weights.size(); ++t) {
        if (!(weights[t] > 0)) throw InvalidArgument("certify_output: weights must be positive");
        sum += weights[t] * run.iterates[t];
        fsum += weights[t] * run.f[t];
        S += weights[t];
      }
      out.w_hat = sum / S;
      weighted_mean_f = fsum / S;
      break;
    }
    case OutputMode::BestGradIterate: {
      std::size_t best = 0;
      for (std::size_t t = 1; t < n_iter; ++t) {
        if (run.grad_norm_sq[t] < run.grad_norm_sq[best]) best = t;
      }
      out.w_hat = run.iterates[best];
      break;
    }
  }

  out.f_hat = problem.value(out.w_hat);
  if (problem.constants().F_star) out.f_gap = out.f_hat - *problem.constants().F_star;
  if (problem.is_composite()) {
    const double L = problem.constants().L;
    const double beta = L > 0 ? 1.0 / L : 1.0;
    out.grad_norm_sq =
        gradient_mapping(problem, ProxSpec::l1(problem.l1_weight()), out.w_hat, beta)
            .squaredNorm();
  } else {
    out.grad_norm_sq = problem.grad(out.w_hat).squaredNorm();
  }

  if (std::isfinite(weighted_mean_f)) {
    out.jensen_slack = weighted_mean_f - out.f_hat;
    if (problem.is_convex() && out.jensen_slack < -1e-9) {
      throw CertificateFailure("certify_output: averaged value violates convexity",
                               static_cast<long>(n_iter), out.jensen_slack);
    }
  }
  return out;
}

double fit_rate(const std::vector<double>& series, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw InvalidArgument("fit_rate: tail fraction must lie in (0, 1]");
  }
  const std::size_t N = series.size();
  const auto start = static_cast<std::size_t>(
      std::floor((1.0 - tail_fraction) * static_cast<double>(N)));
  if (N - start < 10) throw InvalidArgument("fit_rate: window needs at least 10 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double count = static_cast<double>(N - start);
  for (std::size_t j = start; j < N; ++j) {
    if (!(series[j] > 0.0)) {
      throw InvalidArgument("fit_rate: series must be positive on the window");
    }
    const double x = std::log(static_cast<double>(j + 1));
    const double y = std::log(series[j]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = sxx - sx * sx / count;
  if (denom <= 0) throw InvalidArgument("fit_rate: degenerate window");
  return (sxy - sx * sy / count) / denom;
}

OracleCounts oracle_complexity(const RunRecord& run) {
  if (run.counts.empty()) return {};
  return run.counts.back();
}

std::vector<double> averaged_gap_bounds(double R0, double M,
                                        const std::vector<double>& etas) {
  std::vector<double> bounds(etas.size());
  double S = 0.0, sum_sq = 0.0;
  for (std::size_t t = 0; t < etas.size(); ++t) {
    S += etas[t];
    sum_sq += etas[t] * etas[t];
    bounds[t] = (0.5 * R0 * R0 + 0.5 * M * M * sum_sq) / S;
  }
  return bounds;
}

std::vector<double> weighted_average_gaps(const RunRecord& run,
                                          const ProblemInstance& problem) {
  if (run.iterates.empty()) {
    throw InvalidArgument("weighted_average_gaps: run lacks recorded iterates");
  }
  const double fstar = require_f_star(problem, "weighted_average_gaps");
  std::vector<double> gaps(run.eta.size());
  Weights acc = Weights::Zero(problem.dim());
  double S = 0.0;
  for (std::size_t t = 0; t < run.eta.size(); ++t) {
    acc += run.eta[t] * run.iterates[t];
    S += run.eta[t];
    gaps[t] = problem.value(acc / S) - fstar;
  }
  return gaps;
}

}  // namespace descentlab
