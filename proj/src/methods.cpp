#include "descentlab/methods.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "descentlab/errors.hpp"

namespace descentlab {

namespace {

double dist_sq_to_star(const ProblemInstance& problem, const Weights& w) {
  const auto& ws = problem.constants().w_star;
  if (!ws) return std::numeric_limits<double>::quiet_NaN();
  return (w - *ws).squaredNorm();
}

void require_finite(const Weights& w, int t) {
  if (!w.allFinite()) {
    throw Diverged("iterate became non-finite: diverged(" + std::to_string(t) + ")", t);
  }
}

class Recorder {
 public:
  Recorder(const ProblemInstance& problem, const RunOptions& options, std::string method)
      : problem_(problem), options_(options) {
    record_.method = std::move(method);
  }

  // grad_metric: squared norm of the stationarity measure at w.
  void iterate(const Weights& w, double grad_metric, const OracleCounts& counts) {
    record_.f.push_back(problem_.value(w));
    record_.grad_norm_sq.push_back(grad_metric);
    record_.dist_sq.push_back(dist_sq_to_star(problem_, w));
    record_.counts.push_back(counts);
    if (options_.record_iterates) record_.iterates.push_back(w);
  }

  void step(double eta, const Weights& direction) {
    record_.eta.push_back(eta);
    if (options_.record_iterates) record_.directions.push_back(direction);
  }

  RunRecord take(std::chrono::steady_clock::time_point start) {
    record_.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return std::move(record_);
  }

  RunRecord record_;

 private:
  const ProblemInstance& problem_;
  const RunOptions& options_;
};

}  // namespace

void ThetaSequence::advance() {
  ++steps_since_reset;
  theta_prev = theta;
  switch (rule) {
    case Rule::HalfShift:
      theta = 0.5 * static_cast<double>(steps_since_reset + 2);
      break;
    case Rule::Recurrence:
      theta = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta_prev * theta_prev));
      // Largest representable value keeping theta (theta - 1) <= theta_prev^2;
      // the closed form can overshoot by a few ulps.
      while (theta * (theta - 1.0) > theta_prev * theta_prev) {
        theta = std::nextafter(theta, 0.0);
      }
      break;
  }
}

void ThetaSequence::reset() {
  theta_prev = 0.5;
  theta = 1.0;
  steps_since_reset = 0;
}

MethodSpec MethodSpec::gd() {
  MethodSpec m;
  m.kind = Kind::GD;
  return m;
}
MethodSpec MethodSpec::subgradient() {
  MethodSpec m;
  m.kind = Kind::Subgradient;
  return m;
}
MethodSpec MethodSpec::prox_grad(ProxSpec spec) {
  MethodSpec m;
  m.kind = Kind::ProxGrad;
  m.prox = std::move(spec);
  return m;
}
MethodSpec MethodSpec::heavy_ball(double beta) {
  return heavy_ball([beta](int) { return beta; });
}
MethodSpec MethodSpec::heavy_ball(std::function<double(int)> beta) {
  MethodSpec m;
  m.kind = Kind::HeavyBall;
  m.momentum = std::move(beta);
  return m;
}
MethodSpec MethodSpec::nesterov(ThetaSequence::Rule rule, RestartRule restart) {
  MethodSpec m;
  m.kind = Kind::Nesterov;
  m.theta_rule = rule;
  m.restart = restart;
  return m;
}
MethodSpec MethodSpec::dual_averaging(double eta, std::function<double(int)> gamma) {
  MethodSpec m;
  m.kind = Kind::DualAveraging;
  m.da_eta = eta;
  m.da_gamma = gamma ? std::move(gamma) : [](int) { return 1.0; };
  return m;
}
MethodSpec MethodSpec::noisy_gd(double sigma, std::uint64_t seed) {
  MethodSpec m;
  m.kind = Kind::NoisyGD;
  m.noise_sigma = sigma;
  m.noise_seed = seed;
  return m;
}

RunRecord run_deterministic(const ProblemInstance& problem, const MethodSpec& method,
                            StepPolicy policy, const Weights& w0, int T,
                            const RunOptions& options) {
  if (method.kind == MethodSpec::Kind::Nesterov) {
    ThetaSequence theta;
    theta.rule = method.theta_rule;
    return run_nesterov(problem, theta, w0, T, method.restart, options);
  }
  if (method.kind == MethodSpec::Kind::DualAveraging) {
    return run_dual_averaging(problem, method.da_gamma, method.da_eta, w0, T, options);
  }

  if (T < 1) throw InvalidArgument("run_deterministic: T must be >= 1");
  if (w0.size() != problem.dim()) {
    throw InvalidArgument("run_deterministic: w0 dimension mismatch");
  }
  if (method.kind == MethodSpec::Kind::ProxGrad && !problem.is_composite()) {
    throw InvalidArgument("run_deterministic: prox-gradient needs a composite problem");
  }

  const auto start = std::chrono::steady_clock::now();
  const char* name = "gd";
  switch (method.kind) {
    case MethodSpec::Kind::Subgradient: name = "subgradient"; break;
    case MethodSpec::Kind::ProxGrad: name = "prox_grad"; break;
    case MethodSpec::Kind::HeavyBall: name = "heavy_ball"; break;
    case MethodSpec::Kind::NoisyGD: name = "noisy_gd"; break;
    default: break;
  }
  Recorder rec(problem, options, name);

  std::mt19937_64 noise_rng(method.noise_seed.value_or(0));
  std::normal_distribution<double> gauss(0.0, 1.0);

  OracleCounts counts;
  Weights w = w0;
  Weights w_prev = w0;  // heavy-ball momentum anchor; step 0 is a plain step

  for (int t = 0; t <= T; ++t) {
    if (t == T) {
      // Final iterate: instrumentation only.
      double final_metric;
      switch (method.kind) {
        case MethodSpec::Kind::Subgradient:
          final_metric = problem.subgradient(w).squaredNorm();
          break;
        case MethodSpec::Kind::ProxGrad:
          final_metric =
              gradient_mapping(problem, method.prox, w, rec.record_.eta.back())
                  .squaredNorm();
          break;
        default:
          final_metric = problem.grad(w).squaredNorm();
          break;
      }
      rec.iterate(w, final_metric, counts);
      break;
    }

    Weights g;
    double metric = 0.0;
    switch (method.kind) {
      case MethodSpec::Kind::Subgradient:
        g = problem.subgradient(w);
        counts.gradient_evals += 1;
        metric = g.squaredNorm();
        break;
      case MethodSpec::Kind::NoisyGD: {
        Weights exact = problem.grad(w);
        counts.gradient_evals += 1;
        metric = exact.squaredNorm();
        g = exact;
        for (Eigen::Index j = 0; j < g.size(); ++j) {
          g[j] += method.noise_sigma * gauss(noise_rng);
        }
        break;
      }
      default:
        g = problem.grad(w);
        counts.gradient_evals += 1;
        metric = g.squaredNorm();
        break;
    }

    const double eta = policy.next_step(t, w, g, problem);

    Weights next;
    switch (method.kind) {
      case MethodSpec::Kind::ProxGrad: {
        next = prox(method.prox, eta, w - eta * g);
        counts.prox_evals += 1;
        // Composite stationarity measure: the gradient mapping at step size eta.
        metric = ((w - next) / eta).squaredNorm();
        break;
      }
      case MethodSpec::Kind::HeavyBall: {
        const double beta = method.momentum ? method.momentum(t) : 0.0;
        if (beta < 0.0 || beta >= 1.0) {
          throw InvalidArgument("heavy_ball: momentum must lie in [0, 1)");
        }
        next = w - eta * g + beta * (w - w_prev);
        rec.record_.momentum_betas.push_back(beta);
        break;
      }
      default:
        next = w - eta * g;
        break;
    }
    require_finite(next, t);

    rec.iterate(w, metric, counts);
    rec.step(eta, g);
    w_prev = w;
    w = next;
  }
  return rec.take(start);
}

RunRecord run_nesterov(const ProblemInstance& problem, ThetaSequence theta,
                       const Weights& w0, int T, RestartRule restart,
                       const RunOptions& options) {
  if (T < 1) throw InvalidArgument("run_nesterov: T must be >= 1");
  if (w0.size() != problem.dim()) throw InvalidArgument("run_nesterov: w0 dimension mismatch");
  const double L = problem.constants().L;
  if (!(L > 0)) throw InvalidArgument("run_nesterov: certified L missing or zero");

  const auto start = std::chrono::steady_clock::now();
  Recorder rec(problem, options, "nesterov");

  OracleCounts counts;
  Weights w = w0;
  Weights u = w0;
  double f_curr = problem.value(w);
  if (restart == RestartRule::FunctionValue) counts.function_evals += 1;

  for (int t = 0; t <= T; ++t) {
    // Stationarity metric at the main iterate (instrumentation).
    rec.iterate(w, problem.grad(w).squaredNorm(), counts);
    if (options.record_iterates) rec.record_.aux_iterates.push_back(u);
    if (t == T) break;

    if (theta.feasibility_slack() < -1e-12) {
      throw NumericFailure("theta sequence violated its feasibility condition", t);
    }
    const Weights z = (1.0 - 1.0 / theta.theta) * w + (1.0 / theta.theta) * u;
    const Weights gz = problem.grad(z);
    counts.gradient_evals += 1;
    const Weights w_next = z - gz / L;
    Weights u_next = u - (theta.theta / L) * gz;
    require_finite(w_next, t);

    rec.record_.thetas.push_back(theta.theta);
    // Equivalent momentum weight; zero right after a (re)start where the
    // anchor w^{t-1} coincides with w^t.
    rec.record_.momentum_betas.push_back(
        theta.steps_since_reset == 0 ? 0.0 : (theta.theta_prev - 1.0) / theta.theta);
    rec.step(1.0 / L, gz);

    const double f_next = problem.value(w_next);
    if (restart == RestartRule::FunctionValue) {
      counts.function_evals += 1;
      if (f_next > f_curr) {
        u_next = w_next;
        theta.reset();
        rec.record_.restart_steps.push_back(t);
      } else {
        theta.advance();
      }
    } else {
      theta.advance();
    }
    w = w_next;
    u = u_next;
    f_curr = f_next;
  }
  return rec.take(start);
}

RunRecord run_dual_averaging(const ProblemInstance& problem,
                             const std::function<double(int)>& gamma, double eta,
                             const Weights& w0, int T, const RunOptions& options) {
  if (T < 0) throw InvalidArgument("run_dual_averaging: T must be >= 0");
  if (eta <= 0) throw InvalidArgument("run_dual_averaging: eta must be positive");
  if (w0.size() != problem.dim()) {
    throw InvalidArgument("run_dual_averaging: w0 dimension mismatch");
  }
  const auto start = std::chrono::steady_clock::now();
  Recorder rec(problem, options, "dual_averaging");
  const auto weight = gamma ? gamma : [](int) { return 1.0; };

  OracleCounts counts;
  Weights w = w0;
  Weights acc = Weights::Zero(w0.size());
  for (int t = 0; t <= T; ++t) {
    const Weights g = problem.grad(w);
    counts.gradient_evals += 1;
    rec.iterate(w, g.squaredNorm(), counts);

    const double gt = weight(t);
    if (!(gt > 0)) throw InvalidArgument("run_dual_averaging: weights must be positive");
    acc += gt * g;
    Weights next = w0 - eta * acc;
    require_finite(next, t);
    rec.step(eta * gt, g);
    w = std::move(next);
  }
  // Final iterate w^{T+1}.
  rec.iterate(w, problem.grad(w).squaredNorm(), counts);
  return rec.take(start);
}

}  // namespace descentlab
