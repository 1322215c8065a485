#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "descentlab/problems.hpp"
#include "descentlab/prox.hpp"
#include "descentlab/schedules.hpp"
#include "descentlab/types.hpp"

namespace descentlab {

// Extrapolation weight sequence for the accelerated scheme: theta_0 = 1,
// theta_{-1} = 1/2, and every emitted pair keeps
// theta_prev^2 - theta (theta - 1) >= 0.
struct ThetaSequence {
  enum class Rule {
    HalfShift,   // theta_t = (t + 2) / 2
    Recurrence,  // largest root of theta (theta - 1) = theta_prev^2
  };

  Rule rule = Rule::HalfShift;
  double theta_prev = 0.5;
  double theta = 1.0;
  int steps_since_reset = 0;

  double feasibility_slack() const {
    return theta_prev * theta_prev - theta * (theta - 1.0);
  }
  void advance();
  void reset();
};

enum class RestartRule { None, FunctionValue };

struct MethodSpec {
  enum class Kind { GD, Subgradient, ProxGrad, HeavyBall, Nesterov, DualAveraging, NoisyGD };

  Kind kind = Kind::GD;
  RestartRule restart = RestartRule::None;
  ProxSpec prox;                              // ProxGrad
  std::function<double(int)> momentum;        // HeavyBall beta_t in [0, 1)
  ThetaSequence::Rule theta_rule = ThetaSequence::Rule::HalfShift;
  double noise_sigma = 0.0;                   // NoisyGD
  std::optional<std::uint64_t> noise_seed;    // falls back to the run seed
  std::function<double(int)> da_gamma;        // DualAveraging weights
  double da_eta = 0.0;

  static MethodSpec gd();
  static MethodSpec subgradient();
  static MethodSpec prox_grad(ProxSpec spec);
  static MethodSpec heavy_ball(double beta);
  static MethodSpec heavy_ball(std::function<double(int)> beta);
  static MethodSpec nesterov(ThetaSequence::Rule rule, RestartRule restart = RestartRule::None);
  static MethodSpec dual_averaging(double eta, std::function<double(int)> gamma = {});
  static MethodSpec noisy_gd(double sigma, std::uint64_t seed);
};

// Per-iteration record of a run.  Immutable once produced.
struct RunRecord {
  std::string method;
  // Per iterate (size steps()+1):
  std::vector<double> f;
  std::vector<double> grad_norm_sq;  // ||grad F||^2, or the squared gradient
                                     // mapping / subgradient norm where that
                                     // is the stationarity measure
  std::vector<double> dist_sq;       // ||w_t - w*||^2 (nan without w*)
  std::vector<OracleCounts> counts;  // cumulative
  // Per step (size steps()):
  std::vector<double> eta;
  std::vector<double> thetas;          // accelerated runs
  std::vector<double> momentum_betas;  // accelerated / heavy-ball runs
  // Full traces (empty when record_iterates was off):
  std::vector<Weights> iterates;
  std::vector<Weights> directions;     // g^t defining step t
  std::vector<Weights> aux_iterates;   // accelerated runs: u^t per iterate
  std::vector<int> restart_steps;

  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  double wall_time_sec = 0.0;

  int steps() const { return static_cast<int>(eta.size()); }
};

struct RunOptions {
  bool record_iterates = true;
};

// T steps of w <- P(w - eta_t g_t) with the direction defined by the method
// kind.  Nesterov and DualAveraging specs are routed to their engines.
RunRecord run_deterministic(const ProblemInstance& problem, const MethodSpec& method,
                            StepPolicy policy, const Weights& w0, int T,
                            const RunOptions& options = {});

// Accelerated scheme in three-sequence form with fixed step 1/L:
//   z = (1 - 1/theta) w + (1/theta) u,  w+ = z - grad F(z)/L,
//   u+ = u - (theta/L) grad F(z).
// With FunctionValue restart, an increase of F resets u to the new iterate
// and the theta sequence to its initial state.
RunRecord run_nesterov(const ProblemInstance& problem, ThetaSequence theta,
                       const Weights& w0, int T,
                       RestartRule restart = RestartRule::None,
                       const RunOptions& options = {});

// Euclidean dual averaging with fixed eta: w^{t+1} = w0 - eta sum_{j<=t}
// gamma_j grad F(w^j), run for t = 0..T inclusive.
RunRecord run_dual_averaging(const ProblemInstance& problem,
                             const std::function<double(int)>& gamma, double eta,
                             const Weights& w0, int T,
                             const RunOptions& options = {});

}  // namespace descentlab
