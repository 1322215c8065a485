#pragma once

#include "descentlab/problems.hpp"
#include "descentlab/types.hpp"

namespace descentlab {

// Stateful step-size rule producing eta_t from the iteration history.
// Single-owner mutable state: one policy instance per run.
class StepPolicy {
 public:
  enum class Kind {
    Constant,             // eta
    Diminishing,          // C / (t + beta)^nu
    Staircase,            // C / (ceil(t/s) + beta)^nu, ceil(0/s) = 0
    AdaptiveAccumulator,  // C / sqrt(sum_j ||g_j||^2 + eps)
    BarzilaiBorwein,      // ||w_t - w_{t-1}|| / ||g_t - g_{t-1}||
    ExactQuadratic,       // argmin_eta F(w - eta g) for quadratic F
  };

  static StepPolicy constant(double eta);
  static StepPolicy diminishing(double C, double beta_shift, double nu);
  static StepPolicy staircase(double C, double beta_shift, double nu, int s);
  static StepPolicy adaptive_accumulator(double C, double eps = 1e-8);
  static StepPolicy barzilai_borwein(double eta0);
  static StepPolicy exact_quadratic();

  // Emits eta_t for the step taken from w along -g; mutates internal state.
  double next_step(int t, const Weights& w, const Weights& g,
                   const ProblemInstance& problem);

  Kind kind() const { return kind_; }
  // Set when the Barzilai-Borwein denominator vanished and the previous
  // emitted step was reused.
  bool degenerate() const { return degenerate_; }

 private:
  StepPolicy() = default;

  Kind kind_ = Kind::Constant;
  double C_ = 1.0;
  double beta_shift_ = 0.0;
  double nu_ = 0.0;
  double eps_ = 0.0;
  double eta0_ = 0.0;
  int s_ = 1;
  double accumulated_ = 0.0;
  bool has_prev_ = false;
  Weights prev_w_, prev_g_;
  double last_eta_ = 0.0;
  bool degenerate_ = false;
};

}  // namespace descentlab
