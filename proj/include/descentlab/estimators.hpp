#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "descentlab/methods.hpp"
#include "descentlab/problems.hpp"
#include "descentlab/schedules.hpp"
#include "descentlab/types.hpp"

namespace descentlab {

// Uniform sampling of index batches without replacement.
class BatchSampler {
 public:
  BatchSampler() = default;
  BatchSampler(std::uint64_t seed, int population);
  std::vector<int> draw(int batch);
  int population() const { return n_; }

 private:
  std::mt19937_64 rng_{0};
  int n_ = 0;
};

// Persistent state of a stochastic gradient estimator.  Single-owner mutable;
// independent runs use distinct instances.
struct EstimatorState {
  enum class Kind { MiniBatch, Svrg, Sarah, Hybrid };

  Kind kind = Kind::MiniBatch;
  int batch = 1;
  std::function<double(int)> mix_beta;  // hybrid mixing weight beta_t
  BatchSampler sampler;
  int step = 0;  // index t of the next estimate() call

  std::optional<Weights> snapshot_w;     // SVRG anchor
  std::optional<Weights> snapshot_grad;  // full gradient at the anchor
  std::optional<Weights> prev_w;         // SARAH / hybrid recursion state
  std::optional<Weights> prev_v;
  Weights last_v;

  static EstimatorState minibatch(int batch, std::uint64_t seed, int population);
  static EstimatorState svrg(int batch, std::uint64_t seed, int population);
  static EstimatorState sarah(int batch, std::uint64_t seed, int population);
  static EstimatorState hybrid(int batch, double beta, std::uint64_t seed, int population);
  static EstimatorState hybrid(int batch, std::function<double(int)> beta,
                               std::uint64_t seed, int population);
};

// Exact full gradient as the mean of component gradients (cost n component
// evaluations when counts is non-null).
Weights full_gradient(const ProblemInstance& problem, const Weights& w,
                      OracleCounts* counts = nullptr);

// Mean component gradient over an index batch.
Weights batch_gradient(const ProblemInstance& problem, const Weights& w,
                       const std::vector<int>& batch, OracleCounts* counts = nullptr);

// SVRG: record the snapshot anchor and its full gradient.
void take_snapshot(EstimatorState& state, const ProblemInstance& problem,
                   const Weights& w, OracleCounts* counts = nullptr);

// SARAH / hybrid: seed the recursion with v0 = full gradient at w.
void seed_recursion(EstimatorState& state, const ProblemInstance& problem,
                    const Weights& w, OracleCounts* counts = nullptr);

// Draw a batch and emit the kind-specific estimate v_t; mutates the state.
Weights estimate(EstimatorState& state, const ProblemInstance& problem,
                 const Weights& w, OracleCounts* counts = nullptr);

// Exact conditional mean of estimate() over every possible batch (the state
// is not advanced).  Guarded to C(n, b) <= 1e6 enumerable batches.
Weights enumerate_conditional_mean(const EstimatorState& state,
                                   const ProblemInstance& problem, const Weights& w);

// Exact conditional variance E ||v - grad F(w)||^2 over every batch.
double enumerate_conditional_variance(const EstimatorState& state,
                                      const ProblemInstance& problem, const Weights& w);

// Stage-wise stochastic gradient driver with optional single-loop (loopless)
// Bernoulli snapshot refresh.
struct SgdDriverSpec {
  int stages = 0;                     // S; 0 runs a single loop
  std::vector<int> inner_lengths;     // T_s; a single entry broadcasts
  enum class SnapshotRule { LastIterate, UniformRandom };
  SnapshotRule snapshot_rule = SnapshotRule::LastIterate;
  std::optional<double> loopless_rho;
  StepPolicy step = StepPolicy::constant(0.1);
  EstimatorState::Kind estimator = EstimatorState::Kind::MiniBatch;
  int batch = 1;
  std::function<double(int)> hybrid_beta;
  bool record_iterates = true;

  int inner_length(int s) const;
  int total_iterations() const;
};

RunRecord run_unified_sgd(const ProblemInstance& problem, const SgdDriverSpec& spec,
                          const Weights& w0, std::uint64_t seed);

}  // namespace descentlab
