#include "descentlab/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "descentlab/errors.hpp"

namespace descentlab {

namespace {

constexpr double kEnumerationGuard = 1e6;

double binomial(int n, int b) {
  double c = 1.0;
  for (int i = 0; i < b; ++i) c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
  return c;
}

// Visit every b-subset of {0..n-1} in lexicographic order.
template <typename Visit>
void for_each_batch(int n, int b, Visit visit) {
  std::vector<int> idx(b);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    visit(idx);
    int j = b - 1;
    while (j >= 0 && idx[j] == n - b + j) --j;
    if (j < 0) break;
    ++idx[j];
    for (int k = j + 1; k < b; ++k) idx[k] = idx[k - 1] + 1;
  }
}

void check_finite_sum(const ProblemInstance& problem, const EstimatorState& state) {
  const int n = problem.num_components();
  if (n < 1) throw InvalidArgument("estimator: problem has no finite-sum components");
  if (state.batch < 1 || state.batch > n) {
    throw InvalidArgument("estimator: batch size must lie in [1, n]");
  }
}

// The estimate for one concrete batch; pure, shared by estimate() and the
// enumeration oracles.
Weights estimate_for_batch(const EstimatorState& state, const ProblemInstance& problem,
                           const Weights& w, const std::vector<int>& batch,
                           OracleCounts* counts) {
  switch (state.kind) {
    case EstimatorState::Kind::MiniBatch:
      return batch_gradient(problem, w, batch, counts);
    case EstimatorState::Kind::Svrg: {
      if (!state.snapshot_w || !state.snapshot_grad) {
        throw InvalidState("svrg estimator used before a snapshot was taken");
      }
      return *state.snapshot_grad + batch_gradient(problem, w, batch, counts) -
             batch_gradient(problem, *state.snapshot_w, batch, counts);
    }
    case EstimatorState::Kind::Sarah: {
      if (!state.prev_w || !state.prev_v) {
        throw InvalidState("sarah estimator used before the recursion was seeded");
      }
      return *state.prev_v + batch_gradient(problem, w, batch, counts) -
             batch_gradient(problem, *state.prev_w, batch, counts);
    }
    case EstimatorState::Kind::Hybrid: {
      if (!state.prev_w || !state.prev_v) {
        throw InvalidState("hybrid estimator used before the recursion was seeded");
      }
      const double beta = state.mix_beta ? state.mix_beta(state.step) : 0.0;
      if (beta < 0.0 || beta > 1.0) {
        throw InvalidArgument("hybrid estimator: beta_t must lie in [0, 1]");
      }
      const Weights gw = batch_gradient(problem, w, batch, counts);
      const Weights gprev = batch_gradient(problem, *state.prev_w, batch, counts);
      return (1.0 - beta) * (*state.prev_v + gw - gprev) + beta * gw;
    }
  }
  throw InvalidArgument("unknown estimator kind");
}

}  // namespace

BatchSampler::BatchSampler(std::uint64_t seed, int population)
    : rng_(seed), n_(population) {}

std::vector<int> BatchSampler::draw(int batch) {
  if (batch < 1 || batch > n_) throw InvalidArgument("sampler: bad batch size");
  std::vector<int> idx(n_);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < batch; ++i) {
    std::uniform_int_distribution<int> pick(i, n_ - 1);
    std::swap(idx[i], idx[pick(rng_)]);
  }
  idx.resize(batch);
  return idx;
}

EstimatorState EstimatorState::minibatch(int batch, std::uint64_t seed, int population) {
  EstimatorState s;
  s.kind = Kind::MiniBatch;
  s.batch = batch;
  s.sampler = BatchSampler(seed, population);
  return s;
}
EstimatorState EstimatorState::svrg(int batch, std::uint64_t seed, int population) {
  EstimatorState s;
  s.kind = Kind::Svrg;
  s.batch = batch;
  s.sampler = BatchSampler(seed, population);
  return s;
}
EstimatorState EstimatorState::sarah(int batch, std::uint64_t seed, int population) {
  EstimatorState s;
  s.kind = Kind::Sarah;
  s.batch = batch;
  s.sampler = BatchSampler(seed, population);
  return s;
}
EstimatorState EstimatorState::hybrid(int batch, double beta, std::uint64_t seed,
                                      int population) {
  return hybrid(batch, [beta](int) { return beta; }, seed, population);
}
EstimatorState EstimatorState::hybrid(int batch, std::function<double(int)> beta,
                                      std::uint64_t seed, int population) {
  EstimatorState s;
  s.kind = Kind::Hybrid;
  s.batch = batch;
  s.mix_beta = std::move(beta);
  s.sampler = BatchSampler(seed, population);
  return s;
}

Weights full_gradient(const ProblemInstance& problem, const Weights& w,
                      OracleCounts* counts) {
  const int n = problem.num_components();
  if (n < 1) throw InvalidArgument("full_gradient: problem has no components");
  if (counts) counts->component_evals += n;
  return problem.grad(w);
}

Weights batch_gradient(const ProblemInstance& problem, const Weights& w,
                       const std::vector<int>& batch, OracleCounts* counts) {
  if (batch.empty()) throw InvalidArgument("batch_gradient: empty batch");
  Weights g = Weights::Zero(problem.dim());
  for (int i : batch) g += problem.component_grad(i, w);
  if (counts) counts->component_evals += static_cast<std::int64_t>(batch.size());
  return g / static_cast<double>(batch.size());
}

void take_snapshot(EstimatorState& state, const ProblemInstance& problem,
                   const Weights& w, OracleCounts* counts) {
  state.snapshot_w = w;
  state.snapshot_grad = full_gradient(problem, w, counts);
}

void seed_recursion(EstimatorState& state, const ProblemInstance& problem,
                    const Weights& w, OracleCounts* counts) {
  state.prev_w = w;
  state.prev_v = full_gradient(problem, w, counts);
  state.last_v = *state.prev_v;
}

Weights estimate(EstimatorState& state, const ProblemInstance& problem,
                 const Weights& w, OracleCounts* counts) {
  check_finite_sum(problem, state);
  const std::vector<int> batch = state.sampler.draw(state.batch);
  Weights v = estimate_for_batch(state, problem, w, batch, counts);
  if (state.kind == EstimatorState::Kind::Sarah ||
      state.kind == EstimatorState::Kind::Hybrid) {
    state.prev_w = w;
    state.prev_v = v;
  }
  state.last_v = v;
  state.step += 1;
  return v;
}

Weights enumerate_conditional_mean(const EstimatorState& state,
                                   const ProblemInstance& problem, const Weights& w) {
  check_finite_sum(problem, state);
  const int n = problem.num_components();
  const double paths = binomial(n, state.batch);
  if (paths > kEnumerationGuard) {
    throw Unsupported("enumerate_conditional_mean: too many batches to enumerate");
  }
  Weights sum = Weights::Zero(problem.dim());
  for_each_batch(n, state.batch, [&](const std::vector<int>& batch) {
    sum += estimate_for_batch(state, problem, w, batch, nullptr);
  });
  return sum / paths;
}

double enumerate_conditional_variance(const EstimatorState& state,
                                      const ProblemInstance& problem, const Weights& w) {
  check_finite_sum(problem, state);
  const int n = problem.num_components();
  const double paths = binomial(n, state.batch);
  if (paths > kEnumerationGuard) {
    throw Unsupported("enumerate_conditional_variance: too many batches to enumerate");
  }
  const Weights g = problem.grad(w);
  double sum = 0.0;
  for_each_batch(n, state.batch, [&](const std::vector<int>& batch) {
    sum += (estimate_for_batch(state, problem, w, batch, nullptr) - g).squaredNorm();
  });
  return sum / paths;
}

int SgdDriverSpec::inner_length(int s) const {
  if (inner_lengths.empty()) throw InvalidArgument("sgd driver: inner lengths missing");
  if (inner_lengths.size() == 1) return inner_lengths.front();
  if (s < 0 || s >= static_cast<int>(inner_lengths.size())) {
    throw InvalidArgument("sgd driver: stage index out of range");
  }
  return inner_lengths[static_cast<std::size_t>(s)];
}

int SgdDriverSpec::total_iterations() const {
  if (stages <= 0) return inner_length(0);
  int total = 0;
  for (int s = 0; s < stages; ++s) total += inner_length(s);
  return total;
}

RunRecord run_unified_sgd(const ProblemInstance& problem, const SgdDriverSpec& spec,
                          const Weights& w0, std::uint64_t seed) {
  const int n = problem.num_components();
  if (n < 1) throw InvalidArgument("run_unified_sgd: problem has no components");
  if (w0.size() != problem.dim()) throw InvalidArgument("run_unified_sgd: w0 dimension mismatch");
  for (int T : spec.inner_lengths) {
    if (T < 1) throw InvalidArgument("run_unified_sgd: inner lengths must be >= 1");
  }
  if (spec.loopless_rho && !(*spec.loopless_rho > 0.0 && *spec.loopless_rho <= 1.0)) {
    throw InvalidArgument("run_unified_sgd: loopless rho must lie in (0, 1]");
  }

  const auto start = std::chrono::steady_clock::now();
  const bool recursive = spec.estimator == EstimatorState::Kind::Sarah ||
                         spec.estimator == EstimatorState::Kind::Hybrid;
  const char* name = "sgd";
  switch (spec.estimator) {
    case EstimatorState::Kind::Svrg: name = "svrg"; break;
    case EstimatorState::Kind::Sarah: name = "sarah"; break;
    case EstimatorState::Kind::Hybrid: name = "hybrid"; break;
    default: break;
  }

  RunRecord rec;
  rec.method = name;
  rec.seed = seed;

  EstimatorState state;
  switch (spec.estimator) {
    case EstimatorState::Kind::MiniBatch:
      state = EstimatorState::minibatch(spec.batch, seed, n);
      break;
    case EstimatorState::Kind::Svrg:
      state = EstimatorState::svrg(spec.batch, seed, n);
      break;
    case EstimatorState::Kind::Sarah:
      state = EstimatorState::sarah(spec.batch, seed, n);
      break;
    case EstimatorState::Kind::Hybrid:
      state = EstimatorState::hybrid(spec.batch, spec.hybrid_beta ? spec.hybrid_beta
                                                                  : [](int) { return 0.0; },
                                     seed, n);
      break;
  }
  // Separate stream for snapshot picks and Bernoulli refreshes so batch
  // sequences depend only on (seed, iteration).
  std::mt19937_64 engine_rng(seed ^ 0x9e3779b97f4a7c15ULL);

  OracleCounts counts;
  StepPolicy policy = spec.step;
  Weights w = w0;
  int k = 0;  // global iteration counter

  const auto record_iterate = [&](const Weights& wt) {
    rec.f.push_back(problem.value(wt));
    rec.grad_norm_sq.push_back(problem.grad(wt).squaredNorm());
    const auto& ws = problem.constants().w_star;
    rec.dist_sq.push_back(ws ? (wt - *ws).squaredNorm()
                             : std::numeric_limits<double>::quiet_NaN());
    rec.counts.push_back(counts);
    if (spec.record_iterates) rec.iterates.push_back(wt);
  };

  const auto apply_step = [&](const Weights& v) {
    const double eta = policy.next_step(k, w, v, problem);
    Weights next = w - eta * v;
    if (!next.allFinite()) {
      throw Diverged("iterate became non-finite: diverged(" + std::to_string(k) + ")", k);
    }
    rec.eta.push_back(eta);
    if (spec.record_iterates) rec.directions.push_back(v);
    w = std::move(next);
    k += 1;
  };

  if (spec.loopless_rho) {
    // Single loop; each iteration refreshes the snapshot independently with
    // probability rho.
    std::bernoulli_distribution refresh(*spec.loopless_rho);
    const int total = spec.total_iterations();
    bool fresh = true;
    if (spec.estimator == EstimatorState::Kind::Svrg) take_snapshot(state, problem, w, &counts);
    else if (recursive) seed_recursion(state, problem, w, &counts);
    for (int t = 0; t < total; ++t) {
      record_iterate(w);
      if (t > 0 && refresh(engine_rng)) {
        if (spec.estimator == EstimatorState::Kind::Svrg) {
          take_snapshot(state, problem, w, &counts);
        } else if (recursive) {
          seed_recursion(state, problem, w, &counts);
        }
        fresh = true;
      }
      if (recursive && fresh) {
        state.step = k + 1;
        apply_step(*state.prev_v);
      } else {
        state.step = k;
        apply_step(estimate(state, problem, w, &counts));
      }
      fresh = false;
    }
    record_iterate(w);
  } else if (spec.stages <= 0) {
    // Plain single-loop SGD.
    const int total = spec.inner_length(0);
    if (spec.estimator == EstimatorState::Kind::Svrg) take_snapshot(state, problem, w, &counts);
    else if (recursive) seed_recursion(state, problem, w, &counts);
    for (int t = 0; t < total; ++t) {
      record_iterate(w);
      if (recursive && t == 0) {
        // First step consumes the exact seed gradient v0.
        state.step = 1;
        apply_step(*state.prev_v);
      } else {
        state.step = k;
        apply_step(estimate(state, problem, w, &counts));
      }
    }
    record_iterate(w);
  } else {
    Weights anchor = w0;
    for (int s = 0; s < spec.stages; ++s) {
      if (spec.estimator == EstimatorState::Kind::Svrg) {
        take_snapshot(state, problem, anchor, &counts);
      } else if (recursive) {
        seed_recursion(state, problem, anchor, &counts);
      }
      w = anchor;
      const int Ts = spec.inner_length(s);
      std::vector<Weights> stage_iterates;
      stage_iterates.reserve(static_cast<std::size_t>(Ts) + 1);
      for (int t = 0; t < Ts; ++t) {
        record_iterate(w);
        stage_iterates.push_back(w);
        state.step = k;
        apply_step(estimate(state, problem, w, &counts));
      }
      stage_iterates.push_back(w);
      if (spec.snapshot_rule == SgdDriverSpec::SnapshotRule::UniformRandom) {
        std::uniform_int_distribution<int> pick(0, Ts);
        anchor = stage_iterates[static_cast<std::size_t>(pick(engine_rng))];
      } else {
        anchor = w;
      }
    }
    record_iterate(w);
  }

  rec.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace descentlab
