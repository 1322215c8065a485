#pragma once

#include <limits>
#include <string>
#include <vector>

#include "descentlab/estimators.hpp"
#include "descentlab/methods.hpp"
#include "descentlab/problems.hpp"
#include "descentlab/types.hpp"

namespace descentlab {

// The worked per-scheme instantiations of the recursion
//   D_{t+1} + Delta_t <= omega_t D_t + E_t.
enum class Scheme {
  SubgradientConvex,
  GdNonconvex,
  GdConvex,
  NesterovConvex,
  SgdConvexEnumerated,
  SgdNonconvexEnumerated,
  HybridVR,
};

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

// Per-iteration record of the recursion quantities.  slack_t is
// omega_t D_t + E_t - D_{t+1} - Delta_t; nonnegative up to rounding when the
// certificate holds.  For enumerated schemes D/Delta are expectations over
// the batch tree and slack is the worst node slack at that depth.
struct CertificateTrace {
  Scheme scheme = Scheme::GdConvex;
  std::vector<double> D;      // size T+1
  std::vector<double> Delta;  // size T
  std::vector<double> E;
  std::vector<double> omega;
  std::vector<double> slack;
  std::vector<double> bound;  // optimality bound per iterate (nan where undefined)
  double min_slack = std::numeric_limits<double>::infinity();
  // Enumerated schemes:
  std::size_t nodes_checked = 0;
  std::size_t paths = 0;
  double root_unbiasedness_error = std::numeric_limits<double>::quiet_NaN();
  // Frozen constant used in E_t: M^2 for the convex scheme, sigma^2 for the
  // nonconvex one.
  double frozen_constant = std::numeric_limits<double>::quiet_NaN();
};

// Checks the recursion pathwise on a recorded deterministic run and throws
// CertificateFailure at the first violated step.
CertificateTrace certify_deterministic(const RunRecord& run,
                                       const ProblemInstance& problem, Scheme scheme);

// Exact stochastic certification: walks the full expectation tree of batch
// sequences (single-loop minibatch SGD) and asserts the conditional
// recursion at every node with tolerance 1e-12.
CertificateTrace certify_stochastic_enumerated(const ProblemInstance& problem,
                                               const SgdDriverSpec& spec,
                                               const Weights& w0, int T, Scheme scheme);

// Constant parameters of the hybrid variance-reduced certificate.
struct HybridCertParams {
  double eta = 0.0;
  double c = 0.0;
  double beta = 0.0;
  double sigma_hat_sq = std::numeric_limits<double>::quiet_NaN();
  double sigma_init_sq = 0.0;  // sigma_{-1}^2 budget
};

// Canonical choice: eta = 1/(L (T+1)^{1/3}), c making the first parameter
// condition tight, beta on the feasibility boundary,
// sigma_init = (T+1)^{-1/3}.
HybridCertParams hybrid_default_params(double L, long long T);

struct HybridCertReport {
  double cond1_residual = 0.0;  // |2 L^2 eta^2 c (1-beta)^2 - eta (1 - L eta)|
  double cond2_residual = 0.0;  // |c (1-beta)^2 - (c - eta)|
  double beta_feasibility_margin = 0.0;  // rhs - (1-beta)^2
  double ensemble_mean = 0.0;
  double ensemble_stderr = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // 3 * stderr
  bool bound_ok = false;
};

// Verifies the parameter conditions and the closed-form rate bound against a
// seeded run ensemble (K >= 20).  Throws InvalidArgument when the parameter
// conditions fail outright.
HybridCertReport certify_hybrid(const std::vector<RunRecord>& ensemble,
                                const HybridCertParams& params,
                                const ProblemInstance& problem);

// Largest exact minibatch variance observed along the recorded iterates; the
// tightest constant for the hybrid certificate's sigma_hat^2.
double max_enumerated_minibatch_variance(const ProblemInstance& problem,
                                         const std::vector<RunRecord>& ensemble,
                                         int batch);

enum class BoundKind {
  GdConvexLastIterate,   // L R0^2 / (2 t)
  NesterovLastIterate,   // 2 L R0^2 / (t+1)^2
  GdNonconvexMinGrad,    // f0_gap / sum_t eta (1 - L eta / 2)
  SgdAvgFixedStep,       // R0^2/(2C sqrt(T+1)) + M^2 C/(2 sqrt(T+1))
  SgdAvgDiminishing,     // R0^2/(4C(sqrt(T+1)-1)) + M^2 C (1+ln(T+1))/(4(sqrt(T+1)-1))
  HybridVrAvgGradSq,
};

std::string bound_name(BoundKind k);
BoundKind bound_from_name(const std::string& name);

struct BoundInputs {
  long long t = -1;  // iterate index (or horizon T for averaged schemes)
  double R0 = std::numeric_limits<double>::quiet_NaN();
  double C = std::numeric_limits<double>::quiet_NaN();
  double M = std::numeric_limits<double>::quiet_NaN();
  double eta = std::numeric_limits<double>::quiet_NaN();
  double f0_gap = std::numeric_limits<double>::quiet_NaN();
  double v0_norm_sq = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
  double sigma_hat_sq = std::numeric_limits<double>::quiet_NaN();
  double sigma_init_sq = std::numeric_limits<double>::quiet_NaN();
};

// Closed-form rate bound for the scheme; throws InvalidArgument when a
// required constant is missing.
double evaluate_bound(BoundKind kind, const StructureConstants& constants,
                      const BoundInputs& in);

enum class OutputMode { LastIterate, UniformAverage, WeightedAverage, BestGradIterate };

struct OutputCertificate {
  Weights w_hat;
  double f_hat = 0.0;
  double f_gap = std::numeric_limits<double>::quiet_NaN();
  double grad_norm_sq = 0.0;
  // Weighted mean of F over the run minus F(w_hat); nonnegative for convex
  // problems by Jensen.
  double jensen_slack = std::numeric_limits<double>::quiet_NaN();
};

// Output certification over a recorded run with full iterates.  gammas
// default to the recorded step sizes for WeightedAverage.
OutputCertificate certify_output(const RunRecord& run, OutputMode mode,
                                 const ProblemInstance& problem,
                                 const std::vector<double>* gammas = nullptr);

// Least-squares slope of log(series) against log(t) over the trailing
// fraction of the index range (series[i] corresponds to t = i+1).
double fit_rate(const std::vector<double>& series, double tail_fraction);

// Total oracle usage of a run.
OracleCounts oracle_complexity(const RunRecord& run);

// Telescoped averaged-gap bounds (1/2 R0^2 + 1/2 M^2 sum eta^2) / S_T for
// every horizon T < etas.size().
std::vector<double> averaged_gap_bounds(double R0, double M,
                                        const std::vector<double>& etas);

// Objective gap of the eta-weighted running average of the iterates, per
// horizon T (requires recorded iterates and certified F*).
std::vector<double> weighted_average_gaps(const RunRecord& run,
                                          const ProblemInstance& problem);

}  // namespace descentlab
