// Python bindings for the core operations: problems, prox, schedules,
// iteration engines, estimators, and the certification toolkit.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "descentlab/certificates.hpp"
#include "descentlab/csvio.hpp"
#include "descentlab/estimators.hpp"
#include "descentlab/methods.hpp"
#include "descentlab/problems.hpp"
#include "descentlab/prox.hpp"
#include "descentlab/schedules.hpp"
#include "descentlab/serialize.hpp"

namespace py = pybind11;
using namespace descentlab;

namespace {

OutputMode output_mode_from_name(const std::string& name) {
  if (name == "last_iterate") return OutputMode::LastIterate;
  if (name == "uniform_average") return OutputMode::UniformAverage;
  if (name == "weighted_average") return OutputMode::WeightedAverage;
  if (name == "best_grad_iterate") return OutputMode::BestGradIterate;
  throw InvalidArgument("unknown output mode: " + name);
}

EstimatorState::Kind estimator_kind_from_name(const std::string& name) {
  if (name == "minibatch") return EstimatorState::Kind::MiniBatch;
  if (name == "svrg") return EstimatorState::Kind::Svrg;
  if (name == "sarah") return EstimatorState::Kind::Sarah;
  if (name == "hybrid") return EstimatorState::Kind::Hybrid;
  throw InvalidArgument("unknown estimator kind: " + name);
}

SgdDriverSpec make_driver(int stages, std::vector<int> inner, const std::string& estimator,
                          int batch, StepPolicy step, double hybrid_beta,
                          const std::string& snapshot, std::optional<double> loopless_rho,
                          bool record_iterates) {
  SgdDriverSpec spec;
  spec.stages = stages;
  spec.inner_lengths = std::move(inner);
  spec.estimator = estimator_kind_from_name(estimator);
  spec.batch = batch;
  spec.step = std::move(step);
  spec.hybrid_beta = [hybrid_beta](int) { return hybrid_beta; };
  if (snapshot == "uniform_random") {
    spec.snapshot_rule = SgdDriverSpec::SnapshotRule::UniformRandom;
  } else if (snapshot != "last") {
    throw InvalidArgument("unknown snapshot rule: " + snapshot);
  }
  spec.loopless_rho = loopless_rho;
  spec.record_iterates = record_iterates;
  return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "first-order optimization laboratory with convergence certificates";

  py::register_exception<InvalidArgument>(m, "InvalidArgumentError", PyExc_ValueError);
  py::register_exception<Unsupported>(m, "UnsupportedError", PyExc_NotImplementedError);
  py::register_exception<InvalidState>(m, "InvalidStateError", PyExc_RuntimeError);
  py::register_exception<NumericFailure>(m, "NumericFailureError", PyExc_RuntimeError);
  py::register_exception<CertificateFailure>(m, "CertificateFailureError",
                                             PyExc_RuntimeError);
  py::register_exception<Diverged>(m, "DivergedError", PyExc_RuntimeError);

  py::class_<StructureConstants>(m, "StructureConstants")
      .def_readonly("L", &StructureConstants::L)
      .def_readonly("mu", &StructureConstants::mu)
      .def_readonly("L_avg", &StructureConstants::L_avg)
      .def_readonly("M", &StructureConstants::M)
      .def_readonly("F_star", &StructureConstants::F_star)
      .def_readonly("w_star", &StructureConstants::w_star)
      .def_readonly("region_radius", &StructureConstants::region_radius);

  py::class_<ProblemInstance>(m, "Problem")
      .def_static("quadratic", &ProblemInstance::quadratic, py::arg("Q"), py::arg("q"))
      .def_static("least_squares", &ProblemInstance::least_squares, py::arg("X"),
                  py::arg("y"))
      .def_static("logistic", &ProblemInstance::logistic, py::arg("X"), py::arg("y"))
      .def_static(
          "composite_l1",
          [](const ProblemInstance& inner, double lam, std::optional<double> radius) {
            return ProblemInstance::composite_l1(inner, lam, radius);
          },
          py::arg("inner"), py::arg("lam"), py::arg("region_radius") = std::nullopt)
      .def_static(
          "finite_sum_quadratic",
          [](const std::vector<std::pair<Matrix, Weights>>& comps) {
            std::vector<QuadraticComponent> out;
            out.reserve(comps.size());
            for (const auto& [Q, q] : comps) out.push_back({Q, q});
            return ProblemInstance::finite_sum_quadratic(std::move(out));
          },
          py::arg("components"))
      .def_property_readonly("dim", &ProblemInstance::dim)
      .def_property_readonly("is_convex", &ProblemInstance::is_convex)
      .def_property_readonly("is_composite", &ProblemInstance::is_composite)
      .def_property_readonly("num_components", &ProblemInstance::num_components)
      .def_property_readonly("l1_weight", &ProblemInstance::l1_weight)
      .def_property_readonly("constants", &ProblemInstance::constants)
      .def("value", &ProblemInstance::value, py::arg("w"))
      .def("smooth_value", &ProblemInstance::smooth_value, py::arg("w"))
      .def("grad", &ProblemInstance::grad, py::arg("w"))
      .def("component_grad", &ProblemInstance::component_grad, py::arg("i"), py::arg("w"))
      .def("subgradient", &ProblemInstance::subgradient, py::arg("w"))
      .def("certify_constants", &ProblemInstance::certify_constants);

  m.def("load_problem",
        [](const std::string& text) { return problem_from_json(Json::parse(text)); },
        py::arg("json_text"), "Build a problem from a JSON fixture document.");

  py::class_<ProxSpec>(m, "ProxSpec");
  m.def("prox_zero", &ProxSpec::zero, py::arg("gamma") = 1.0);
  m.def("prox_l1", &ProxSpec::l1, py::arg("lam"), py::arg("gamma") = 1.0);
  m.def("prox_sq_l2", &ProxSpec::sq_l2, py::arg("lam"), py::arg("gamma") = 1.0);
  m.def("prox_box", &ProxSpec::box, py::arg("lo"), py::arg("hi"), py::arg("gamma") = 1.0);
  m.def("prox_l2_ball", &ProxSpec::l2_ball, py::arg("radius"), py::arg("gamma") = 1.0);
  m.def("prox_group_l2", &ProxSpec::group_l2, py::arg("blocks"), py::arg("lam"),
        py::arg("gamma") = 1.0);
  m.def("prox", py::overload_cast<const ProxSpec&, const Weights&>(&prox),
        py::arg("spec"), py::arg("w"));
  m.def("prox", py::overload_cast<const ProxSpec&, double, const Weights&>(&prox),
        py::arg("spec"), py::arg("gamma"), py::arg("w"));
  m.def("prox_via_moreau",
        py::overload_cast<const ProxSpec&, const Weights&>(&prox_via_moreau),
        py::arg("spec"), py::arg("w"));
  m.def("gradient_mapping", &gradient_mapping, py::arg("problem"), py::arg("spec"),
        py::arg("w"), py::arg("beta"));

  py::class_<StepPolicy>(m, "StepPolicy")
      .def("next_step", &StepPolicy::next_step, py::arg("t"), py::arg("w"), py::arg("g"),
           py::arg("problem"))
      .def_property_readonly("degenerate", &StepPolicy::degenerate);
  m.def("schedule_constant", &StepPolicy::constant, py::arg("eta"));
  m.def("schedule_diminishing", &StepPolicy::diminishing, py::arg("C"), py::arg("beta"),
        py::arg("nu"));
  m.def("schedule_staircase", &StepPolicy::staircase, py::arg("C"), py::arg("beta"),
        py::arg("nu"), py::arg("s"));
  m.def("schedule_adaptive", &StepPolicy::adaptive_accumulator, py::arg("C"),
        py::arg("eps") = 1e-8);
  m.def("schedule_bb", &StepPolicy::barzilai_borwein, py::arg("eta0"));
  m.def("schedule_exact_quadratic", &StepPolicy::exact_quadratic);

  py::class_<OracleCounts>(m, "OracleCounts")
      .def_readonly("function_evals", &OracleCounts::function_evals)
      .def_readonly("gradient_evals", &OracleCounts::gradient_evals)
      .def_readonly("component_evals", &OracleCounts::component_evals)
      .def_readonly("prox_evals", &OracleCounts::prox_evals);

  py::class_<RunRecord>(m, "RunRecord")
      .def_readonly("method", &RunRecord::method)
      .def_readonly("f", &RunRecord::f)
      .def_readonly("grad_norm_sq", &RunRecord::grad_norm_sq)
      .def_readonly("dist_sq", &RunRecord::dist_sq)
      .def_readonly("eta", &RunRecord::eta)
      .def_readonly("iterates", &RunRecord::iterates)
      .def_readonly("thetas", &RunRecord::thetas)
      .def_readonly("momentum_betas", &RunRecord::momentum_betas)
      .def_readonly("restart_steps", &RunRecord::restart_steps)
      .def_readonly("seed", &RunRecord::seed)
      .def_readonly("wall_time_sec", &RunRecord::wall_time_sec)
      .def_property_readonly("steps", &RunRecord::steps)
      .def_property_readonly("counts",
                             [](const RunRecord& r) { return oracle_complexity(r); });

  m.def(
      "run_gd",
      [](const ProblemInstance& p, StepPolicy policy, const Weights& w0, int T,
         bool record_iterates) {
        RunOptions opt;
        opt.record_iterates = record_iterates;
        return run_deterministic(p, MethodSpec::gd(), std::move(policy), w0, T, opt);
      },
      py::arg("problem"), py::arg("schedule"), py::arg("w0"), py::arg("T"),
      py::arg("record_iterates") = true);
  m.def(
      "run_subgradient",
      [](const ProblemInstance& p, StepPolicy policy, const Weights& w0, int T) {
        return run_deterministic(p, MethodSpec::subgradient(), std::move(policy), w0, T);
      },
      py::arg("problem"), py::arg("schedule"), py::arg("w0"), py::arg("T"));
  m.def(
      "run_prox_grad",
      [](const ProblemInstance& p, const ProxSpec& spec, StepPolicy policy,
         const Weights& w0, int T) {
        return run_deterministic(p, MethodSpec::prox_grad(spec), std::move(policy), w0, T);
      },
      py::arg("problem"), py::arg("prox"), py::arg("schedule"), py::arg("w0"),
      py::arg("T"));
  m.def(
      "run_heavy_ball",
      [](const ProblemInstance& p, double beta, StepPolicy policy, const Weights& w0,
         int T) {
        return run_deterministic(p, MethodSpec::heavy_ball(beta), std::move(policy), w0, T);
      },
      py::arg("problem"), py::arg("beta"), py::arg("schedule"), py::arg("w0"),
      py::arg("T"));
  m.def(
      "run_noisy_gd",
      [](const ProblemInstance& p, double sigma, std::uint64_t seed, StepPolicy policy,
         const Weights& w0, int T) {
        return run_deterministic(p, MethodSpec::noisy_gd(sigma, seed), std::move(policy),
                                 w0, T);
      },
      py::arg("problem"), py::arg("sigma"), py::arg("seed"), py::arg("schedule"),
      py::arg("w0"), py::arg("T"));
  m.def(
      "run_nesterov",
      [](const ProblemInstance& p, const Weights& w0, int T, const std::string& rule,
         bool restart) {
        ThetaSequence theta;
        theta.rule = rule == "recurrence" ? ThetaSequence::Rule::Recurrence
                                          : ThetaSequence::Rule::HalfShift;
        return run_nesterov(p, theta, w0, T,
                            restart ? RestartRule::FunctionValue : RestartRule::None);
      },
      py::arg("problem"), py::arg("w0"), py::arg("T"), py::arg("theta_rule") = "half_shift",
      py::arg("restart") = false);
  m.def(
      "run_dual_averaging",
      [](const ProblemInstance& p, double gamma, double eta, const Weights& w0, int T) {
        return run_dual_averaging(p, [gamma](int) { return gamma; }, eta, w0, T);
      },
      py::arg("problem"), py::arg("gamma"), py::arg("eta"), py::arg("w0"), py::arg("T"));

  py::class_<SgdDriverSpec>(m, "SgdDriverSpec")
      .def(py::init(&make_driver), py::arg("stages"), py::arg("inner"),
           py::arg("estimator"), py::arg("batch"), py::arg("step"),
           py::arg("hybrid_beta") = 0.0, py::arg("snapshot") = "last",
           py::arg("loopless_rho") = std::nullopt, py::arg("record_iterates") = true);
  m.def("run_unified_sgd", &run_unified_sgd, py::arg("problem"), py::arg("spec"),
        py::arg("w0"), py::arg("seed"));

  py::class_<EstimatorState>(m, "EstimatorState")
      .def_static("minibatch", &EstimatorState::minibatch, py::arg("batch"),
                  py::arg("seed"), py::arg("population"))
      .def_static("svrg", &EstimatorState::svrg, py::arg("batch"), py::arg("seed"),
                  py::arg("population"))
      .def_static("sarah", &EstimatorState::sarah, py::arg("batch"), py::arg("seed"),
                  py::arg("population"))
      .def_static(
          "hybrid",
          [](int batch, double beta, std::uint64_t seed, int population) {
            return EstimatorState::hybrid(batch, beta, seed, population);
          },
          py::arg("batch"), py::arg("beta"), py::arg("seed"), py::arg("population"));
  m.def("take_snapshot",
        [](EstimatorState& s, const ProblemInstance& p, const Weights& w) {
          take_snapshot(s, p, w);
        },
        py::arg("state"), py::arg("problem"), py::arg("w"));
  m.def("seed_recursion",
        [](EstimatorState& s, const ProblemInstance& p, const Weights& w) {
          seed_recursion(s, p, w);
        },
        py::arg("state"), py::arg("problem"), py::arg("w"));
  m.def("estimate",
        [](EstimatorState& s, const ProblemInstance& p, const Weights& w) {
          return estimate(s, p, w);
        },
        py::arg("state"), py::arg("problem"), py::arg("w"));
  m.def("enumerate_conditional_mean", &enumerate_conditional_mean, py::arg("state"),
        py::arg("problem"), py::arg("w"));
  m.def("enumerate_conditional_variance", &enumerate_conditional_variance,
        py::arg("state"), py::arg("problem"), py::arg("w"));

  py::class_<CertificateTrace>(m, "CertificateTrace")
      .def_readonly("D", &CertificateTrace::D)
      .def_readonly("Delta", &CertificateTrace::Delta)
      .def_readonly("E", &CertificateTrace::E)
      .def_readonly("omega", &CertificateTrace::omega)
      .def_readonly("slack", &CertificateTrace::slack)
      .def_readonly("bound", &CertificateTrace::bound)
      .def_readonly("min_slack", &CertificateTrace::min_slack)
      .def_readonly("nodes_checked", &CertificateTrace::nodes_checked)
      .def_readonly("paths", &CertificateTrace::paths)
      .def_readonly("root_unbiasedness_error",
                    &CertificateTrace::root_unbiasedness_error)
      .def_readonly("frozen_constant", &CertificateTrace::frozen_constant);

  m.def(
      "certify_deterministic",
      [](const RunRecord& run, const ProblemInstance& p, const std::string& scheme) {
        return certify_deterministic(run, p, scheme_from_name(scheme));
      },
      py::arg("run"), py::arg("problem"), py::arg("scheme"));
  m.def(
      "certify_stochastic_enumerated",
      [](const ProblemInstance& p, const SgdDriverSpec& spec, const Weights& w0, int T,
         const std::string& scheme) {
        return certify_stochastic_enumerated(p, spec, w0, T, scheme_from_name(scheme));
      },
      py::arg("problem"), py::arg("spec"), py::arg("w0"), py::arg("T"), py::arg("scheme"));

  py::class_<HybridCertParams>(m, "HybridCertParams")
      .def_readwrite("eta", &HybridCertParams::eta)
      .def_readwrite("c", &HybridCertParams::c)
      .def_readwrite("beta", &HybridCertParams::beta)
      .def_readwrite("sigma_hat_sq", &HybridCertParams::sigma_hat_sq)
      .def_readwrite("sigma_init_sq", &HybridCertParams::sigma_init_sq);
  py::class_<HybridCertReport>(m, "HybridCertReport")
      .def_readonly("cond1_residual", &HybridCertReport::cond1_residual)
      .def_readonly("cond2_residual", &HybridCertReport::cond2_residual)
      .def_readonly("beta_feasibility_margin", &HybridCertReport::beta_feasibility_margin)
      .def_readonly("ensemble_mean", &HybridCertReport::ensemble_mean)
      .def_readonly("ensemble_stderr", &HybridCertReport::ensemble_stderr)
      .def_readonly("bound", &HybridCertReport::bound)
      .def_readonly("margin", &HybridCertReport::margin)
      .def_readonly("bound_ok", &HybridCertReport::bound_ok);
  m.def("hybrid_default_params", &hybrid_default_params, py::arg("L"), py::arg("T"));
  m.def("certify_hybrid", &certify_hybrid, py::arg("ensemble"), py::arg("params"),
        py::arg("problem"));
  m.def("max_enumerated_minibatch_variance", &max_enumerated_minibatch_variance,
        py::arg("problem"), py::arg("ensemble"), py::arg("batch"));

  m.def(
      "evaluate_bound",
      [](const std::string& kind, const StructureConstants& c, py::kwargs kwargs) {
        BoundInputs in;
        if (kwargs.contains("t")) in.t = kwargs["t"].cast<long long>();
        if (kwargs.contains("R0")) in.R0 = kwargs["R0"].cast<double>();
        if (kwargs.contains("C")) in.C = kwargs["C"].cast<double>();
        if (kwargs.contains("M")) in.M = kwargs["M"].cast<double>();
        if (kwargs.contains("eta")) in.eta = kwargs["eta"].cast<double>();
        if (kwargs.contains("f0_gap")) in.f0_gap = kwargs["f0_gap"].cast<double>();
        if (kwargs.contains("v0_norm_sq"))
          in.v0_norm_sq = kwargs["v0_norm_sq"].cast<double>();
        if (kwargs.contains("beta")) in.beta = kwargs["beta"].cast<double>();
        if (kwargs.contains("sigma_hat_sq"))
          in.sigma_hat_sq = kwargs["sigma_hat_sq"].cast<double>();
        if (kwargs.contains("sigma_init_sq"))
          in.sigma_init_sq = kwargs["sigma_init_sq"].cast<double>();
        return evaluate_bound(bound_from_name(kind), c, in);
      },
      py::arg("kind"), py::arg("constants"));

  py::class_<OutputCertificate>(m, "OutputCertificate")
      .def_readonly("w_hat", &OutputCertificate::w_hat)
      .def_readonly("f_hat", &OutputCertificate::f_hat)
      .def_readonly("f_gap", &OutputCertificate::f_gap)
      .def_readonly("grad_norm_sq", &OutputCertificate::grad_norm_sq)
      .def_readonly("jensen_slack", &OutputCertificate::jensen_slack);
  m.def(
      "certify_output",
      [](const RunRecord& run, const std::string& mode, const ProblemInstance& p) {
        return certify_output(run, output_mode_from_name(mode), p);
      },
      py::arg("run"), py::arg("mode"), py::arg("problem"));

  m.def("fit_rate", &fit_rate, py::arg("series"), py::arg("tail_fraction"));
  m.def("oracle_complexity", &oracle_complexity, py::arg("run"));
  m.def("averaged_gap_bounds", &averaged_gap_bounds, py::arg("R0"), py::arg("M"),
        py::arg("etas"));
  m.def("weighted_average_gaps", &weighted_average_gaps, py::arg("run"),
        py::arg("problem"));

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "0.1.0";
#endif
}
