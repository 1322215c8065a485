// Command-line front end: deterministic runs, sweeps, and convergence
// certification with CSV traces and SVG charts.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "descentlab/certificates.hpp"
#include "descentlab/csvio.hpp"
#include "descentlab/estimators.hpp"
#include "descentlab/methods.hpp"
#include "descentlab/serialize.hpp"
#include "descentlab/svg.hpp"

namespace dl = descentlab;
namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMismatch = 3;
constexpr int kExitCap = 4;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
};

dl::ExperimentConfig load(const CommonArgs& args) {
  const dl::Json doc = dl::load_json_file(args.config_path);
  const std::string base = fs::path(args.config_path).parent_path().string();
  dl::ExperimentConfig cfg = dl::parse_config(doc, base.empty() ? "." : base);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (!args.seeds.empty()) cfg.seeds = args.seeds;
  return cfg;
}

dl::RunRecord execute(const dl::ExperimentConfig& cfg, std::uint64_t seed) {
  dl::RunRecord run;
  if (cfg.driver) {
    dl::SgdDriverSpec spec = *cfg.driver;
    run = dl::run_unified_sgd(cfg.problem, spec, cfg.w0, seed);
  } else {
    dl::MethodSpec method = *cfg.method;
    if (method.kind == dl::MethodSpec::Kind::NoisyGD && !method.noise_seed) {
      method.noise_seed = seed;
    }
    // Fixed-step engines ignore the schedule, which the config may omit.
    const dl::StepPolicy policy =
        cfg.schedule ? *cfg.schedule : dl::StepPolicy::constant(1.0);
    run = dl::run_deterministic(cfg.problem, method, policy, cfg.w0, cfg.T);
    run.seed = seed;
  }
  run.config_hash = dl::config_hash(cfg.raw);
  return run;
}

void write_manifest(const std::string& path, const dl::RunRecord& run) {
  dl::Json manifest;
  manifest["config_hash"] = dl::hash_hex(run.config_hash);
  manifest["seed"] = run.seed;
  manifest["git_describe"] = DESCENTLAB_GIT_DESCRIBE;
  manifest["wall_time_sec"] = run.wall_time_sec;
  const auto now = std::chrono::system_clock::now();
  manifest["timestamp"] =
      static_cast<std::int64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                    now.time_since_epoch())
                                    .count());
  std::ofstream out(path);
  out << manifest.dump(2) << '\n';
}

int cmd_run(const CommonArgs& args) {
  const dl::ExperimentConfig cfg = load(args);
  fs::create_directories(cfg.out_dir);
  const std::string hash = dl::hash_hex(dl::config_hash(cfg.raw));
  for (std::uint64_t seed : cfg.seeds) {
    const dl::RunRecord run = execute(cfg, seed);
    const std::string stem =
        cfg.out_dir + "/run_" + hash + "_" + std::to_string(seed);
    dl::write_run_csv(stem + ".csv", run, cfg.problem);
    write_manifest(stem + ".manifest.json", run);
    std::cout << stem << ".csv: " << run.steps() << " steps, final F="
              << dl::format_double(run.f.back()) << '\n';
  }
  return 0;
}

void check_scheme_compatibility(const dl::ExperimentConfig& cfg, dl::Scheme scheme) {
  using Kind = dl::MethodSpec::Kind;
  bool ok = false;
  switch (scheme) {
    case dl::Scheme::SubgradientConvex:
      ok = cfg.method && (cfg.method->kind == Kind::Subgradient ||
                          cfg.method->kind == Kind::GD);
      break;
    case dl::Scheme::GdNonconvex:
    case dl::Scheme::GdConvex:
      ok = cfg.method && cfg.method->kind == Kind::GD;
      break;
    case dl::Scheme::NesterovConvex:
      ok = cfg.method && cfg.method->kind == Kind::Nesterov;
      break;
    case dl::Scheme::SgdConvexEnumerated:
    case dl::Scheme::SgdNonconvexEnumerated:
      ok = cfg.driver && cfg.driver->estimator == dl::EstimatorState::Kind::MiniBatch;
      break;
    case dl::Scheme::HybridVR:
      ok = cfg.driver && cfg.driver->estimator == dl::EstimatorState::Kind::Hybrid;
      break;
  }
  if (!ok) {
    throw dl::Unsupported("certificate scheme " + dl::scheme_name(scheme) +
                          " does not match the configured method");
  }
}

// Observed optimality metric never exceeds the theoretical bound.
void check_bound_dominance(const dl::ExperimentConfig& cfg, const dl::RunRecord& run,
                           const dl::CertificateTrace& trace, dl::Scheme scheme) {
  const auto fstar = cfg.problem.constants().F_star;
  const auto tol = [](double b) { return 1e-10 * (1.0 + std::abs(b)); };
  switch (scheme) {
    case dl::Scheme::GdConvex:
    case dl::Scheme::NesterovConvex: {
      for (std::size_t t = 0; t < run.f.size(); ++t) {
        const double b = trace.bound[t];
        if (!std::isfinite(b)) continue;
        const double gap = run.f[t] - *fstar;
        if (gap > b + tol(b)) {
          throw dl::CertificateFailure(
              "bound dominance violated at t=" + std::to_string(t),
              static_cast<long>(t), b - gap);
        }
      }
      break;
    }
    case dl::Scheme::SubgradientConvex: {
      const auto gaps = dl::weighted_average_gaps(run, cfg.problem);
      for (std::size_t t = 0; t < gaps.size(); ++t) {
        const double b = trace.bound[t];
        if (!std::isfinite(b)) continue;
        if (gaps[t] > b + tol(b)) {
          throw dl::CertificateFailure(
              "averaged-gap bound violated at T=" + std::to_string(t),
              static_cast<long>(t), b - gaps[t]);
        }
      }
      break;
    }
    case dl::Scheme::GdNonconvex: {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t + 1 < run.f.size(); ++t) {
        best = std::min(best, run.grad_norm_sq[t]);
        const double b = trace.bound[t];
        if (std::isfinite(b) && best > b + tol(b)) {
          throw dl::CertificateFailure(
              "min-gradient bound violated at t=" + std::to_string(t),
              static_cast<long>(t), b - best);
        }
      }
      break;
    }
    default:
      break;
  }
}

int cmd_certify(const CommonArgs& args) {
  const dl::ExperimentConfig cfg = load(args);
  if (!cfg.certificate) throw dl::ConfigError("certificate", "missing");
  const dl::Scheme scheme = *cfg.certificate;
  check_scheme_compatibility(cfg, scheme);
  fs::create_directories(cfg.out_dir);
  const std::string hash = dl::hash_hex(dl::config_hash(cfg.raw));

  if (scheme == dl::Scheme::SgdConvexEnumerated ||
      scheme == dl::Scheme::SgdNonconvexEnumerated) {
    const dl::CertificateTrace trace = dl::certify_stochastic_enumerated(
        cfg.problem, *cfg.driver, cfg.w0, cfg.T, scheme);
    dl::write_certificate_csv(cfg.out_dir + "/cert_" + hash + ".csv", trace);
    std::cout << "paths=" << trace.paths << " nodes=" << trace.nodes_checked
              << " min_slack=" << dl::format_double(trace.min_slack)
              << " root_unbiasedness=" << dl::format_double(trace.root_unbiasedness_error)
              << '\n';
    return 0;
  }

  if (scheme == dl::Scheme::HybridVR) {
    if (cfg.seeds.size() < 20) {
      throw dl::ConfigError("seeds", "hybrid certification needs >= 20 seeds");
    }
    std::vector<dl::RunRecord> ensemble;
    ensemble.reserve(cfg.seeds.size());
    for (std::uint64_t seed : cfg.seeds) ensemble.push_back(execute(cfg, seed));
    const auto& consts = cfg.problem.constants();
    const double L = consts.L_avg.value_or(consts.L);
    dl::HybridCertParams params;
    params.eta = ensemble.front().eta.front();
    for (const auto& run : ensemble) {
      for (double e : run.eta) {
        if (std::abs(e - params.eta) > 1e-12) {
          throw dl::Unsupported("hybrid certification needs a constant step size");
        }
      }
    }
    const long long T = static_cast<long long>(ensemble.front().eta.size()) - 1;
    const double le = L * params.eta;
    params.c = (1.0 - le + 2.0 * le * le) / (2.0 * L * le);
    params.beta = cfg.driver->hybrid_beta ? cfg.driver->hybrid_beta(0) : 0.0;
    params.sigma_init_sq = std::pow(static_cast<double>(T) + 1.0, -2.0 / 3.0);
    params.sigma_hat_sq = dl::max_enumerated_minibatch_variance(
                              cfg.problem, ensemble, cfg.driver->batch);
    const dl::HybridCertReport rep = dl::certify_hybrid(ensemble, params, cfg.problem);
    std::cout << "ensemble_mean=" << dl::format_double(rep.ensemble_mean)
              << " bound=" << dl::format_double(rep.bound)
              << " margin=" << dl::format_double(rep.margin)
              << " cond_residuals=(" << dl::format_double(rep.cond1_residual) << ","
              << dl::format_double(rep.cond2_residual) << ")\n";
    return 0;
  }

  const dl::RunRecord run = execute(cfg, cfg.seeds.front());
  const dl::CertificateTrace trace = dl::certify_deterministic(run, cfg.problem, scheme);
  check_bound_dominance(cfg, run, trace, scheme);
  dl::write_certificate_csv(
      cfg.out_dir + "/cert_" + hash + "_" + std::to_string(cfg.seeds.front()) + ".csv",
      trace);
  std::cout << "min_slack=" << dl::format_double(trace.min_slack) << " steps="
            << run.steps() << " ok\n";
  return 0;
}

int cmd_sweep(const CommonArgs& args, int cap) {
  const dl::Json doc = dl::load_json_file(args.config_path);
  if (!doc.contains("grid")) throw dl::ConfigError("grid", "missing");
  const dl::Json& grid = doc.at("grid");
  if (!grid.contains("field")) throw dl::ConfigError("grid.field", "missing");
  if (!grid.contains("values") || !grid.at("values").is_array() ||
      grid.at("values").empty()) {
    throw dl::ConfigError("grid.values", "expected a nonempty array");
  }
  const std::string field = grid.at("field").get<std::string>();
  const dl::Json values = grid.at("values");

  // Dotted path -> json pointer.
  std::string pointer = "/";
  for (char c : field) pointer += (c == '.') ? '/' : c;

  const std::string base = fs::path(args.config_path).parent_path().string();
  dl::ExperimentConfig probe = dl::parse_config(doc, base.empty() ? "." : base);
  if (!args.out_dir.empty()) probe.out_dir = args.out_dir;
  if (!args.seeds.empty()) probe.seeds = args.seeds;

  const std::size_t total = values.size() * probe.seeds.size();
  if (cap > 0 && total > static_cast<std::size_t>(cap)) {
    std::cerr << "sweep: " << total << " runs exceed the cap of " << cap << '\n';
    return kExitCap;
  }

  fs::create_directories(probe.out_dir);
  const std::string hash = dl::hash_hex(dl::config_hash(doc));
  std::ofstream summary(probe.out_dir + "/sweep_summary_" + hash + ".csv");
  summary << "field,value,seed,final_F,final_F_gap,final_grad_norm_sq,fitted_slope\n";
  std::vector<dl::SvgSeries> chart;

  for (const auto& value : values) {
    dl::Json varied = doc;
    varied[dl::Json::json_pointer(pointer)] = value;
    dl::ExperimentConfig cfg = dl::parse_config(varied, base.empty() ? "." : base);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (!args.seeds.empty()) cfg.seeds = args.seeds;
    bool charted = false;
    for (std::uint64_t seed : cfg.seeds) {
      const dl::RunRecord run = execute(cfg, seed);
      const auto fstar = cfg.problem.constants().F_star;
      std::vector<double> metric(run.f.size());
      for (std::size_t t = 0; t < run.f.size(); ++t) {
        metric[t] = fstar ? run.f[t] - *fstar : run.grad_norm_sq[t];
      }
      double slope = std::numeric_limits<double>::quiet_NaN();
      try {
        slope = dl::fit_rate(std::vector<double>(metric.begin() + 1, metric.end()), 0.5);
      } catch (const dl::Error&) {
      }
      summary << field << ',' << value.dump() << ',' << seed << ','
              << dl::format_double(run.f.back()) << ','
              << dl::format_double(fstar ? run.f.back() - *fstar
                                         : std::numeric_limits<double>::quiet_NaN())
              << ',' << dl::format_double(run.grad_norm_sq.back()) << ','
              << dl::format_double(slope) << '\n';
      if (!charted) {
        dl::SvgSeries series;
        series.label = field + "=" + value.dump();
        for (std::size_t t = 1; t < metric.size(); ++t) {
          series.x.push_back(static_cast<double>(t));
          series.y.push_back(metric[t]);
        }
        chart.push_back(std::move(series));
        charted = true;
      }
    }
  }
  dl::write_loglog_chart(probe.out_dir + "/sweep_chart_" + hash + ".svg",
                         "metric vs t", chart);
  std::cout << "sweep complete: " << total << " runs\n";
  return 0;
}

int cmd_fit_rate(const std::string& csv_path, const std::string& column, double window) {
  const dl::CsvTable table = dl::read_csv(csv_path);
  std::vector<double> series = dl::csv_column(table, column);
  // Drop the t=0 row so series[i] corresponds to t=i+1.
  if (!series.empty()) series.erase(series.begin());
  const double slope = dl::fit_rate(series, window);
  std::cout << "slope=" << dl::format_double(slope) << '\n';
  return 0;
}

int cmd_enumerate(const CommonArgs& args) {
  const dl::ExperimentConfig cfg = load(args);
  if (!cfg.driver) throw dl::ConfigError("driver", "missing");
  const dl::Scheme scheme =
      cfg.certificate.value_or(dl::Scheme::SgdConvexEnumerated);
  const dl::CertificateTrace trace = dl::certify_stochastic_enumerated(
      cfg.problem, *cfg.driver, cfg.w0, cfg.T, scheme);
  std::cout << "scheme=" << dl::scheme_name(scheme) << " paths=" << trace.paths
            << " nodes=" << trace.nodes_checked
            << " min_slack=" << dl::format_double(trace.min_slack)
            << " root_unbiasedness=" << dl::format_double(trace.root_unbiasedness_error)
            << " frozen_constant=" << dl::format_double(trace.frozen_constant) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"first-order optimization runs with convergence certificates"};
  app.require_subcommand(1);

  CommonArgs args;
  int cap = 256;
  std::string csv_path, column = "F_gap";
  double window = 0.5;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", args.out_dir, "output directory override");
    sub->add_option("--seed", args.seeds, "seed override (repeatable)");
  };

  CLI::App* run = app.add_subcommand("run", "execute runs and write CSV traces");
  add_common(run);
  CLI::App* certify = app.add_subcommand("certify", "check the configured certificate");
  add_common(certify);
  CLI::App* sweep = app.add_subcommand("sweep", "grid sweep with summary and chart");
  add_common(sweep);
  sweep->add_option("--cap", cap, "maximum number of runs");
  CLI::App* fit = app.add_subcommand("fit-rate", "log-log slope of a trace column");
  fit->add_option("--csv", csv_path, "trace CSV")->required();
  fit->add_option("--column", column, "column name");
  fit->add_option("--window", window, "tail fraction");
  CLI::App* enumerate = app.add_subcommand("enumerate", "exact expectation-tree check");
  add_common(enumerate);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(args);
    if (certify->parsed()) return cmd_certify(args);
    if (sweep->parsed()) return cmd_sweep(args, cap);
    if (fit->parsed()) return cmd_fit_rate(csv_path, column, window);
    if (enumerate->parsed()) return cmd_enumerate(args);
  } catch (const dl::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const dl::Unsupported& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMismatch;
  } catch (const dl::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const dl::Diverged& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const dl::CertificateFailure& e) {
    std::cerr << "certificate failure: " << e.what()
              << " (slack=" << dl::format_double(e.slack) << ")\n";
    return kExitRuntime;
  } catch (const dl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
