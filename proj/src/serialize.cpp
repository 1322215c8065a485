#include "descentlab/serialize.hpp"

#include <cstdlib>
#include <fstream>

namespace descentlab {

namespace {

const Json& need(const Json& doc, const std::string& key) {
  if (!doc.contains(key)) throw ConfigError(key, "missing");
  return doc.at(key);
}

double need_number(const Json& doc, const std::string& key) {
  const Json& v = need(doc, key);
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  return v.get<double>();
}

int need_int(const Json& doc, const std::string& key) {
  const Json& v = need(doc, key);
  if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
  return v.get<int>();
}

std::string need_string(const Json& doc, const std::string& key) {
  const Json& v = need(doc, key);
  if (!v.is_string()) throw ConfigError(key, "expected a string");
  return v.get<std::string>();
}

Weights vector_from_json(const Json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError(key, "expected an array");
  Weights w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(key, "expected numeric entries");
    w[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return w;
}

Matrix matrix_from_json(const Json& m, const std::string& key) {
  if (!m.is_array() || m.empty()) throw ConfigError(key, "expected a row-major matrix");
  const std::size_t rows = m.size();
  if (!m[0].is_array()) throw ConfigError(key, "expected a row-major matrix");
  const std::size_t cols = m[0].size();
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!m[i].is_array() || m[i].size() != cols) {
      throw ConfigError(key, "ragged matrix rows");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (!m[i][j].is_number()) throw ConfigError(key, "expected numeric entries");
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          m[i][j].get<double>();
    }
  }
  return out;
}

}  // namespace

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open file");
  Json doc;
  try {
    in >> doc;
  } catch (const Json::parse_error& e) {
    throw ConfigError(path, e.what());
  }
  return doc;
}

ProblemInstance problem_from_json(const Json& doc) {
  const std::string kind = need_string(doc, "kind");
  if (kind == "quadratic") {
    return ProblemInstance::quadratic(matrix_from_json(need(doc, "Q"), "Q"),
                                      vector_from_json(need(doc, "q"), "q"));
  }
  if (kind == "least_squares") {
    return ProblemInstance::least_squares(matrix_from_json(need(doc, "X"), "X"),
                                          vector_from_json(need(doc, "y"), "y"));
  }
  if (kind == "logistic") {
    return ProblemInstance::logistic(matrix_from_json(need(doc, "X"), "X"),
                                     vector_from_json(need(doc, "y"), "y"));
  }
  if (kind == "composite_l1") {
    std::optional<double> radius;
    if (doc.contains("region_radius")) radius = need_number(doc, "region_radius");
    return ProblemInstance::composite_l1(problem_from_json(need(doc, "inner")),
                                         need_number(doc, "lambda"), radius);
  }
  if (kind == "finite_sum_quadratic") {
    const Json& comps = need(doc, "components");
    if (!comps.is_array() || comps.empty()) {
      throw ConfigError("components", "expected a nonempty array");
    }
    std::vector<QuadraticComponent> out;
    out.reserve(comps.size());
    for (const auto& c : comps) {
      out.push_back({matrix_from_json(need(c, "Q"), "components.Q"),
                     vector_from_json(need(c, "q"), "components.q")});
    }
    return ProblemInstance::finite_sum_quadratic(std::move(out));
  }
  throw ConfigError("kind", "unknown problem kind \"" + kind + "\"");
}

StepPolicy schedule_from_json(const Json& doc) {
  const std::string kind = need_string(doc, "kind");
  if (kind == "constant") return StepPolicy::constant(need_number(doc, "eta"));
  if (kind == "diminishing") {
    return StepPolicy::diminishing(need_number(doc, "C"), need_number(doc, "beta"),
                                   need_number(doc, "nu"));
  }
  if (kind == "staircase") {
    return StepPolicy::staircase(need_number(doc, "C"), need_number(doc, "beta"),
                                 need_number(doc, "nu"), need_int(doc, "s"));
  }
  if (kind == "adaptive") {
    const double eps = doc.contains("eps") ? need_number(doc, "eps") : 1e-8;
    return StepPolicy::adaptive_accumulator(need_number(doc, "C"), eps);
  }
  if (kind == "bb") return StepPolicy::barzilai_borwein(need_number(doc, "eta0"));
  if (kind == "exact_quadratic") return StepPolicy::exact_quadratic();
  throw ConfigError("schedule.kind", "unknown schedule \"" + kind + "\"");
}

ProxSpec prox_from_json(const Json& doc) {
  const std::string kind = need_string(doc, "kind");
  const double gamma = doc.contains("gamma") ? need_number(doc, "gamma") : 1.0;
  if (kind == "zero") return ProxSpec::zero(gamma);
  if (kind == "l1") return ProxSpec::l1(need_number(doc, "lambda"), gamma);
  if (kind == "sq_l2") return ProxSpec::sq_l2(need_number(doc, "lambda"), gamma);
  if (kind == "box") {
    return ProxSpec::box(vector_from_json(need(doc, "lo"), "prox.lo"),
                         vector_from_json(need(doc, "hi"), "prox.hi"), gamma);
  }
  if (kind == "l2_ball") return ProxSpec::l2_ball(need_number(doc, "radius"), gamma);
  if (kind == "group_l2") {
    const Json& blocks = need(doc, "blocks");
    if (!blocks.is_array()) throw ConfigError("prox.blocks", "expected an array");
    std::vector<std::vector<int>> out;
    for (const auto& blk : blocks) out.push_back(blk.get<std::vector<int>>());
    return ProxSpec::group_l2(std::move(out), need_number(doc, "lambda"), gamma);
  }
  throw ConfigError("prox.kind", "unknown prox \"" + kind + "\"");
}

MethodSpec method_from_json(const Json& doc, const ProblemInstance& problem) {
  const std::string kind = need_string(doc, "kind");
  RestartRule restart = RestartRule::None;
  if (doc.contains("restart")) {
    const std::string r = need_string(doc, "restart");
    if (r == "function_value") restart = RestartRule::FunctionValue;
    else if (r != "none") throw ConfigError("method.restart", "unknown rule \"" + r + "\"");
  }
  if (kind == "gd") return MethodSpec::gd();
  if (kind == "subgradient") return MethodSpec::subgradient();
  if (kind == "prox_grad") {
    if (doc.contains("prox")) return MethodSpec::prox_grad(prox_from_json(doc.at("prox")));
    return MethodSpec::prox_grad(ProxSpec::l1(problem.l1_weight()));
  }
  if (kind == "heavy_ball") return MethodSpec::heavy_ball(need_number(doc, "beta"));
  if (kind == "nesterov") {
    ThetaSequence::Rule rule = ThetaSequence::Rule::HalfShift;
    if (doc.contains("theta_rule")) {
      const std::string r = need_string(doc, "theta_rule");
      if (r == "recurrence") rule = ThetaSequence::Rule::Recurrence;
      else if (r != "half_shift") throw ConfigError("method.theta_rule", "unknown rule");
    }
    return MethodSpec::nesterov(rule, restart);
  }
  if (kind == "dual_averaging") {
    const double gamma = doc.contains("gamma") ? need_number(doc, "gamma") : 1.0;
    return MethodSpec::dual_averaging(need_number(doc, "eta"),
                                      [gamma](int) { return gamma; });
  }
  if (kind == "noisy_gd") {
    MethodSpec spec = MethodSpec::noisy_gd(need_number(doc, "sigma"), 0);
    if (doc.contains("noise_seed")) {
      spec.noise_seed = static_cast<std::uint64_t>(need_int(doc, "noise_seed"));
    } else {
      spec.noise_seed.reset();  // each run seeds the noise from its own seed
    }
    return spec;
  }
  throw ConfigError("method.kind", "unknown method \"" + kind + "\"");
}

SgdDriverSpec driver_from_json(const Json& doc) {
  SgdDriverSpec spec;
  spec.stages = doc.contains("stages") ? need_int(doc, "stages") : 0;
  const Json& inner = need(doc, "inner");
  if (inner.is_number_integer()) {
    spec.inner_lengths = {inner.get<int>()};
  } else if (inner.is_array()) {
    spec.inner_lengths = inner.get<std::vector<int>>();
  } else {
    throw ConfigError("driver.inner", "expected an integer or array");
  }
  if (doc.contains("snapshot")) {
    const std::string s = need_string(doc, "snapshot");
    if (s == "uniform_random") {
      spec.snapshot_rule = SgdDriverSpec::SnapshotRule::UniformRandom;
    } else if (s != "last") {
      throw ConfigError("driver.snapshot", "unknown rule \"" + s + "\"");
    }
  }
  if (doc.contains("loopless_rho")) spec.loopless_rho = need_number(doc, "loopless_rho");
  const Json& est = need(doc, "estimator");
  const std::string ek = need_string(est, "kind");
  if (ek == "minibatch") spec.estimator = EstimatorState::Kind::MiniBatch;
  else if (ek == "svrg") spec.estimator = EstimatorState::Kind::Svrg;
  else if (ek == "sarah") spec.estimator = EstimatorState::Kind::Sarah;
  else if (ek == "hybrid") spec.estimator = EstimatorState::Kind::Hybrid;
  else throw ConfigError("driver.estimator.kind", "unknown estimator \"" + ek + "\"");
  spec.batch = est.contains("batch") ? need_int(est, "batch") : 1;
  if (spec.estimator == EstimatorState::Kind::Hybrid) {
    const double beta = need_number(est, "beta");
    spec.hybrid_beta = [beta](int) { return beta; };
  }
  return spec;
}

ExperimentConfig parse_config(const Json& doc, const std::string& base_dir) {
  ExperimentConfig cfg;
  cfg.raw = doc;

  const Json& prob = need(doc, "problem");
  if (prob.is_string()) {
    std::string path = prob.get<std::string>();
    if (!path.empty() && path.front() != '/') path = base_dir + "/" + path;
    cfg.problem = problem_from_json(load_json_file(path));
  } else {
    cfg.problem = problem_from_json(prob);
  }

  const bool has_driver = doc.contains("driver");
  if (has_driver) {
    cfg.driver = driver_from_json(doc.at("driver"));
  } else {
    cfg.method = method_from_json(need(doc, "method"), cfg.problem);
  }

  const bool needs_schedule =
      has_driver || (cfg.method && cfg.method->kind != MethodSpec::Kind::Nesterov &&
                     cfg.method->kind != MethodSpec::Kind::DualAveraging);
  if (needs_schedule) {
    cfg.schedule = schedule_from_json(need(doc, "schedule"));
    if (cfg.driver) cfg.driver->step = *cfg.schedule;
  } else if (doc.contains("schedule")) {
    cfg.schedule = schedule_from_json(doc.at("schedule"));
  }

  if (doc.contains("prox")) cfg.prox = prox_from_json(doc.at("prox"));

  cfg.T = need_int(doc, "T");
  if (cfg.T < 1) throw ConfigError("T", "must be >= 1");
  if (cfg.driver && cfg.driver->inner_lengths.empty()) {
    cfg.driver->inner_lengths = {cfg.T};
  }

  if (const char* env = std::getenv("DESCENTLAB_SEED")) {
    cfg.seeds = {static_cast<std::uint64_t>(std::strtoull(env, nullptr, 10))};
  } else if (doc.contains("seeds")) {
    const Json& seeds = doc.at("seeds");
    if (!seeds.is_array() || seeds.empty()) {
      throw ConfigError("seeds", "expected a nonempty array");
    }
    for (const auto& s : seeds) cfg.seeds.push_back(s.get<std::uint64_t>());
  } else {
    cfg.seeds = {0};
  }
  if (has_driver && cfg.seeds.empty()) {
    throw ConfigError("seeds", "stochastic runs need at least one seed");
  }

  if (doc.contains("certificate")) {
    cfg.certificate = scheme_from_name(need_string(doc, "certificate"));
  }
  if (doc.contains("out")) cfg.out_dir = need_string(doc, "out");

  if (doc.contains("w0")) {
    const Json& w0 = doc.at("w0");
    if (w0.is_number()) {
      cfg.w0 = Weights::Constant(cfg.problem.dim(), w0.get<double>());
    } else {
      cfg.w0 = vector_from_json(w0, "w0");
      if (cfg.w0.size() != cfg.problem.dim()) {
        throw ConfigError("w0", "dimension does not match the problem");
      }
    }
  } else {
    cfg.w0 = Weights::Zero(cfg.problem.dim());
  }
  return cfg;
}

std::uint64_t config_hash(const Json& doc) {
  // nlohmann::json keeps object keys sorted, so dump() is canonical.
  const std::string s = doc.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace descentlab
