#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "descentlab/serialize.hpp"

using namespace descentlab;

TEST_CASE("full deterministic config parses") {
  const Json doc = Json::parse(R"({
    "problem": {"kind": "quadratic", "Q": [[2.0, 0.0], [0.0, 1.0]], "q": [1.0, -1.0]},
    "method": {"kind": "heavy_ball", "beta": 0.5},
    "schedule": {"kind": "staircase", "C": 1.0, "beta": 2.0, "nu": 0.5, "s": 10},
    "prox": {"kind": "l2_ball", "radius": 3.0},
    "T": 25,
    "seeds": [4, 5],
    "w0": 0.5,
    "certificate": "gd_nonconvex",
    "out": "elsewhere"
  })");
  const ExperimentConfig cfg = parse_config(doc, ".");
  CHECK(cfg.problem.dim() == 2);
  CHECK(cfg.method->kind == MethodSpec::Kind::HeavyBall);
  CHECK(cfg.method->momentum(0) == 0.5);
  CHECK(cfg.schedule->kind() == StepPolicy::Kind::Staircase);
  CHECK(cfg.prox->kind == ProxKind::L2Ball);
  CHECK(cfg.T == 25);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(*cfg.certificate == Scheme::GdNonconvex);
  CHECK(cfg.out_dir == "elsewhere");
  // Scalar w0 broadcasts over the problem dimension.
  CHECK(cfg.w0.size() == 2);
  CHECK(cfg.w0[0] == 0.5);
  CHECK(cfg.w0[1] == 0.5);
}

TEST_CASE("driver config parses with estimator settings") {
  const Json doc = Json::parse(R"({
    "problem": {"kind": "finite_sum_quadratic", "components": [
      {"Q": [[1.0]], "q": [0.0]}, {"Q": [[1.0]], "q": [-1.0]}
    ]},
    "driver": {"stages": 2, "inner": [5, 7], "snapshot": "uniform_random",
               "loopless_rho": 0.5,
               "estimator": {"kind": "hybrid", "batch": 2, "beta": 0.3}},
    "schedule": {"kind": "constant", "eta": 0.1},
    "T": 12,
    "seeds": [1]
  })");
  const ExperimentConfig cfg = parse_config(doc, ".");
  REQUIRE(cfg.driver.has_value());
  CHECK(cfg.driver->stages == 2);
  CHECK(cfg.driver->inner_length(1) == 7);
  CHECK(cfg.driver->snapshot_rule == SgdDriverSpec::SnapshotRule::UniformRandom);
  CHECK(*cfg.driver->loopless_rho == 0.5);
  CHECK(cfg.driver->estimator == EstimatorState::Kind::Hybrid);
  CHECK(cfg.driver->batch == 2);
  CHECK(cfg.driver->hybrid_beta(3) == 0.3);
  CHECK(cfg.driver->total_iterations() == 12);
}

TEST_CASE("problem fixtures load from a referenced file") {
  namespace fs = std::filesystem;
  const std::string dir =
      (fs::temp_directory_path() / "descentlab_serialize_test").string();
  fs::create_directories(dir);
  {
    std::ofstream out(dir + "/fixture.json");
    out << R"({"kind": "quadratic", "Q": [[4.0]], "q": [0.0]})";
  }
  const Json doc = Json::parse(R"({
    "problem": "fixture.json",
    "method": {"kind": "gd"},
    "schedule": {"kind": "constant", "eta": 0.25},
    "T": 3
  })");
  const ExperimentConfig cfg = parse_config(doc, dir);
  CHECK(cfg.problem.constants().L == doctest::Approx(4.0));
  fs::remove_all(dir);
}

TEST_CASE("missing and malformed keys name themselves") {
  const auto parse = [](const char* text) {
    return parse_config(Json::parse(text), ".");
  };
  CHECK_THROWS_WITH_AS(parse(R"({"method": {"kind": "gd"}, "T": 5})"),
                       doctest::Contains("problem"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse(R"({"problem": {"kind": "quadratic", "Q": [[1.0]], "q": [0.0]},
                "method": {"kind": "gd"}, "T": 5})"),
      doctest::Contains("schedule"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse(R"({"problem": {"kind": "quadratic", "Q": [[1.0]], "q": [0.0]},
                "method": {"kind": "gd"},
                "schedule": {"kind": "constant", "eta": 0.1}})"),
      doctest::Contains("T"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse(R"({"problem": {"kind": "quadratic", "Q": [[1.0]], "q": "oops"},
                "method": {"kind": "gd"},
                "schedule": {"kind": "constant", "eta": 0.1}, "T": 5})"),
      doctest::Contains("q"), ConfigError);
}

TEST_CASE("environment variable overrides the seed list") {
  const Json doc = Json::parse(R"({
    "problem": {"kind": "quadratic", "Q": [[1.0]], "q": [0.0]},
    "method": {"kind": "gd"},
    "schedule": {"kind": "constant", "eta": 0.1},
    "T": 5,
    "seeds": [1, 2, 3]
  })");
  setenv("DESCENTLAB_SEED", "77", 1);
  const ExperimentConfig cfg = parse_config(doc, ".");
  unsetenv("DESCENTLAB_SEED");
  CHECK(cfg.seeds == std::vector<std::uint64_t>{77});
}

TEST_CASE("config hash is canonical over key order") {
  const Json a = Json::parse(R"({"b": 1, "a": {"y": 2, "x": [1, 2]}})");
  const Json b = Json::parse(R"({"a": {"x": [1, 2], "y": 2}, "b": 1})");
  CHECK(config_hash(a) == config_hash(b));
  const Json c = Json::parse(R"({"a": {"x": [1, 2], "y": 2}, "b": 2})");
  CHECK(config_hash(a) != config_hash(c));
  CHECK(hash_hex(config_hash(a)).size() == 16);
}

TEST_CASE("schedules accept only the documented keys") {
  CHECK_THROWS_AS(schedule_from_json(Json::parse(R"({"kind": "warmup"})")), ConfigError);
  CHECK_THROWS_AS(schedule_from_json(Json::parse(R"({"kind": "diminishing", "C": 1.0})")),
                  ConfigError);
  const StepPolicy bb = schedule_from_json(Json::parse(R"({"kind": "bb", "eta0": 0.5})"));
  CHECK(bb.kind() == StepPolicy::Kind::BarzilaiBorwein);
}
