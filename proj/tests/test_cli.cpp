#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "descentlab/csvio.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code;
  std::string output;
};

CliResult run_cli(const std::string& args, const std::string& workdir) {
  const std::string log = workdir + "/cli_output.txt";
  const std::string cmd =
      std::string(DESCENTLAB_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  res.output = ss.str();
  return res;
}

std::string write_config(const std::string& dir, const std::string& name,
                         const std::string& body) {
  const std::string path = dir + "/" + name;
  std::ofstream out(path);
  out << body;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kGdConfig = R"({
  "problem": {"kind": "quadratic", "Q": [[1.0, 0.0], [0.0, 1.0]], "q": [0.0, 0.0]},
  "method": {"kind": "gd"},
  "schedule": {"kind": "constant", "eta": 1.0},
  "T": 10,
  "seeds": [0],
  "w0": [2.0, -2.0],
  "certificate": "gd_convex"
})";

class TempDir {
 public:
  TempDir() {
    dir_ = (fs::temp_directory_path() /
            ("descentlab_cli_" + std::to_string(getpid())))
               .string();
    fs::create_directories(dir_);
  }
  ~TempDir() { fs::remove_all(dir_); }
  const std::string& path() const { return dir_; }

 private:
  std::string dir_;
};

}  // namespace

TEST_CASE("run writes the documented trace") {
  TempDir tmp;
  const std::string cfg = write_config(tmp.path(), "gd.json", kGdConfig);
  const auto res = run_cli("run --config " + cfg + " --out " + tmp.path(), tmp.path());
  REQUIRE(res.exit_code == 0);

  std::string csv_path;
  for (const auto& entry : fs::directory_iterator(tmp.path())) {
    if (entry.path().extension() == ".csv") csv_path = entry.path().string();
  }
  REQUIRE(!csv_path.empty());
  const auto table = descentlab::read_csv(csv_path);
  CHECK(table.header ==
        std::vector<std::string>{"t", "F", "F_gap", "grad_norm_sq", "dist_sq", "eta",
                                 "oracle_grads", "oracle_prox"});
  CHECK(table.rows.size() == 11);

  // Same config and seed: byte-identical trace.
  const std::string body_a = slurp(csv_path);
  fs::remove(csv_path);
  const auto rerun = run_cli("run --config " + cfg + " --out " + tmp.path(), tmp.path());
  REQUIRE(rerun.exit_code == 0);
  CHECK(slurp(csv_path) == body_a);

  // A manifest is written next to the trace.
  bool manifest_found = false;
  for (const auto& entry : fs::directory_iterator(tmp.path())) {
    if (entry.path().string().find("manifest.json") != std::string::npos) {
      manifest_found = true;
      const std::string m = slurp(entry.path().string());
      CHECK(m.find("config_hash") != std::string::npos);
      CHECK(m.find("git_describe") != std::string::npos);
    }
  }
  CHECK(manifest_found);
}

TEST_CASE("missing schedule key is reported by name") {
  TempDir tmp;
  const std::string cfg = write_config(tmp.path(), "bad.json", R"({
    "problem": {"kind": "quadratic", "Q": [[1.0]], "q": [0.0]},
    "method": {"kind": "gd"},
    "T": 5
  })");
  const auto res = run_cli("run --config " + cfg, tmp.path());
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("schedule") != std::string::npos);
}

TEST_CASE("certify passes on the convex fixture and rejects mismatches") {
  TempDir tmp;
  const std::string cfg = write_config(tmp.path(), "gd.json", kGdConfig);
  const auto ok = run_cli("certify --config " + cfg + " --out " + tmp.path(), tmp.path());
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("min_slack") != std::string::npos);

  // Subgradient certificate against a gradient run on a smooth problem is
  // allowed; the accelerated certificate is not.
  std::string mismatched(kGdConfig);
  const auto pos = mismatched.find("gd_convex");
  mismatched.replace(pos, std::string("gd_convex").size(), "nesterov_convex");
  const std::string cfg2 = write_config(tmp.path(), "mismatch.json", mismatched);
  const auto bad = run_cli("certify --config " + cfg2, tmp.path());
  CHECK(bad.exit_code == 3);
}

TEST_CASE("certify flags the oversized step") {
  TempDir tmp;
  const std::string cfg = write_config(tmp.path(), "hot.json", R"({
    "problem": {"kind": "quadratic", "Q": [[1.0, 0.0], [0.0, 1.0]], "q": [0.0, 0.0]},
    "method": {"kind": "gd"},
    "schedule": {"kind": "constant", "eta": 3.0},
    "T": 10,
    "w0": [1.0, 1.0],
    "certificate": "gd_nonconvex"
  })");
  const auto res = run_cli("certify --config " + cfg + " --out " + tmp.path(), tmp.path());
  CHECK(res.exit_code == 1);
  CHECK(res.output.find("certificate") != std::string::npos);
}

TEST_CASE("sweep produces summary rows and a chart") {
  TempDir tmp;
  const std::string cfg = write_config(tmp.path(), "sweep.json", R"({
    "problem": {"kind": "composite_l1", "lambda": 1.0,
                "inner": {"kind": "quadratic", "Q": [[0.0, 0.0], [0.0, 0.0]], "q": [0.0, 0.0]}},
    "method": {"kind": "subgradient"},
    "schedule": {"kind": "diminishing", "C": 1.0, "beta": 1.0, "nu": 0.5},
    "T": 50,
    "seeds": [0],
    "w0": [2.0, 2.0],
    "grid": {"field": "schedule.C", "values": [0.1, 1.0, 10.0]}
  })");
  const auto res = run_cli("sweep --config " + cfg + " --out " + tmp.path(), tmp.path());
  REQUIRE(res.exit_code == 0);

  std::string summary, chart;
  for (const auto& entry : fs::directory_iterator(tmp.path())) {
    const std::string p = entry.path().string();
    if (p.find("sweep_summary") != std::string::npos) summary = p;
    if (p.find("sweep_chart") != std::string::npos) chart = p;
  }
  REQUIRE(!summary.empty());
  REQUIRE(!chart.empty());
  // Header plus one row per (grid point, seed).
  const std::string body = slurp(summary);
  std::size_t lines = 0;
  for (char c : body) lines += c == '\n';
  CHECK(lines == 4);
  CHECK(body.find("schedule.C") != std::string::npos);
  CHECK(slurp(chart).find("<svg") != std::string::npos);

  // The run cap is enforced.
  const auto capped =
      run_cli("sweep --config " + cfg + " --cap 2 --out " + tmp.path(), tmp.path());
  CHECK(capped.exit_code == 4);

  // An empty grid is a config error.
  std::string empty_grid(slurp(cfg));
  const auto pos = empty_grid.find("[0.1, 1.0, 10.0]");
  empty_grid.replace(pos, std::string("[0.1, 1.0, 10.0]").size(), "[]");
  const std::string cfg2 = write_config(tmp.path(), "empty.json", empty_grid);
  const auto empty = run_cli("sweep --config " + cfg2, tmp.path());
  CHECK(empty.exit_code == 2);
}

TEST_CASE("fit-rate reads a trace column") {
  TempDir tmp;
  const std::string cfg = write_config(tmp.path(), "gd.json", R"({
    "problem": {"kind": "quadratic", "Q": [[1.0, 0.0], [0.0, 2.0]], "q": [0.0, 0.0]},
    "method": {"kind": "gd"},
    "schedule": {"kind": "constant", "eta": 0.4},
    "T": 100,
    "w0": [2.0, -1.0]
  })");
  const auto res = run_cli("run --config " + cfg + " --out " + tmp.path(), tmp.path());
  REQUIRE(res.exit_code == 0);
  std::string csv_path;
  for (const auto& entry : fs::directory_iterator(tmp.path())) {
    if (entry.path().extension() == ".csv") csv_path = entry.path().string();
  }
  const auto fit =
      run_cli("fit-rate --csv " + csv_path + " --column F_gap --window 0.5", tmp.path());
  CHECK(fit.exit_code == 0);
  CHECK(fit.output.find("slope=") != std::string::npos);
}

TEST_CASE("environment seed override wins") {
  TempDir tmp;
  const std::string cfg = write_config(tmp.path(), "sgd.json", R"({
    "problem": {"kind": "finite_sum_quadratic", "components": [
      {"Q": [[1.0]], "q": [0.0]},
      {"Q": [[1.0]], "q": [-2.0]},
      {"Q": [[1.0]], "q": [-4.0]}
    ]},
    "driver": {"stages": 0, "inner": 20, "estimator": {"kind": "minibatch", "batch": 1}},
    "schedule": {"kind": "constant", "eta": 0.1},
    "T": 20,
    "seeds": [1, 2, 3],
    "w0": [0.0]
  })");
  setenv("DESCENTLAB_SEED", "9", 1);
  const auto res = run_cli("run --config " + cfg + " --out " + tmp.path(), tmp.path());
  unsetenv("DESCENTLAB_SEED");
  REQUIRE(res.exit_code == 0);
  int csvs = 0;
  bool seed9 = false;
  for (const auto& entry : fs::directory_iterator(tmp.path())) {
    const std::string p = entry.path().string();
    if (entry.path().extension() == ".csv") ++csvs;
    if (p.find("_9.csv") != std::string::npos) seed9 = true;
  }
  CHECK(csvs == 1);  // one seed instead of three
  CHECK(seed9);
}

TEST_CASE("divergence exits nonzero naming the step") {
  TempDir tmp;
  const std::string cfg = write_config(tmp.path(), "hot.json", R"({
    "problem": {"kind": "quadratic", "Q": [[100000000.0]], "q": [0.0]},
    "method": {"kind": "gd"},
    "schedule": {"kind": "constant", "eta": 100000000.0},
    "T": 500,
    "w0": [1.0]
  })");
  const auto res = run_cli("run --config " + cfg + " --out " + tmp.path(), tmp.path());
  CHECK(res.exit_code == 1);
  CHECK(res.output.find("diverged(") != std::string::npos);
}

TEST_CASE("subgradient certificate end to end") {
  TempDir tmp;
  const std::string cfg = write_config(tmp.path(), "subgrad.json", R"({
    "problem": {"kind": "composite_l1", "lambda": 1.0,
                "inner": {"kind": "quadratic", "Q": [[0.0, 0.0], [0.0, 0.0]], "q": [0.0, 0.0]}},
    "method": {"kind": "subgradient"},
    "schedule": {"kind": "diminishing", "C": 1.0, "beta": 1.0, "nu": 0.5},
    "T": 200,
    "w0": [2.0, -2.0],
    "certificate": "subgradient_convex"
  })");
  const auto res = run_cli("certify --config " + cfg + " --out " + tmp.path(), tmp.path());
  CHECK(res.exit_code == 0);
  // The certificate trace carries the documented columns.
  for (const auto& entry : fs::directory_iterator(tmp.path())) {
    const std::string p = entry.path().string();
    if (p.find("cert_") != std::string::npos) {
      CHECK(slurp(p).rfind("t,D,Delta,E,omega,slack,bound\n", 0) == 0);
    }
  }
}

TEST_CASE("accelerated and dual-averaging methods route without a schedule") {
  TempDir tmp;
  const std::string nesterov = write_config(tmp.path(), "nesterov.json", R"({
    "problem": {"kind": "quadratic", "Q": [[1.0, 0.0], [0.0, 4.0]], "q": [0.0, 0.0]},
    "method": {"kind": "nesterov", "theta_rule": "half_shift"},
    "T": 50,
    "w0": [2.0, -2.0],
    "certificate": "nesterov_convex"
  })");
  CHECK(run_cli("certify --config " + nesterov + " --out " + tmp.path(), tmp.path())
            .exit_code == 0);

  const std::string da = write_config(tmp.path(), "da.json", R"({
    "problem": {"kind": "quadratic", "Q": [[1.0, 0.0], [0.0, 2.0]], "q": [0.0, 0.0]},
    "method": {"kind": "dual_averaging", "eta": 0.2, "gamma": 1.0},
    "T": 30,
    "w0": [1.0, 1.0]
  })");
  const auto res = run_cli("run --config " + da + " --out " + tmp.path(), tmp.path());
  CHECK(res.exit_code == 0);
}

TEST_CASE("hybrid ensemble certificate end to end") {
  TempDir tmp;
  const std::string cfg = write_config(tmp.path(), "hybrid.json", R"({
    "problem": {"kind": "finite_sum_quadratic", "components": [
      {"Q": [[1.0]], "q": [0.0]},
      {"Q": [[1.0]], "q": [-2.0]},
      {"Q": [[1.0]], "q": [-4.0]}
    ]},
    "driver": {"stages": 0, "inner": 64,
               "estimator": {"kind": "hybrid", "batch": 1, "beta": 0.1}},
    "schedule": {"kind": "constant", "eta": 0.25},
    "T": 64,
    "seeds": [0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19],
    "w0": [0.0],
    "certificate": "hybrid_vr"
  })");
  const auto res = run_cli("certify --config " + cfg + " --out " + tmp.path(), tmp.path());
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("ensemble_mean=") != std::string::npos);

  // Fewer than 20 seeds is a config error for this scheme.
  const auto few = run_cli("certify --config " + cfg + " --seed 1 --seed 2", tmp.path());
  CHECK(few.exit_code == 2);
}

TEST_CASE("nonpositive horizon is a config error") {
  TempDir tmp;
  std::string body(kGdConfig);
  const auto pos = body.find("\"T\": 10");
  body.replace(pos, std::string("\"T\": 10").size(), "\"T\": 0");
  const std::string cfg = write_config(tmp.path(), "empty.json", body);
  const auto res = run_cli("certify --config " + cfg, tmp.path());
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("T") != std::string::npos);
}

TEST_CASE("enumerate certifies the anchored fixture end to end") {
  TempDir tmp;
  const std::string cfg = write_config(tmp.path(), "enum.json", R"({
    "problem": {"kind": "finite_sum_quadratic", "components": [
      {"Q": [[1.0]], "q": [0.0]},
      {"Q": [[1.0]], "q": [-2.0]},
      {"Q": [[1.0]], "q": [-4.0]}
    ]},
    "driver": {"stages": 0, "inner": 4, "estimator": {"kind": "minibatch", "batch": 1}},
    "schedule": {"kind": "constant", "eta": 0.1},
    "T": 4,
    "seeds": [0],
    "w0": [0.0],
    "certificate": "sgd_convex_enumerated"
  })");
  const auto res = run_cli("enumerate --config " + cfg, tmp.path());
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("paths=81") != std::string::npos);
}
