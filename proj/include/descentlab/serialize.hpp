#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "descentlab/certificates.hpp"
#include "descentlab/estimators.hpp"
#include "descentlab/methods.hpp"
#include "descentlab/problems.hpp"
#include "descentlab/prox.hpp"
#include "descentlab/schedules.hpp"

namespace descentlab {

using Json = nlohmann::json;

// A malformed config document.  what() names the offending key.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& key, const std::string& detail = "")
      : Error("config error at key \"" + key + "\"" +
              (detail.empty() ? "" : ": " + detail)),
        key(key) {}
  std::string key;
};

Json load_json_file(const std::string& path);

// Problem fixtures: {"kind": "...", "Q": [[...]], "q": [...], ...},
// matrices row-major.
ProblemInstance problem_from_json(const Json& doc);
StepPolicy schedule_from_json(const Json& doc);
ProxSpec prox_from_json(const Json& doc);
MethodSpec method_from_json(const Json& doc, const ProblemInstance& problem);
SgdDriverSpec driver_from_json(const Json& doc);

// Full experiment description parsed from one JSON document.
struct ExperimentConfig {
  Json raw;
  ProblemInstance problem;
  std::optional<MethodSpec> method;
  std::optional<SgdDriverSpec> driver;
  std::optional<StepPolicy> schedule;
  std::optional<ProxSpec> prox;
  int T = 0;
  std::vector<std::uint64_t> seeds;
  std::optional<Scheme> certificate;
  std::string out_dir = ".";
  Weights w0;
};

// base_dir resolves relative fixture paths; the DESCENTLAB_SEED environment
// variable overrides the seed list.
ExperimentConfig parse_config(const Json& doc, const std::string& base_dir);

// FNV-1a hash of the canonical (sorted-key, compact) dump of the document.
std::uint64_t config_hash(const Json& doc);
std::string hash_hex(std::uint64_t h);

}  // namespace descentlab
