#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jetleg/envtask.hpp"

namespace jetleg::config {

using json = nlohmann::ordered_json;

struct AmpConfig {
  std::vector<int> hidden{128, 128};
  double w_gp = 10.0;
  double lr = 1e-4;
  int buffer_capacity = 100000;
  int batch = 256;
  int updates_per_iter = 2;
};

struct PpoConfig {
  double gamma = 0.99;
  double lam = 0.95;
  double lr = 5e-5;
  double clip = 0.2;
  double entropy_coef = 0.0;
  double value_coef = 5.0;
  double kl_threshold = 0.008;
  int actors = 64;
  int horizon = 256;
  int minibatch = 1024;
  int epochs = 4;
  int64_t max_env_steps = 2000000;
  std::vector<int> policy_hidden{256, 128};
  std::vector<int> value_hidden{256, 128};
  double log_std_init = -1.0;
  double log_std_floor = -4.0;
  int workers = 1;
};

struct RunConfig {
  uint64_t seed = 7;
  std::string out_dir = "runs/default";
  envtask::EnvConfig env;
  PpoConfig ppo;
  AmpConfig amp;
  std::string walk_priors;  // dataset paths; empty disables that prior
  std::string fly_priors;
  std::string jet_params_file;  // lag mode; empty uses the calibrated default
  int checkpoint_every = 50;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

json to_json(const dynamics::RobotModel& m);
void from_json_into(const json& j, dynamics::RobotModel& m);
json to_json(const terrain::TerrainSpec& t);
void from_json_into(const json& j, terrain::TerrainSpec& t);
json to_json(const jetdyn::JetParams& p);
void from_json_into(const json& j, jetdyn::JetParams& p);
json to_json(const RunConfig& c);
RunConfig run_config_from_json(const json& j);

/// Applies one `dotted.path=value` override; the value is parsed as JSON
/// when possible and treated as a string otherwise.
void apply_override(json& root, const std::string& assignment);

RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides = {});
json load_json_file(const std::string& path);
void write_json_file(const json& j, const std::string& path);

}  // namespace jetleg::config
