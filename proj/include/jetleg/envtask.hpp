#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "jetleg/dynamics.hpp"
#include "jetleg/jetdyn.hpp"
#include "jetleg/priors.hpp"
#include "jetleg/terrain.hpp"

namespace jetleg::envtask {

struct RewardWeights {
  double w_c = 0.1;
  double w_v = 0.7;
  double w_f = 0.2;
  double w_t = 0.11;
  double c1 = 0.5;
  double c2 = 0.5;
  double w_goal = 0.5;   // task mixing weight
  double w_style = 0.5;  // style mixing weight
  bool facing_positive = false;  // min(0, .) when false, max(0, .) when true
};

enum class Schedule { GroundOnly, AirOnly, Alternating, TerrainDriven };
Schedule schedule_from_string(const std::string& s);
std::string schedule_to_string(Schedule s);

struct TaskConfig {
  Schedule schedule = Schedule::GroundOnly;
  double v_d = 0.8;
  double hit_radius = 0.3;
  double spawn_min = 0.7;
  double spawn_max = 2.0;
  double air_alt_min = 2.0;
  double air_alt_max = 4.0;
  double stance_height = 0.6;
};

enum class JetMode { Ideal, Lag };
JetMode jet_mode_from_string(const std::string& s);
std::string jet_mode_to_string(JetMode m);

struct EnvConfig {
  dynamics::RobotModel robot;
  terrain::TerrainSpec terrain;
  TaskConfig task;
  RewardWeights rewards;
  int heightmap_cells = 9;
  double heightmap_cell = 0.3;
  int max_steps = 600;
  double p_rsi = 0.5;
  int substeps = 4;
  double control_hz = 60.0;
  double min_clearance = 0.4;
  JetMode jet_mode = JetMode::Ideal;
  double jet_rate_limit = 1000.0;  // N/s per jet, ideal mode
  jetdyn::JetParams jet_params;    // lag mode

  double control_dt() const { return 1.0 / control_hz; }
  int observation_dim() const { return priors::kFeatureDim + heightmap_cells + 2; }
};

enum class Termination { None, Fell, Timeout };

struct RewardTerms {
  double r_c = 0.0;
  double r_v = 0.0;
  double r_f = 0.0;
  double r_t = 0.0;
  double task_total = 0.0;
  double style = 0.0;
  double total = 0.0;
};

struct StepResult {
  Eigen::VectorXd observation;  // post-step (terminal observation when done)
  RewardTerms rewards;
  bool done = false;
  Termination reason = Termination::None;
  int waypoints_hit = 0;       // cumulative within the episode
  double thrust_fraction = 0;  // mean_i T_i / T_max at this step
  priors::FeatureFrame features;       // chi_{t+1}
  priors::FeatureFrame prev_features;  // chi_t
  Eigen::VectorXd reset_observation;   // filled by VecEnv after auto-reset
};

using Action = Eigen::Matrix<double, 6, 1>;  // [theta_d(4), u(2)]
using StyleFn = std::function<double(const priors::FeatureFrame&,
                                     const priors::FeatureFrame&)>;

/// Affine map between the policy's normalized action space and the physical
/// action [theta_d | u]: physical = clamp(center + scale * raw, low, high).
struct ActionSpec {
  Action center, scale, low, high;
  Action to_physical(const Action& raw) const {
    return (center.array() + scale.array() * raw.array())
        .min(high.array())
        .max(low.array());
  }
};

// spec'd free operations, also used internally by Environment

Eigen::VectorXd assemble_observation(const dynamics::RobotModel& model,
                                     const dynamics::RobotState& state,
                                     const terrain::HeightField& field,
                                     const Eigen::Vector2d& target, int cells,
                                     double cell_size);

/// Fills r_c, r_v, r_f, r_t (not the aggregate fields). `prev_distance` is
/// the base-target distance at the previous control tick; the approach
/// speed (prev - current)/dt is positive when closing in.
RewardTerms task_rewards(const dynamics::RobotState& state, double prev_distance,
                         const Eigen::Vector2d& target, const RewardWeights& weights,
                         double v_d, double dt);

double total_task_reward(const RewardTerms& terms, const RewardWeights& weights);

class Environment {
 public:
  explicit Environment(EnvConfig config);

  Eigen::VectorXd reset(uint64_t seed);
  StepResult step(const Action& physical_action);

  void set_style_fn(StyleFn fn) { style_fn_ = std::move(fn); }
  void set_rsi_dataset(std::shared_ptr<const priors::MotionDataset> ds) {
    rsi_ = std::move(ds);
  }

  ActionSpec action_spec() const;
  int observation_dim() const { return config_.observation_dim(); }
  Eigen::VectorXd observation() const;

  bool done() const { return done_; }
  int steps() const { return step_count_; }
  int waypoints_hit() const { return waypoints_hit_; }
  const dynamics::RobotState& state() const { return state_; }
  dynamics::RobotState& mutable_state() { return state_; }
  const terrain::HeightField& field() const { return field_; }
  const Eigen::Vector2d& target() const { return target_; }
  const EnvConfig& config() const { return config_; }
  priors::FeatureFrame features() const {
    return priors::feature_frame(config_.robot, state_);
  }

 private:
  void spawn_waypoint(const Eigen::Vector2d& from);
  bool next_kind_is_air(double from_x, double dist);

  EnvConfig config_;
  terrain::HeightField field_;
  dynamics::RobotState state_;
  Eigen::Vector4d stance_;
  Eigen::Vector2d target_ = Eigen::Vector2d::Zero();
  bool target_is_air_ = false;
  bool alternate_air_next_ = false;
  double prev_distance_ = 0.0;
  int step_count_ = 0;
  int waypoints_hit_ = 0;
  bool done_ = true;
  std::mt19937_64 rng_;
  StyleFn style_fn_;
  std::shared_ptr<const priors::MotionDataset> rsi_;
};

/// Fixed-size collection of isolated environments with auto-reset. Results
/// are independent of the worker count (per-env state and RNG streams).
class VecEnv {
 public:
  VecEnv(const EnvConfig& config, int count, uint64_t master_seed,
         int workers = 1);

  Eigen::MatrixXd reset_all();  // rows = envs
  std::vector<StepResult> step(const Eigen::MatrixXd& physical_actions);

  int size() const { return static_cast<int>(envs_.size()); }
  Environment& env(int i) { return *envs_[i]; }
  const Environment& env(int i) const { return *envs_[i]; }
  void set_style_fn(const StyleFn& fn);
  void set_rsi_dataset(std::shared_ptr<const priors::MotionDataset> ds);

 private:
  std::vector<std::unique_ptr<Environment>> envs_;
  std::vector<std::mt19937_64> seed_streams_;
  int workers_;
};

}  // namespace jetleg::envtask
