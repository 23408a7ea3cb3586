#include "jetleg/envtask.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "jetleg/rngutil.hpp"

namespace jetleg::envtask {

Schedule schedule_from_string(const std::string& s) {
  if (s == "ground_only") return Schedule::GroundOnly;
  if (s == "air_only") return Schedule::AirOnly;
  if (s == "alternating") return Schedule::Alternating;
  if (s == "terrain_driven") return Schedule::TerrainDriven;
  throw InvalidSpec("unknown task schedule: " + s);
}

std::string schedule_to_string(Schedule s) {
  switch (s) {
    case Schedule::GroundOnly: return "ground_only";
    case Schedule::AirOnly: return "air_only";
    case Schedule::Alternating: return "alternating";
    case Schedule::TerrainDriven: return "terrain_driven";
  }
  return "ground_only";
}

JetMode jet_mode_from_string(const std::string& s) {
  if (s == "ideal") return JetMode::Ideal;
  if (s == "lag") return JetMode::Lag;
  throw InvalidSpec("unknown jet mode: " + s);
}

std::string jet_mode_to_string(JetMode m) {
  return m == JetMode::Ideal ? "ideal" : "lag";
}

Eigen::VectorXd assemble_observation(const dynamics::RobotModel& model,
                                     const dynamics::RobotState& state,
                                     const terrain::HeightField& field,
                                     const Eigen::Vector2d& target, int cells,
                                     double cell_size) {
  Eigen::VectorXd obs(priors::kFeatureDim + cells + 2);
  obs.head(priors::kFeatureDim) = priors::feature_frame(model, state);
  obs.segment(priors::kFeatureDim, cells) = terrain::sample_heightmap(
      field, state.base_pos.x(), state.base_pos.y(), cells, cell_size);
  obs.tail<2>() = dynamics::rot2(-state.pitch) * (target - state.base_pos);
  return obs;
}

RewardTerms task_rewards(const dynamics::RobotState& state, double prev_distance,
                         const Eigen::Vector2d& target, const RewardWeights& weights,
                         double v_d, double dt) {
  RewardTerms terms;
  const double dist = (target - state.base_pos).norm();
  terms.r_c = std::exp(-weights.c1 * dist * dist);

  const double approach = (prev_distance - dist) / dt;
  const double verr = v_d - approach;
  terms.r_v = std::exp(-weights.c2 * verr * verr);

  // planar facing: unit base x-axis dotted with the target direction
  if (dist > 1e-9) {
    const double facing = ((target.x() - state.base_pos.x()) / dist) *
                          std::cos(state.pitch);
    terms.r_f = weights.facing_positive ? std::max(0.0, facing)
                                        : std::min(0.0, facing);
  }
  return terms;
}

double total_task_reward(const RewardTerms& terms, const RewardWeights& weights) {
  return weights.w_c * terms.r_c + weights.w_v * terms.r_v +
         weights.w_f * terms.r_f + weights.w_t * terms.r_t;
}

Environment::Environment(EnvConfig config) : config_(std::move(config)) {
  config_.robot.validate();
  stance_ = priors::stance_pose(config_.robot, config_.task.stance_height);
  field_ = terrain::generate(config_.terrain);
}

ActionSpec Environment::action_spec() const {
  ActionSpec spec;
  spec.center.head<4>() = stance_;
  spec.scale.head<4>().setConstant(1.0);
  spec.low.head<4>() = config_.robot.joint_lower;
  spec.high.head<4>() = config_.robot.joint_upper;
  if (config_.jet_mode == JetMode::Ideal) {
    spec.center.tail<2>().setZero();
    spec.scale.tail<2>().setConstant(config_.jet_rate_limit);
    spec.low.tail<2>().setConstant(-config_.jet_rate_limit);
    spec.high.tail<2>().setConstant(config_.jet_rate_limit);
  } else {
    const double u0 = config_.jet_params.u_min;
    spec.center.tail<2>().setConstant(0.5 * (u0 + 1.0));
    spec.scale.tail<2>().setConstant(0.5 * (1.0 - u0));
    spec.low.tail<2>().setConstant(u0);
    spec.high.tail<2>().setConstant(1.0);
  }
  return spec;
}

bool Environment::next_kind_is_air(double from_x, double dist) {
  switch (config_.task.schedule) {
    case Schedule::GroundOnly: return false;
    case Schedule::AirOnly: return true;
    case Schedule::Alternating: {
      const bool air = alternate_air_next_;
      alternate_air_next_ = !alternate_air_next_;
      return air;
    }
    case Schedule::TerrainDriven: {
      // fly when the stretch ahead drops away under the candidate path
      const double here = field_.height_at(from_x);
      double lowest = here;
      for (int i = 0; i <= 8; ++i)
        lowest = std::min(lowest, field_.height_at(from_x + dist * i / 8.0));
      return lowest < here - 0.5;
    }
  }
  return false;
}

void Environment::spawn_waypoint(const Eigen::Vector2d& from) {
  std::uniform_real_distribution<double> spawn(config_.task.spawn_min,
                                               config_.task.spawn_max);
  const double dist = spawn(rng_);
  const bool air = next_kind_is_air(from.x(), dist);
  target_is_air_ = air;
  if (!air) {
    const double x = from.x() + dist;
    target_ = {x, field_.height_at(x) + config_.task.stance_height};
  } else {
    // pick a desired altitude band above local terrain, then place the
    // waypoint exactly `dist` away, clamping the climb so the hop stays
    // geometrically consistent
    const double x_ref = from.x() + dist;
    std::uniform_real_distribution<double> alt(config_.task.air_alt_min,
                                               config_.task.air_alt_max);
    const double z_des = field_.height_at(x_ref) + alt(rng_);
    const double dz = std::clamp(z_des - from.y(), -0.95 * dist, 0.95 * dist);
    const double dx = std::sqrt(dist * dist - dz * dz);
    target_ = {from.x() + dx, from.y() + dz};
  }
}

Eigen::VectorXd Environment::reset(uint64_t seed) {
  rng_.seed(seed);
  if (config_.terrain.kind == terrain::TerrainKind::Rough) {
    terrain::TerrainSpec spec = config_.terrain;
    spec.seed = rng_();
    field_ = terrain::generate(spec);
  }

  state_ = dynamics::RobotState{};
  state_.base_pos = {0.0, field_.height_at(0.0) + config_.task.stance_height};
  state_.q = stance_;
  state_.thrust.setZero();
  if (config_.jet_mode == JetMode::Lag)
    state_.thrust.setConstant(config_.jet_params.t_ss(config_.jet_params.u_min));

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (rsi_ && !rsi_->empty() && unit(rng_) < config_.p_rsi) {
    std::uniform_int_distribution<size_t> pick_clip(0, rsi_->clips.size() - 1);
    const auto& clip = rsi_->clips[pick_clip(rng_)];
    std::uniform_int_distribution<size_t> pick_frame(0, clip.frames.size() - 1);
    const priors::FeatureFrame& f = clip.frames[pick_frame(rng_)];
    state_.pitch = std::atan2(f(priors::feat::kSinPitch), f(priors::feat::kCosPitch));
    state_.base_vel = dynamics::rot2(state_.pitch) * f.segment<2>(priors::feat::kVel);
    state_.omega = f(priors::feat::kOmega);
    state_.q = f.segment<4>(priors::feat::kJointPos)
                   .cwiseMax(config_.robot.joint_lower)
                   .cwiseMin(config_.robot.joint_upper);
    state_.qd = f.segment<4>(priors::feat::kJointVel);
    state_.thrust = f.segment<2>(priors::feat::kThrust)
                        .cwiseMax(0.0)
                        .cwiseMin(config_.robot.t_max);
    if (state_.thrust.maxCoeff() > 1.0) {
      // airborne frame: place at a random altitude above the terrain
      std::uniform_real_distribution<double> alt(1.5, 3.5);
      state_.base_pos.y() = field_.height_at(0.0) + alt(rng_);
    } else {
      // grounded frame: rest the lowest foot on the terrain
      const auto feet = dynamics::forward_kinematics(config_.robot, state_);
      double lowest = 0.0;
      for (const auto& foot : feet)
        lowest = std::min(lowest, (foot.world - state_.base_pos).y());
      state_.base_pos.y() = field_.height_at(0.0) - lowest;
    }
  }

  spawn_waypoint(state_.base_pos);
  prev_distance_ = (target_ - state_.base_pos).norm();
  step_count_ = 0;
  waypoints_hit_ = 0;
  done_ = false;
  return observation();
}

Eigen::VectorXd Environment::observation() const {
  return assemble_observation(config_.robot, state_, field_, target_,
                              config_.heightmap_cells, config_.heightmap_cell);
}

StepResult Environment::step(const Action& physical_action) {
  if (done_) throw SteppedDoneEnv("step() on a finished episode; call reset()");

  StepResult result;
  result.prev_features = features();

  const Eigen::Vector4d q_des = physical_action.head<4>()
                                    .cwiseMax(config_.robot.joint_lower)
                                    .cwiseMin(config_.robot.joint_upper);
  const double dt = config_.control_dt();
  for (int j = 0; j < 2; ++j) {
    const double u = physical_action(4 + j);
    state_.thrust(j) =
        config_.jet_mode == JetMode::Ideal
            ? jetdyn::ideal_update(state_.thrust(j), u, dt, config_.robot.t_max,
                                   config_.jet_rate_limit)
            : jetdyn::lag_update(config_.jet_params, state_.thrust(j), u, dt);
  }

  bool blew_up = false;
  const double sub_dt = dt / config_.substeps;
  for (int s = 0; s < config_.substeps; ++s) {
    try {
      state_ = dynamics::step_dynamics(config_.robot, state_, q_des, sub_dt, field_);
    } catch (const NonFiniteState&) {
      blew_up = true;  // keep the last finite state and end the episode
      break;
    }
  }
  ++step_count_;

  result.features = features();
  result.rewards = task_rewards(state_, prev_distance_, target_, config_.rewards,
                                config_.task.v_d, dt);
  result.rewards.r_t = -(state_.thrust / config_.robot.t_max).squaredNorm();
  result.rewards.task_total = total_task_reward(result.rewards, config_.rewards);
  result.rewards.style =
      style_fn_ ? style_fn_(result.prev_features, result.features) : 0.0;
  result.rewards.total = config_.rewards.w_goal * result.rewards.task_total +
                         config_.rewards.w_style * result.rewards.style;
  result.thrust_fraction = state_.thrust.mean() / config_.robot.t_max;

  const double clearance =
      state_.base_pos.y() - field_.height_at(state_.base_pos.x());
  if (blew_up || clearance < config_.min_clearance) {
    done_ = true;
    result.reason = Termination::Fell;
  } else if (step_count_ >= config_.max_steps) {
    done_ = true;
    result.reason = Termination::Timeout;
  }

  const double dist = (target_ - state_.base_pos).norm();
  prev_distance_ = dist;
  if (!done_ && dist < config_.task.hit_radius) {
    ++waypoints_hit_;
    spawn_waypoint(target_);
    prev_distance_ = (target_ - state_.base_pos).norm();
  }

  result.done = done_;
  result.waypoints_hit = waypoints_hit_;
  result.observation = observation();
  return result;
}

VecEnv::VecEnv(const EnvConfig& config, int count, uint64_t master_seed,
               int workers)
    : workers_(std::max(1, workers)) {
  for (int i = 0; i < count; ++i) {
    envs_.push_back(std::make_unique<Environment>(config));
    seed_streams_.push_back(rngutil::make_engine(master_seed, i));
  }
}

Eigen::MatrixXd VecEnv::reset_all() {
  Eigen::MatrixXd obs(size(), envs_.empty() ? 0 : envs_[0]->observation_dim());
  for (int i = 0; i < size(); ++i)
    obs.row(i) = envs_[i]->reset(seed_streams_[i]());
  return obs;
}

std::vector<StepResult> VecEnv::step(const Eigen::MatrixXd& physical_actions) {
  if (physical_actions.rows() != size() || physical_actions.cols() != 6)
    throw DimensionMismatch("VecEnv::step expects one 6-dim action row per env");
  std::vector<StepResult> results(size());

  auto run_range = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      results[i] = envs_[i]->step(physical_actions.row(i).transpose());
      if (results[i].done)
        results[i].reset_observation = envs_[i]->reset(seed_streams_[i]());
    }
  };

  if (workers_ <= 1 || size() < 2 * workers_) {
    run_range(0, size());
  } else {
    std::vector<std::thread> pool;
    const int chunk = (size() + workers_ - 1) / workers_;
    for (int w = 0; w < workers_; ++w) {
      const int begin = w * chunk, end = std::min(size(), begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  return results;
}

void VecEnv::set_style_fn(const StyleFn& fn) {
  for (auto& e : envs_) e->set_style_fn(fn);
}

void VecEnv::set_rsi_dataset(std::shared_ptr<const priors::MotionDataset> ds) {
  for (auto& e : envs_) e->set_rsi_dataset(ds);
}

}  // namespace jetleg::envtask
