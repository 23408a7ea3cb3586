#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "jetleg/approx.hpp"
#include "jetleg/checkpoint.hpp"
#include "jetleg/config.hpp"
#include "jetleg/envtask.hpp"

namespace jetleg::ppo {

using envtask::Action;

/// Diagonal-Gaussian policy in a normalized action space, mapped to the
/// physical action through an affine spec and clamped at its bounds. The
/// log-probability is that of the pre-clamp Gaussian.
struct GaussianPolicy {
  approx::Mlp mean_net;
  Eigen::VectorXd log_std;
  envtask::ActionSpec spec;
  double log_std_floor = -4.0;

  static GaussianPolicy make(int obs_dim, const std::vector<int>& hidden,
                             const envtask::ActionSpec& spec, double log_std_init,
                             double log_std_floor, uint64_t seed);

  Eigen::MatrixXd mean_forward(const Eigen::MatrixXd& obs_norm) const {
    return mean_net.forward(obs_norm);
  }

  struct Sampled {
    Action raw;       // normalized-space pre-clamp action
    Action physical;  // what the environment receives
    double logp;
  };
  Sampled sample(const Eigen::VectorXd& mean_raw, std::mt19937_64& rng) const;

  double log_prob(const Eigen::VectorXd& mean_raw, const Action& raw) const;
  Action mean_physical(const Eigen::VectorXd& obs_norm) const;
  double entropy() const;  // state-independent for a diagonal Gaussian

  // flat parameter vector = [mean_net params, log_std]
  Eigen::VectorXd params_flat() const;
  void set_params_flat(const Eigen::VectorXd& p);
};

/// Time-major rollout storage: flat index i = t * actors + a.
struct RolloutBuffer {
  int actors = 0, horizon = 0, obs_dim = 0, action_dim = 6;
  Eigen::MatrixXd obs;          // raw observations
  Eigen::MatrixXd actions_raw;  // normalized-space pre-clamp actions
  Eigen::VectorXd logp;
  Eigen::VectorXd values;
  Eigen::VectorXd rewards;      // total (mixed) reward fed to GAE
  Eigen::VectorXd next_values;  // V(s_{t+1}); bootstrap on timeouts
  std::vector<uint8_t> fell;    // terminal without bootstrap
  std::vector<uint8_t> ep_end;  // GAE chain cut (done or horizon end)

  // per-step reward decomposition kept for the metrics log
  Eigen::VectorXd r_c, r_v, r_f, r_t, task_total, style;

  void resize(int actors_, int horizon_, int obs_dim_);
  int size() const { return actors * horizon; }
  int index(int t, int a) const { return t * actors + a; }
};

/// Backward GAE recursion over per-actor sequences. `fell` masks the
/// bootstrap term; `ep_end` cuts the exponential chain.
void compute_gae(const RolloutBuffer& buffer, double gamma, double lam,
                 Eigen::VectorXd& advantages, Eigen::VectorXd& returns);

struct UpdateReport {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  int epochs_ran = 0;
};

/// Clipped-surrogate PPO epoch loop with KL early stopping. Advantages are
/// normalized (zero mean, unit variance) across the whole batch first.
UpdateReport ppo_update(GaussianPolicy& policy, approx::Mlp& value_net,
                        approx::AdamState& policy_opt,
                        approx::AdamState& value_opt,
                        const approx::RunningNormalizer& obs_norm,
                        const RolloutBuffer& buffer,
                        const config::PpoConfig& cfg, std::mt19937_64& rng);

struct TrainResult {
  std::string checkpoint_path;
  std::string metrics_path;
  int64_t iterations = 0;
  int64_t env_steps = 0;
};

/// Full AMP training loop: rollout -> discriminator updates -> GAE -> PPO
/// update -> metrics row. Deterministic in (config, seed) for workers = 1.
TrainResult train(const config::RunConfig& cfg, std::ostream& log);

struct EvalEpisode {
  int length = 0;
  double reward = 0.0;
  double task_reward = 0.0;
  int waypoints = 0;
  double thrust_usage = 0.0;      // 1 - mean T/T_max
  double duration_fraction = 0.0; // length / max_steps
  double mean_clearance = 0.0;    // base height above terrain
};

struct EvalReport {
  std::vector<EvalEpisode> episodes;
  double mean_reward = 0.0;
  double mean_task_reward = 0.0;
  double mean_length = 0.0;
  double mean_waypoints = 0.0;
  double mean_thrust_usage = 0.0;
  double mean_duration_fraction = 0.0;
  double mean_clearance = 0.0;
};

EvalReport evaluate(const checkpoint::Checkpoint& ckpt,
                    const envtask::EnvConfig& env_cfg, int episodes,
                    bool deterministic, uint64_t seed,
                    const std::string& trajectory_path = {});

}  // namespace jetleg::ppo
