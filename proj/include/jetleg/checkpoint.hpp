#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "jetleg/amp.hpp"
#include "jetleg/approx.hpp"
#include "jetleg/envtask.hpp"

namespace jetleg::checkpoint {

/// Versioned binary training snapshot; round-trips bit-exactly.
struct Checkpoint {
  approx::Mlp policy_mean;
  Eigen::VectorXd log_std;
  approx::Mlp value;
  approx::RunningNormalizer obs_norm;
  approx::AdamState policy_opt;
  approx::AdamState value_opt;
  std::optional<amp::Discriminator> disc;
  envtask::ActionSpec action_spec;
  int64_t iteration = 0;
  int64_t env_steps = 0;

  void save(const std::string& path) const;
  /// Throws CheckpointMismatch on bad magic/version.
  static Checkpoint load(const std::string& path);
};

}  // namespace jetleg::checkpoint
