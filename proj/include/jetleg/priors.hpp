#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "jetleg/dynamics.hpp"
#include "jetleg/errors.hpp"

namespace jetleg::priors {

/// Discriminator feature vector layout (19 entries, SI units):
///   [cos pitch, sin pitch,
///    base-frame linear velocity (2), angular velocity,
///    joint positions (4), joint velocities (4),
///    base-frame foot positions (2 x 2), thrusts (2)]
constexpr int kFeatureDim = 19;
using FeatureFrame = Eigen::Matrix<double, kFeatureDim, 1>;

namespace feat {
constexpr int kCosPitch = 0;
constexpr int kSinPitch = 1;
constexpr int kVel = 2;       // 2 entries
constexpr int kOmega = 4;
constexpr int kJointPos = 5;  // 4 entries
constexpr int kJointVel = 9;  // 4 entries
constexpr int kFeet = 13;     // 4 entries
constexpr int kThrust = 17;   // 2 entries
}  // namespace feat

/// Extracts the feature vector from a simulation state.
FeatureFrame feature_frame(const dynamics::RobotModel& model,
                           const dynamics::RobotState& state);

enum class ClipLabel : uint8_t { Walk = 0, Fly = 1 };

struct MotionClip {
  double rate_hz = 60.0;
  ClipLabel label = ClipLabel::Walk;
  std::vector<FeatureFrame> frames;
};

struct MotionDataset {
  std::vector<MotionClip> clips;
  size_t transition_count() const;
  bool empty() const { return clips.empty(); }
};

struct TransitionPair {
  FeatureFrame first;
  FeatureFrame second;
};

/// Closed-form planar two-link IK, knee-backward branch (knee <= 0).
/// `target` is relative to the hip mount in the base frame.
/// Throws Unreachable outside the annulus [|l1-l2|, l1+l2].
std::pair<double, double> leg_ik(const Eigen::Vector2d& target, double l1, double l2);

/// Standing pose with both feet directly under their hip mounts and the
/// base `base_height` above flat ground.
Eigen::Vector4d stance_pose(const dynamics::RobotModel& model, double base_height);

struct GaitParams {
  double stride = 0.4;       // m per cycle
  double cycle = 1.0;        // s
  double duty = 0.65;        // stance fraction, (0.5, 1)
  double base_height = 0.6;  // m
  double clearance = 0.05;   // swing apex, m
  int cycles = 2;
};

/// Procedural walk clip at 60 Hz: constant base velocity, stance feet pinned
/// to the ground, cycloidal swing, joints from leg_ik, velocities by backward
/// finite differences, thrust identically zero.
MotionClip generate_walk_clip(const dynamics::RobotModel& model,
                              const GaitParams& gait);

/// Quintic polynomial with position/velocity/acceleration boundary values.
struct Quintic {
  Eigen::Matrix<double, 6, 1> c;  // ascending powers
  double duration = 1.0;
  static Quintic boundary(double p0, double v0, double a0, double p1, double v1,
                          double a1, double duration);
  double pos(double t) const;
  double vel(double t) const;
  double acc(double t) const;
};

struct FlightEndpoints {
  Eigen::Vector2d start_pos{0.0, 1.0};
  Eigen::Vector2d start_vel{0.0, 0.0};
  Eigen::Vector2d goal_pos{2.0, 2.0};
  Eigen::Vector2d goal_vel{0.0, 0.0};
};

/// Minimum-effort flight clip: quintic base trajectory per axis, pitch
/// aligned with the required thrust direction, per-jet thrust from inverse
/// dynamics, joints blended into a tucked pose. Throws InfeasibleThrust when
/// the required total thrust exceeds the jets' combined maximum.
MotionClip generate_flight_clip(const dynamics::RobotModel& model,
                                const FlightEndpoints& ends, double duration);

/// Uniform over all consecutive frame pairs across all clips.
std::vector<TransitionPair> sample_transitions(const MotionDataset& dataset,
                                               int batch, std::mt19937_64& rng);

/// Versioned binary dataset file; lossless, little-endian 64-bit floats.
void save_dataset(const MotionDataset& dataset, const std::string& path);
MotionDataset load_dataset(const std::string& path);

/// Default prior datasets (see gen-priors): jittered gait parameters for
/// walking, random feasible endpoints for flight.
MotionDataset make_walk_dataset(const dynamics::RobotModel& model, int clips,
                                uint64_t seed);
MotionDataset make_fly_dataset(const dynamics::RobotModel& model, int clips,
                               uint64_t seed);

/// All frames of a dataset stacked row-wise (for normalizer statistics).
Eigen::MatrixXd stack_frames(const MotionDataset& dataset);

}  // namespace jetleg::priors
