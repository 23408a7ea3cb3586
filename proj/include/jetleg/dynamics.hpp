#pragma once

#include <Eigen/Core>
#include <array>

#include "jetleg/errors.hpp"
#include "jetleg/terrain.hpp"

namespace jetleg::dynamics {

inline Eigen::Matrix2d rot2(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

inline double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

/// Sagittal-plane model: rigid base carrying all mass, two 2-link massless
/// legs on PD position control, two body-fixed jets. SI units.
struct RobotModel {
  double mass = 44.0;
  double inertia = 2.2;  // base pitch inertia, kg m^2
  double l1 = 0.3, l2 = 0.3;
  std::array<Eigen::Vector2d, 2> hip_offset{Eigen::Vector2d(0.08, -0.10),
                                            Eigen::Vector2d(-0.08, -0.10)};
  std::array<Eigen::Vector2d, 2> jet_offset{Eigen::Vector2d(0.12, 0.10),
                                            Eigen::Vector2d(-0.12, 0.10)};
  double t_max = 250.0;
  Eigen::Vector4d joint_lower{-1.5, -2.6, -1.5, -2.6};
  Eigen::Vector4d joint_upper{1.5, 0.1, 1.5, 0.1};
  Eigen::Vector4d kp = Eigen::Vector4d::Constant(150.0);
  Eigen::Vector4d kd = Eigen::Vector4d::Constant(5.0);
  double torque_limit = 100.0;
  double contact_kn = 1e4;   // N/m
  double contact_cn = 200.0; // N s/m
  double contact_ct = 300.0; // N s/m
  double friction_mu = 0.8;
  double joint_inertia = 0.05;  // reflected, kg m^2
  double joint_damping = 0.1;   // N m s
  double gravity = 9.81;

  static constexpr int kLegs = 2;
  static constexpr int kJets = 2;
  static constexpr int kJoints = 4;

  void validate() const;  // throws InvalidSpec
};

struct RobotState {
  Eigen::Vector2d base_pos{0.0, 0.6};
  double pitch = 0.0;
  Eigen::Vector2d base_vel{0.0, 0.0};
  double omega = 0.0;
  Eigen::Vector4d q = Eigen::Vector4d::Zero();
  Eigen::Vector4d qd = Eigen::Vector4d::Zero();
  Eigen::Vector2d thrust{0.0, 0.0};

  bool finite() const;
};

/// Foot position of one 2-link chain relative to its hip mount, base frame.
/// Zero angles point the leg straight down; positive hip swings forward.
Eigen::Vector2d leg_fk(double l1, double l2, double hip, double knee);

struct FootPose {
  Eigen::Vector2d base_frame;  // relative to base origin
  Eigen::Vector2d world;
};
std::array<FootPose, 2> forward_kinematics(const RobotModel& model,
                                           const RobotState& state);

/// World-frame foot velocity (base motion + joint rates).
std::array<Eigen::Vector2d, 2> foot_velocities(const RobotModel& model,
                                               const RobotState& state);

Eigen::Vector4d pd_torques(const RobotModel& model, const RobotState& state,
                           const Eigen::Vector4d& q_des);

struct JetForce {
  Eigen::Vector2d force;  // world frame, N
  double torque;          // about the base origin, N m
};
std::array<JetForce, 2> jet_world_forces(const RobotModel& model,
                                         const RobotState& state);

struct ContactPoint {
  int foot = 0;
  Eigen::Vector2d world_pos = Eigen::Vector2d::Zero();
  double penetration = 0.0;
  double normal_force = 0.0;
  double tangential_force = 0.0;
  bool in_contact = false;
};
std::array<ContactPoint, 2> contact_forces(const RobotModel& model,
                                           const RobotState& state,
                                           const terrain::HeightField& field);

/// One physics substep. Base linear/angular dynamics use a velocity-Verlet
/// style update (exact for ballistic flight); joints integrate decoupled
/// second-order dynamics semi-implicitly and are clamped to their limits
/// with velocity zeroing. Thrust entries are carried through unchanged —
/// the jet-dynamics module advances them at the control rate.
/// Throws NonFiniteState if the step produces a non-finite entry.
RobotState step_dynamics(const RobotModel& model, const RobotState& state,
                         const Eigen::Vector4d& q_des, double dt,
                         const terrain::HeightField& field);

}  // namespace jetleg::dynamics
