#include "jetleg/dynamics.hpp"

#include <cmath>

namespace jetleg::dynamics {

void RobotModel::validate() const {
  if (mass <= 0.0) throw InvalidSpec("mass must be > 0");
  if (inertia <= 0.0) throw InvalidSpec("inertia must be > 0");
  if (l1 <= 0.0 || l2 <= 0.0) throw InvalidSpec("link lengths must be > 0");
  if (t_max <= 0.0) throw InvalidSpec("t_max must be > 0");
  if ((kp.array() < 0.0).any() || (kd.array() < 0.0).any())
    throw InvalidSpec("pd gains must be >= 0");
  if (friction_mu < 0.0) throw InvalidSpec("friction must be >= 0");
  if (joint_inertia <= 0.0) throw InvalidSpec("joint inertia must be > 0");
  if ((joint_lower.array() >= joint_upper.array()).any())
    throw InvalidSpec("joint limits must satisfy lower < upper");
}

bool RobotState::finite() const {
  return base_pos.allFinite() && std::isfinite(pitch) && base_vel.allFinite() &&
         std::isfinite(omega) && q.allFinite() && qd.allFinite() &&
         thrust.allFinite();
}

Eigen::Vector2d leg_fk(double l1, double l2, double hip, double knee) {
  const double a = hip, ab = hip + knee;
  return {l1 * std::sin(a) + l2 * std::sin(ab),
          -l1 * std::cos(a) - l2 * std::cos(ab)};
}

std::array<FootPose, 2> forward_kinematics(const RobotModel& model,
                                           const RobotState& state) {
  std::array<FootPose, 2> feet;
  const Eigen::Matrix2d r = rot2(state.pitch);
  for (int leg = 0; leg < RobotModel::kLegs; ++leg) {
    const Eigen::Vector2d rel =
        model.hip_offset[leg] +
        leg_fk(model.l1, model.l2, state.q(2 * leg), state.q(2 * leg + 1));
    feet[leg].base_frame = rel;
    feet[leg].world = state.base_pos + r * rel;
  }
  return feet;
}

std::array<Eigen::Vector2d, 2> foot_velocities(const RobotModel& model,
                                               const RobotState& state) {
  std::array<Eigen::Vector2d, 2> vel;
  const Eigen::Matrix2d r = rot2(state.pitch);
  for (int leg = 0; leg < RobotModel::kLegs; ++leg) {
    const double a = state.q(2 * leg), ab = a + state.q(2 * leg + 1);
    const double ad = state.qd(2 * leg), abd = ad + state.qd(2 * leg + 1);
    // d/dt of leg_fk in the base frame
    const Eigen::Vector2d joint_vel(
        model.l1 * std::cos(a) * ad + model.l2 * std::cos(ab) * abd,
        model.l1 * std::sin(a) * ad + model.l2 * std::sin(ab) * abd);
    const Eigen::Vector2d rel =
        model.hip_offset[leg] + leg_fk(model.l1, model.l2, state.q(2 * leg),
                                       state.q(2 * leg + 1));
    const Eigen::Vector2d r_world = r * rel;
    // omega x r in the plane
    const Eigen::Vector2d spin(-state.omega * r_world.y(), state.omega * r_world.x());
    vel[leg] = state.base_vel + spin + r * joint_vel;
  }
  return vel;
}

Eigen::Vector4d pd_torques(const RobotModel& model, const RobotState& state,
                           const Eigen::Vector4d& q_des) {
  Eigen::Vector4d tau = model.kp.cwiseProduct(q_des - state.q) -
                        model.kd.cwiseProduct(state.qd);
  return tau.cwiseMin(model.torque_limit).cwiseMax(-model.torque_limit);
}

std::array<JetForce, 2> jet_world_forces(const RobotModel& model,
                                         const RobotState& state) {
  std::array<JetForce, 2> out;
  const Eigen::Matrix2d r = rot2(state.pitch);
  for (int j = 0; j < RobotModel::kJets; ++j) {
    const double t = state.thrust(j);
    out[j].force = r * Eigen::Vector2d(0.0, t);
    // cross(R p, R f) = cross(p, f); only the mount x offset produces torque
    out[j].torque = model.jet_offset[j].x() * t;
  }
  return out;
}

std::array<ContactPoint, 2> contact_forces(const RobotModel& model,
                                           const RobotState& state,
                                           const terrain::HeightField& field) {
  std::array<ContactPoint, 2> out;
  const auto feet = forward_kinematics(model, state);
  const auto vel = foot_velocities(model, state);
  for (int leg = 0; leg < RobotModel::kLegs; ++leg) {
    ContactPoint& c = out[leg];
    c.foot = leg;
    c.world_pos = feet[leg].world;
    const double ground = field.height_at(c.world_pos.x());
    const double pen = ground - c.world_pos.y();
    if (pen <= 0.0) continue;
    c.penetration = pen;
    c.in_contact = true;
    c.normal_force =
        std::max(0.0, model.contact_kn * pen - model.contact_cn * vel[leg].y());
    const double limit = model.friction_mu * c.normal_force;
    c.tangential_force =
        std::clamp(-model.contact_ct * vel[leg].x(), -limit, limit);
  }
  return out;
}

namespace {

struct BaseAccel {
  Eigen::Vector2d linear;
  double angular;
};

BaseAccel base_accel(const RobotModel& model, const RobotState& state,
                     const terrain::HeightField& field) {
  Eigen::Vector2d force(0.0, -model.mass * model.gravity);
  double torque = 0.0;
  for (const auto& jf : jet_world_forces(model, state)) {
    force += jf.force;
    torque += jf.torque;
  }
  for (const auto& c : contact_forces(model, state, field)) {
    if (!c.in_contact) continue;
    const Eigen::Vector2d f(c.tangential_force, c.normal_force);
    force += f;
    torque += cross2(c.world_pos - state.base_pos, f);
  }
  return {force / model.mass, torque / model.inertia};
}

}  // namespace

RobotState step_dynamics(const RobotModel& model, const RobotState& state,
                         const Eigen::Vector4d& q_des, double dt,
                         const terrain::HeightField& field) {
  if (dt <= 0.0) throw InvalidSpec("step_dynamics dt must be > 0");

  const BaseAccel a1 = base_accel(model, state, field);

  RobotState next = state;
  next.base_pos = state.base_pos + state.base_vel * dt + 0.5 * a1.linear * dt * dt;
  next.pitch = state.pitch + state.omega * dt + 0.5 * a1.angular * dt * dt;

  // joints: decoupled second-order dynamics, velocity before position
  const Eigen::Vector4d tau = pd_torques(model, state, q_des);
  const Eigen::Vector4d qdd =
      (tau - model.joint_damping * state.qd) / model.joint_inertia;
  next.qd = state.qd + qdd * dt;
  next.q = state.q + next.qd * dt;
  for (int i = 0; i < RobotModel::kJoints; ++i) {
    if (next.q(i) < model.joint_lower(i)) {
      next.q(i) = model.joint_lower(i);
      next.qd(i) = 0.0;
    } else if (next.q(i) > model.joint_upper(i)) {
      next.q(i) = model.joint_upper(i);
      next.qd(i) = 0.0;
    }
  }

  // velocity predictor for the second force evaluation
  next.base_vel = state.base_vel + a1.linear * dt;
  next.omega = state.omega + a1.angular * dt;
  const BaseAccel a2 = base_accel(model, next, field);

  next.base_vel = state.base_vel + 0.5 * (a1.linear + a2.linear) * dt;
  next.omega = state.omega + 0.5 * (a1.angular + a2.angular) * dt;

  if (!next.finite()) throw NonFiniteState("non-finite state after dynamics step");
  return next;
}

}  // namespace jetleg::dynamics
