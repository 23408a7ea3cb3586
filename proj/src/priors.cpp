#include "jetleg/priors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "jetleg/serial.hpp"

namespace jetleg::priors {

namespace {
constexpr double kRate = 60.0;
constexpr double kNominalStride = 0.4;
const char kMagic[9] = "JLPRIOR1";
constexpr uint32_t kVersion = 1;
const char* kLayout =
    "cos_pitch,sin_pitch,vel_x,vel_z,omega,q0,q1,q2,q3,qd0,qd1,qd2,qd3,"
    "foot0_x,foot0_z,foot1_x,foot1_z,thrust0,thrust1";
}  // namespace

FeatureFrame feature_frame(const dynamics::RobotModel& model,
                           const dynamics::RobotState& state) {
  FeatureFrame f;
  f(feat::kCosPitch) = std::cos(state.pitch);
  f(feat::kSinPitch) = std::sin(state.pitch);
  f.segment<2>(feat::kVel) = dynamics::rot2(-state.pitch) * state.base_vel;
  f(feat::kOmega) = state.omega;
  f.segment<4>(feat::kJointPos) = state.q;
  f.segment<4>(feat::kJointVel) = state.qd;
  const auto feet = dynamics::forward_kinematics(model, state);
  f.segment<2>(feat::kFeet) = feet[0].base_frame;
  f.segment<2>(feat::kFeet + 2) = feet[1].base_frame;
  f.segment<2>(feat::kThrust) = state.thrust;
  return f;
}

size_t MotionDataset::transition_count() const {
  size_t n = 0;
  for (const auto& c : clips)
    if (c.frames.size() >= 2) n += c.frames.size() - 1;
  return n;
}

std::pair<double, double> leg_ik(const Eigen::Vector2d& target, double l1,
                                 double l2) {
  const double r = target.norm();
  const double rmin = std::abs(l1 - l2), rmax = l1 + l2;
  if (r < rmin - 1e-12 || r > rmax + 1e-12)
    throw Unreachable("leg_ik target outside the reachable annulus");
  const double cos_knee =
      std::clamp((r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  const double knee = -std::acos(cos_knee);  // knee-backward branch
  const double gamma = std::atan2(target.x(), -target.y());
  const double psi = std::atan2(l2 * std::sin(knee), l1 + l2 * std::cos(knee));
  return {gamma - psi, knee};
}

Eigen::Vector4d stance_pose(const dynamics::RobotModel& model,
                            double base_height) {
  Eigen::Vector4d q;
  for (int leg = 0; leg < 2; ++leg) {
    const Eigen::Vector2d target(0.0, -base_height - model.hip_offset[leg].y());
    const auto [hip, knee] = leg_ik(target, model.l1, model.l2);
    q(2 * leg) = hip;
    q(2 * leg + 1) = knee;
  }
  return q;
}

namespace {

// World-frame foot position over the gait cycle. Stance feet stay pinned at
// the stance-midpoint hip location; swing follows a cycloid to the next one.
Eigen::Vector2d gait_foot_world(const GaitParams& g, double hip_x_offset,
                                double phase_offset, double t) {
  const double v = g.stride / g.cycle;
  const double p_total = t / g.cycle + phase_offset;
  const double n = std::floor(p_total);
  const double p = p_total - n;
  const double apex =
      g.clearance * std::min(1.0, std::abs(g.stride) / kNominalStride);
  auto pin_x = [&](double cycle_index) {
    const double t_mid = (cycle_index + 0.5 * g.duty - phase_offset) * g.cycle;
    return v * t_mid + hip_x_offset;
  };
  if (p < g.duty) return {pin_x(n), 0.0};
  const double s = (p - g.duty) / (1.0 - g.duty);
  const double x = pin_x(n) + g.stride * (s - std::sin(2.0 * M_PI * s) / (2.0 * M_PI));
  const double z = apex * 0.5 * (1.0 - std::cos(2.0 * M_PI * s));
  return {x, z};
}

}  // namespace

MotionClip generate_walk_clip(const dynamics::RobotModel& model,
                              const GaitParams& gait) {
  if (gait.duty <= 0.5 || gait.duty >= 1.0)
    throw InvalidSpec("gait duty factor must lie in (0.5, 1)");
  if (gait.cycle <= 0.0 || gait.cycles < 1)
    throw InvalidSpec("gait cycle duration and count must be positive");

  const int frames = static_cast<int>(std::lround(gait.cycles * gait.cycle * kRate)) + 1;
  const double v = gait.stride / gait.cycle;

  MotionClip clip;
  clip.rate_hz = kRate;
  clip.label = ClipLabel::Walk;
  clip.frames.reserve(frames);

  std::vector<Eigen::Vector4d> qs(frames);
  std::vector<double> base_xs(frames);
  const double phase_offset[2] = {0.0, 0.5};

  for (int i = 0; i < frames; ++i) {
    const double t = static_cast<double>(i) / kRate;
    const double base_x = v * t;
    base_xs[i] = base_x;
    for (int leg = 0; leg < 2; ++leg) {
      const Eigen::Vector2d foot = gait_foot_world(
          gait, model.hip_offset[leg].x(), phase_offset[leg], t);
      const Eigen::Vector2d rel_hip =
          foot - Eigen::Vector2d(base_x, gait.base_height) - model.hip_offset[leg];
      const auto [hip, knee] = leg_ik(rel_hip, model.l1, model.l2);
      qs[i](2 * leg) = hip;
      qs[i](2 * leg + 1) = knee;
    }
  }

  for (int i = 0; i < frames; ++i) {
    FeatureFrame f = FeatureFrame::Zero();
    f(feat::kCosPitch) = 1.0;
    const int prev = std::max(i, 1);
    f(feat::kVel) = (base_xs[prev] - base_xs[prev - 1]) * kRate;
    f.segment<4>(feat::kJointPos) = qs[i];
    f.segment<4>(feat::kJointVel) = (qs[prev] - qs[prev - 1]) * kRate;
    for (int leg = 0; leg < 2; ++leg)
      f.segment<2>(feat::kFeet + 2 * leg) =
          model.hip_offset[leg] +
          dynamics::leg_fk(model.l1, model.l2, qs[i](2 * leg), qs[i](2 * leg + 1));
    clip.frames.push_back(f);
  }
  return clip;
}

Quintic Quintic::boundary(double p0, double v0, double a0, double p1, double v1,
                          double a1, double duration) {
  if (duration <= 0.0) throw InvalidSpec("quintic duration must be > 0");
  Quintic q;
  q.duration = duration;
  q.c(0) = p0;
  q.c(1) = v0;
  q.c(2) = 0.5 * a0;
  const double T = duration;
  Eigen::Matrix3d m;
  m << T * T * T, T * T * T * T, T * T * T * T * T,
      3 * T * T, 4 * T * T * T, 5 * T * T * T * T,
      6 * T, 12 * T * T, 20 * T * T * T;
  Eigen::Vector3d rhs(p1 - (p0 + v0 * T + 0.5 * a0 * T * T),
                      v1 - (v0 + a0 * T), a1 - a0);
  q.c.tail<3>() = m.fullPivLu().solve(rhs);
  return q;
}

double Quintic::pos(double t) const {
  double acc = 0.0;
  for (int k = 5; k >= 0; --k) acc = acc * t + c(k);
  return acc;
}

double Quintic::vel(double t) const {
  double acc = 0.0;
  for (int k = 5; k >= 1; --k) acc = acc * t + k * c(k);
  return acc;
}

double Quintic::acc(double t) const {
  double acc = 0.0;
  for (int k = 5; k >= 2; --k) acc = acc * t + k * (k - 1) * c(k);
  return acc;
}

MotionClip generate_flight_clip(const dynamics::RobotModel& model,
                                const FlightEndpoints& ends, double duration) {
  if (duration <= 0.0) throw InvalidSpec("flight duration must be > 0");
  const int frames = std::max(2, static_cast<int>(std::lround(duration * kRate)) + 1);
  const double T = static_cast<double>(frames - 1) / kRate;

  const Quintic qx = Quintic::boundary(ends.start_pos.x(), ends.start_vel.x(), 0.0,
                                       ends.goal_pos.x(), ends.goal_vel.x(), 0.0, T);
  const Quintic qz = Quintic::boundary(ends.start_pos.y(), ends.start_vel.y(), 0.0,
                                       ends.goal_pos.y(), ends.goal_vel.y(), 0.0, T);

  const Eigen::Vector4d stance = stance_pose(model, 0.6);
  const Eigen::Vector4d tuck(0.4, -2.0, 0.4, -2.0);
  const double t_blend = std::min(0.5, T / 3.0);
  const Quintic blend = Quintic::boundary(0, 0, 0, 1, 0, 0, t_blend);

  std::vector<double> pitches(frames);
  std::vector<double> jet(frames);
  for (int i = 0; i < frames; ++i) {
    const double t = static_cast<double>(i) / kRate;
    const Eigen::Vector2d accel(qx.acc(t), qz.acc(t));
    const Eigen::Vector2d f_req =
        model.mass * (accel + Eigen::Vector2d(0.0, model.gravity));
    const double total = f_req.norm();
    if (total > model.t_max * dynamics::RobotModel::kJets)
      throw InfeasibleThrust("required thrust exceeds the jets' combined maximum");
    pitches[i] = std::atan2(-f_req.x(), f_req.y());
    jet[i] = std::clamp(0.5 * total, 0.0, model.t_max);
  }

  MotionClip clip;
  clip.rate_hz = kRate;
  clip.label = ClipLabel::Fly;
  clip.frames.reserve(frames);
  for (int i = 0; i < frames; ++i) {
    const double t = static_cast<double>(i) / kRate;
    FeatureFrame f = FeatureFrame::Zero();
    f(feat::kCosPitch) = std::cos(pitches[i]);
    f(feat::kSinPitch) = std::sin(pitches[i]);
    f.segment<2>(feat::kVel) =
        dynamics::rot2(-pitches[i]) * Eigen::Vector2d(qx.vel(t), qz.vel(t));
    if (i == 0)
      f(feat::kOmega) = (pitches[1] - pitches[0]) * kRate;
    else if (i == frames - 1)
      f(feat::kOmega) = (pitches[i] - pitches[i - 1]) * kRate;
    else
      f(feat::kOmega) = (pitches[i + 1] - pitches[i - 1]) * 0.5 * kRate;
    const double beta = t < t_blend ? blend.pos(t) : 1.0;
    const double beta_dot = t < t_blend ? blend.vel(t) : 0.0;
    const Eigen::Vector4d q = stance + beta * (tuck - stance);
    f.segment<4>(feat::kJointPos) = q;
    f.segment<4>(feat::kJointVel) = beta_dot * (tuck - stance);
    for (int leg = 0; leg < 2; ++leg)
      f.segment<2>(feat::kFeet + 2 * leg) =
          model.hip_offset[leg] +
          dynamics::leg_fk(model.l1, model.l2, q(2 * leg), q(2 * leg + 1));
    f.segment<2>(feat::kThrust) = Eigen::Vector2d::Constant(jet[i]);
    clip.frames.push_back(f);
  }
  return clip;
}

std::vector<TransitionPair> sample_transitions(const MotionDataset& dataset,
                                               int batch, std::mt19937_64& rng) {
  const size_t total = dataset.transition_count();
  if (total == 0) throw EmptyDataset("no transitions in dataset");
  std::vector<std::pair<uint32_t, uint32_t>> index;
  index.reserve(total);
  for (uint32_t c = 0; c < dataset.clips.size(); ++c)
    for (uint32_t t = 0; t + 1 < dataset.clips[c].frames.size(); ++t)
      index.emplace_back(c, t);
  std::uniform_int_distribution<size_t> pick(0, index.size() - 1);
  std::vector<TransitionPair> out;
  out.reserve(batch);
  for (int i = 0; i < batch; ++i) {
    const auto [c, t] = index[pick(rng)];
    out.push_back({dataset.clips[c].frames[t], dataset.clips[c].frames[t + 1]});
  }
  return out;
}

void save_dataset(const MotionDataset& dataset, const std::string& path) {
  if (dataset.empty()) throw EmptyDataset("refusing to save an empty dataset");
  serial::Writer w(path);
  w.raw(kMagic, 8);
  w.u32(kVersion);
  w.u32(kFeatureDim);
  w.u32(static_cast<uint32_t>(kRate));
  w.str(kLayout);
  w.u64(dataset.clips.size());
  for (const auto& clip : dataset.clips) {
    w.u8(static_cast<uint8_t>(clip.label));
    w.f64(clip.rate_hz);
    w.u64(clip.frames.size());
    for (const auto& f : clip.frames) w.raw(f.data(), sizeof(double) * kFeatureDim);
  }
}

MotionDataset load_dataset(const std::string& path) {
  serial::Reader r(path);
  char magic[8];
  r.raw(magic, 8);
  if (std::string(magic, 8) != std::string(kMagic, 8))
    throw CorruptFile("bad magic in dataset file: " + path);
  if (r.u32() != kVersion) throw SchemaMismatch("unsupported dataset version");
  const uint32_t dim = r.u32();
  if (dim != kFeatureDim)
    throw SchemaMismatch("feature dimension mismatch: file has " +
                         std::to_string(dim));
  r.u32();  // rate, informational; per-clip rate is authoritative
  r.str();  // layout
  const uint64_t clips = r.u64();
  if (clips == 0) throw EmptyDataset("dataset file contains no clips");
  MotionDataset ds;
  for (uint64_t c = 0; c < clips; ++c) {
    MotionClip clip;
    clip.label = static_cast<ClipLabel>(r.u8());
    clip.rate_hz = r.f64();
    const uint64_t n = r.u64();
    if (n < 2) throw SchemaMismatch("clip with fewer than 2 frames");
    clip.frames.resize(n);
    for (auto& f : clip.frames) r.raw(f.data(), sizeof(double) * kFeatureDim);
    if (clip.label == ClipLabel::Walk)
      for (const auto& f : clip.frames)
        if (f.segment<2>(feat::kThrust).cwiseAbs().maxCoeff() != 0.0)
          throw SchemaMismatch("walk clip with nonzero thrust");
    ds.clips.push_back(std::move(clip));
  }
  return ds;
}

MotionDataset make_walk_dataset(const dynamics::RobotModel& model, int clips,
                                uint64_t seed) {
  std::mt19937_64 rng(seed);
  MotionDataset ds;
  for (int i = 0; i < clips; ++i) {
    GaitParams g;
    g.stride = std::uniform_real_distribution<double>(0.30, 0.50)(rng);
    g.cycle = std::uniform_real_distribution<double>(0.90, 1.10)(rng);
    g.duty = std::uniform_real_distribution<double>(0.60, 0.70)(rng);
    g.base_height = std::uniform_real_distribution<double>(0.57, 0.62)(rng);
    g.clearance = std::uniform_real_distribution<double>(0.04, 0.06)(rng);
    g.cycles = 2;
    ds.clips.push_back(generate_walk_clip(model, g));
  }
  return ds;
}

MotionDataset make_fly_dataset(const dynamics::RobotModel& model, int clips,
                               uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> altitude(0.6, 3.5);
  std::uniform_real_distribution<double> advance(0.5, 3.0);
  std::uniform_real_distribution<double> length(2.0, 5.0);
  MotionDataset ds;
  while (static_cast<int>(ds.clips.size()) < clips) {
    FlightEndpoints ends;
    ends.start_pos = {0.0, altitude(rng)};
    ends.goal_pos = {advance(rng), altitude(rng)};
    double duration = length(rng);
    for (int attempt = 0;; ++attempt) {
      try {
        ds.clips.push_back(generate_flight_clip(model, ends, duration));
        break;
      } catch (const InfeasibleThrust&) {
        if (attempt > 10) throw;
        duration *= 1.4;  // slower trajectory needs less thrust
      }
    }
  }
  return ds;
}

Eigen::MatrixXd stack_frames(const MotionDataset& dataset) {
  size_t rows = 0;
  for (const auto& c : dataset.clips) rows += c.frames.size();
  Eigen::MatrixXd out(rows, kFeatureDim);
  Eigen::Index at = 0;
  for (const auto& c : dataset.clips)
    for (const auto& f : c.frames) out.row(at++) = f.transpose();
  return out;
}

}  // namespace jetleg::priors
