#include "jetleg/checkpoint.hpp"

namespace jetleg::checkpoint {

namespace {
const char kMagic[9] = "JLCKPT01";

void save_action_spec(serial::Writer& w, const envtask::ActionSpec& s) {
  w.vec(s.center);
  w.vec(s.scale);
  w.vec(s.low);
  w.vec(s.high);
}

envtask::ActionSpec load_action_spec(serial::Reader& r) {
  envtask::ActionSpec s;
  s.center = r.vec();
  s.scale = r.vec();
  s.low = r.vec();
  s.high = r.vec();
  return s;
}
}  // namespace

void Checkpoint::save(const std::string& path) const {
  serial::Writer w(path);
  w.raw(kMagic, 8);
  policy_mean.save(w);
  w.vec(log_std);
  value.save(w);
  obs_norm.save(w);
  policy_opt.save(w);
  value_opt.save(w);
  w.u8(disc.has_value() ? 1 : 0);
  if (disc) disc->save(w);
  save_action_spec(w, action_spec);
  w.i64(iteration);
  w.i64(env_steps);
}

Checkpoint Checkpoint::load(const std::string& path) {
  serial::Reader r(path);
  char magic[8];
  r.raw(magic, 8);
  if (std::string(magic, 8) != std::string(kMagic, 8))
    throw CheckpointMismatch("not a checkpoint file (bad magic): " + path);
  Checkpoint c;
  c.policy_mean = approx::Mlp::load(r);
  c.log_std = r.vec();
  c.value = approx::Mlp::load(r);
  c.obs_norm = approx::RunningNormalizer::load(r);
  c.policy_opt = approx::AdamState::load(r);
  c.value_opt = approx::AdamState::load(r);
  if (r.u8()) c.disc = amp::Discriminator::load(r);
  c.action_spec = load_action_spec(r);
  c.iteration = r.i64();
  c.env_steps = r.i64();
  return c;
}

}  // namespace jetleg::checkpoint
