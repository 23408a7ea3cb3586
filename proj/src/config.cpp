#include "jetleg/config.hpp"

#include <filesystem>
#include <fstream>

namespace jetleg::config {

namespace {

Eigen::Vector2d vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("expected [x, z] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

Eigen::Vector4d vec4(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ConfigError("expected 4 joint values");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
          j[3].get<double>()};
}

json arr(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }
json arr(const Eigen::Vector4d& v) {
  return json::array({v(0), v(1), v(2), v(3)});
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json to_json(const dynamics::RobotModel& m) {
  json j;
  j["mass"] = m.mass;
  j["inertia"] = m.inertia;
  j["l1"] = m.l1;
  j["l2"] = m.l2;
  j["hip_offsets"] = json::array({arr(m.hip_offset[0]), arr(m.hip_offset[1])});
  j["jet_offsets"] = json::array({arr(m.jet_offset[0]), arr(m.jet_offset[1])});
  j["t_max"] = m.t_max;
  j["joint_lower"] = arr(m.joint_lower);
  j["joint_upper"] = arr(m.joint_upper);
  j["kp"] = arr(m.kp);
  j["kd"] = arr(m.kd);
  j["torque_limit"] = m.torque_limit;
  j["contact"] = {{"kn", m.contact_kn},
                  {"cn", m.contact_cn},
                  {"ct", m.contact_ct},
                  {"mu", m.friction_mu}};
  j["joint_inertia"] = m.joint_inertia;
  j["joint_damping"] = m.joint_damping;
  j["gravity"] = m.gravity;
  return j;
}

void from_json_into(const json& j, dynamics::RobotModel& m) {
  get_if(j, "mass", m.mass);
  get_if(j, "inertia", m.inertia);
  get_if(j, "l1", m.l1);
  get_if(j, "l2", m.l2);
  if (j.contains("hip_offsets")) {
    m.hip_offset[0] = vec2(j.at("hip_offsets").at(0));
    m.hip_offset[1] = vec2(j.at("hip_offsets").at(1));
  }
  if (j.contains("jet_offsets")) {
    m.jet_offset[0] = vec2(j.at("jet_offsets").at(0));
    m.jet_offset[1] = vec2(j.at("jet_offsets").at(1));
  }
  get_if(j, "t_max", m.t_max);
  if (j.contains("joint_lower")) m.joint_lower = vec4(j.at("joint_lower"));
  if (j.contains("joint_upper")) m.joint_upper = vec4(j.at("joint_upper"));
  if (j.contains("kp")) m.kp = vec4(j.at("kp"));
  if (j.contains("kd")) m.kd = vec4(j.at("kd"));
  get_if(j, "torque_limit", m.torque_limit);
  if (j.contains("contact")) {
    const json& c = j.at("contact");
    get_if(c, "kn", m.contact_kn);
    get_if(c, "cn", m.contact_cn);
    get_if(c, "ct", m.contact_ct);
    get_if(c, "mu", m.friction_mu);
  }
  get_if(j, "joint_inertia", m.joint_inertia);
  get_if(j, "joint_damping", m.joint_damping);
  get_if(j, "gravity", m.gravity);
}

json to_json(const terrain::TerrainSpec& t) {
  json j;
  j["kind"] = terrain::kind_to_string(t.kind);
  j["origin"] = t.origin;
  j["length"] = t.length;
  j["spacing"] = t.spacing;
  j["gap_width"] = t.gap_width;
  j["gap_pitch"] = t.gap_pitch;
  j["gap_start"] = t.gap_start;
  j["pit_depth"] = t.pit_depth;
  j["stone_width"] = t.stone_width;
  j["stone_pitch"] = t.stone_pitch;
  j["amplitude"] = t.amplitude;
  j["correlation"] = t.correlation;
  j["seed"] = t.seed;
  return j;
}

void from_json_into(const json& j, terrain::TerrainSpec& t) {
  if (j.contains("kind")) t.kind = terrain::kind_from_string(j.at("kind"));
  get_if(j, "origin", t.origin);
  get_if(j, "length", t.length);
  get_if(j, "spacing", t.spacing);
  get_if(j, "gap_width", t.gap_width);
  get_if(j, "gap_pitch", t.gap_pitch);
  get_if(j, "gap_start", t.gap_start);
  get_if(j, "pit_depth", t.pit_depth);
  get_if(j, "stone_width", t.stone_width);
  get_if(j, "stone_pitch", t.stone_pitch);
  get_if(j, "amplitude", t.amplitude);
  get_if(j, "correlation", t.correlation);
  get_if(j, "seed", t.seed);
}

json to_json(const jetdyn::JetParams& p) {
  json j;
  std::vector<double> coeffs(p.tss_coeffs.data(),
                             p.tss_coeffs.data() + p.tss_coeffs.size());
  j["tss_coeffs"] = coeffs;
  j["tau0"] = p.tau0;
  j["tau1"] = p.tau1;
  j["u_min"] = p.u_min;
  j["t_max"] = p.t_max;
  return j;
}

void from_json_into(const json& j, jetdyn::JetParams& p) {
  if (j.contains("tss_coeffs")) {
    const auto coeffs = j.at("tss_coeffs").get<std::vector<double>>();
    p.tss_coeffs =
        Eigen::Map<const Eigen::VectorXd>(coeffs.data(), coeffs.size());
  }
  get_if(j, "tau0", p.tau0);
  get_if(j, "tau1", p.tau1);
  get_if(j, "u_min", p.u_min);
  get_if(j, "t_max", p.t_max);
}

namespace {

json task_to_json(const envtask::TaskConfig& t) {
  json j;
  j["schedule"] = envtask::schedule_to_string(t.schedule);
  j["v_d"] = t.v_d;
  j["hit_radius"] = t.hit_radius;
  j["spawn_min"] = t.spawn_min;
  j["spawn_max"] = t.spawn_max;
  j["air_alt_min"] = t.air_alt_min;
  j["air_alt_max"] = t.air_alt_max;
  j["stance_height"] = t.stance_height;
  return j;
}

void task_from_json(const json& j, envtask::TaskConfig& t) {
  if (j.contains("schedule"))
    t.schedule = envtask::schedule_from_string(j.at("schedule"));
  get_if(j, "v_d", t.v_d);
  get_if(j, "hit_radius", t.hit_radius);
  get_if(j, "spawn_min", t.spawn_min);
  get_if(j, "spawn_max", t.spawn_max);
  get_if(j, "air_alt_min", t.air_alt_min);
  get_if(j, "air_alt_max", t.air_alt_max);
  get_if(j, "stance_height", t.stance_height);
}

json rewards_to_json(const envtask::RewardWeights& w) {
  json j;
  j["w_c"] = w.w_c;
  j["w_v"] = w.w_v;
  j["w_f"] = w.w_f;
  j["w_t"] = w.w_t;
  j["c1"] = w.c1;
  j["c2"] = w.c2;
  j["w_goal"] = w.w_goal;
  j["w_style"] = w.w_style;
  j["facing_positive"] = w.facing_positive;
  return j;
}

void rewards_from_json(const json& j, envtask::RewardWeights& w) {
  get_if(j, "w_c", w.w_c);
  get_if(j, "w_v", w.w_v);
  get_if(j, "w_f", w.w_f);
  get_if(j, "w_t", w.w_t);
  get_if(j, "c1", w.c1);
  get_if(j, "c2", w.c2);
  get_if(j, "w_goal", w.w_goal);
  get_if(j, "w_style", w.w_style);
  get_if(j, "facing_positive", w.facing_positive);
}

json env_to_json(const envtask::EnvConfig& e) {
  json j;
  j["robot"] = to_json(e.robot);
  j["terrain"] = to_json(e.terrain);
  j["task"] = task_to_json(e.task);
  j["rewards"] = rewards_to_json(e.rewards);
  j["heightmap_cells"] = e.heightmap_cells;
  j["heightmap_cell"] = e.heightmap_cell;
  j["max_steps"] = e.max_steps;
  j["p_rsi"] = e.p_rsi;
  j["substeps"] = e.substeps;
  j["control_hz"] = e.control_hz;
  j["min_clearance"] = e.min_clearance;
  j["jet_mode"] = envtask::jet_mode_to_string(e.jet_mode);
  j["jet_rate_limit"] = e.jet_rate_limit;
  return j;
}

void env_from_json(const json& j, envtask::EnvConfig& e) {
  if (j.contains("robot")) {
    const json& r = j.at("robot");
    if (r.is_string()) {
      from_json_into(load_json_file(r.get<std::string>()), e.robot);
    } else {
      from_json_into(r, e.robot);
    }
  }
  if (j.contains("terrain")) from_json_into(j.at("terrain"), e.terrain);
  if (j.contains("task")) task_from_json(j.at("task"), e.task);
  if (j.contains("rewards")) rewards_from_json(j.at("rewards"), e.rewards);
  get_if(j, "heightmap_cells", e.heightmap_cells);
  get_if(j, "heightmap_cell", e.heightmap_cell);
  get_if(j, "max_steps", e.max_steps);
  get_if(j, "p_rsi", e.p_rsi);
  get_if(j, "substeps", e.substeps);
  get_if(j, "control_hz", e.control_hz);
  get_if(j, "min_clearance", e.min_clearance);
  if (j.contains("jet_mode"))
    e.jet_mode = envtask::jet_mode_from_string(j.at("jet_mode"));
  get_if(j, "jet_rate_limit", e.jet_rate_limit);
}

json ppo_to_json(const PpoConfig& p) {
  json j;
  j["gamma"] = p.gamma;
  j["lambda"] = p.lam;
  j["lr"] = p.lr;
  j["clip"] = p.clip;
  j["entropy_coef"] = p.entropy_coef;
  j["value_coef"] = p.value_coef;
  j["kl_threshold"] = p.kl_threshold;
  j["actors"] = p.actors;
  j["horizon"] = p.horizon;
  j["minibatch"] = p.minibatch;
  j["epochs"] = p.epochs;
  j["max_env_steps"] = p.max_env_steps;
  j["policy_hidden"] = p.policy_hidden;
  j["value_hidden"] = p.value_hidden;
  j["log_std_init"] = p.log_std_init;
  j["log_std_floor"] = p.log_std_floor;
  j["workers"] = p.workers;
  return j;
}

void ppo_from_json(const json& j, PpoConfig& p) {
  get_if(j, "gamma", p.gamma);
  get_if(j, "lambda", p.lam);
  get_if(j, "lr", p.lr);
  get_if(j, "clip", p.clip);
  get_if(j, "entropy_coef", p.entropy_coef);
  get_if(j, "value_coef", p.value_coef);
  get_if(j, "kl_threshold", p.kl_threshold);
  get_if(j, "actors", p.actors);
  get_if(j, "horizon", p.horizon);
  get_if(j, "minibatch", p.minibatch);
  get_if(j, "epochs", p.epochs);
  get_if(j, "max_env_steps", p.max_env_steps);
  get_if(j, "policy_hidden", p.policy_hidden);
  get_if(j, "value_hidden", p.value_hidden);
  get_if(j, "log_std_init", p.log_std_init);
  get_if(j, "log_std_floor", p.log_std_floor);
  get_if(j, "workers", p.workers);
}

json amp_to_json(const AmpConfig& a) {
  json j;
  j["hidden"] = a.hidden;
  j["w_gp"] = a.w_gp;
  j["lr"] = a.lr;
  j["buffer_capacity"] = a.buffer_capacity;
  j["batch"] = a.batch;
  j["updates_per_iter"] = a.updates_per_iter;
  return j;
}

void amp_from_json(const json& j, AmpConfig& a) {
  get_if(j, "hidden", a.hidden);
  get_if(j, "w_gp", a.w_gp);
  get_if(j, "lr", a.lr);
  get_if(j, "buffer_capacity", a.buffer_capacity);
  get_if(j, "batch", a.batch);
  get_if(j, "updates_per_iter", a.updates_per_iter);
}

}  // namespace

json to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["env"] = env_to_json(c.env);
  j["ppo"] = ppo_to_json(c.ppo);
  j["amp"] = amp_to_json(c.amp);
  j["walk_priors"] = c.walk_priors;
  j["fly_priors"] = c.fly_priors;
  j["jet_params_file"] = c.jet_params_file;
  j["checkpoint_every"] = c.checkpoint_every;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  get_if(j, "seed", c.seed);
  get_if(j, "out_dir", c.out_dir);
  if (j.contains("env")) env_from_json(j.at("env"), c.env);
  if (j.contains("ppo")) ppo_from_json(j.at("ppo"), c.ppo);
  if (j.contains("amp")) amp_from_json(j.at("amp"), c.amp);
  get_if(j, "walk_priors", c.walk_priors);
  get_if(j, "fly_priors", c.fly_priors);
  get_if(j, "jet_params_file", c.jet_params_file);
  get_if(j, "checkpoint_every", c.checkpoint_every);
  return c;
}

void RunConfig::validate() const {
  const bool style_on = env.rewards.w_style > 0.0;
  const bool any_prior = !walk_priors.empty() || !fly_priors.empty();
  if (style_on && !any_prior)
    throw ConfigError(
        "rewards.w_style > 0 requires walk_priors and/or fly_priors");
  for (const std::string& p : {walk_priors, fly_priors})
    if (!p.empty() && !std::filesystem::exists(p))
      throw ConfigError("priors file does not exist: " + p);
  if (!jet_params_file.empty() && !std::filesystem::exists(jet_params_file))
    throw ConfigError("jet_params_file does not exist: " + jet_params_file);
  if (ppo.actors < 1 || ppo.horizon < 1)
    throw ConfigError("ppo.actors and ppo.horizon must be >= 1");
  if (ppo.minibatch < 1 ||
      ppo.minibatch > ppo.actors * ppo.horizon)
    throw ConfigError("ppo.minibatch must be in [1, actors*horizon]");
  if (ppo.gamma < 0.0 || ppo.gamma >= 1.0 || ppo.lam < 0.0 || ppo.lam >= 1.0)
    throw ConfigError("ppo.gamma and ppo.lambda must lie in [0, 1)");
  if (ppo.clip <= 0.0) throw ConfigError("ppo.clip must be > 0");
  env.robot.validate();
}

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like dotted.path=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  json* node = &root;
  size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("empty key in override path: " + path);
    if (dot == std::string::npos) {
      json parsed = json::parse(value, nullptr, false);
      (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("malformed JSON in " + path);
  return j;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides) {
  json j = load_json_file(path);
  for (const auto& o : overrides) apply_override(j, o);
  RunConfig c = run_config_from_json(j);
  c.validate();
  return c;
}

}  // namespace jetleg::config
