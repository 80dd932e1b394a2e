#include "dac/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dac {

using nlohmann::json;

namespace {

// Pulls a field if present; anything left unconsumed in `j` is an error.
template <typename T>
void take(json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    out = it->get<T>();
    j.erase(it);
  }
}

void expect_empty(const json& j, const std::string& section) {
  if (!j.empty()) {
    throw std::runtime_error("config: unknown field '" + j.begin().key() +
                             "' in section " + section);
  }
}

json env_to_json(const EnvConfig& e) {
  return json{{"width", e.width},
              {"height", e.height},
              {"n_routes", e.n_routes},
              {"max_intruders_per_route", e.max_intruders_per_route},
              {"cruise_speed", e.cruise_speed},
              {"goal_margin", e.goal_margin},
              {"initial_separation", e.initial_separation},
              {"goal_capture_radius", e.goal_capture_radius},
              {"max_steps", e.max_steps},
              {"d_los", e.thresholds.d_los},
              {"d_nmac", e.thresholds.d_nmac},
              {"alpha_goal", e.reward_weights.alpha_goal},
              {"alpha_1", e.reward_weights.alpha_1},
              {"alpha_2", e.reward_weights.alpha_2},
              {"alpha_step", e.reward_weights.alpha_step},
              {"los_penalty", e.reward_weights.los_penalty},
              {"nmac_penalty", e.reward_weights.nmac_penalty},
              {"timeout_penalty", e.reward_weights.timeout_penalty},
              {"dpsi_step_deg", e.limits.dpsi_step_deg},
              {"dv_step_kt", e.limits.dv_step_kt},
              {"v_min", e.limits.v_min},
              {"v_max", e.limits.v_max},
              {"dt_seconds", e.units.dt_seconds},
              {"normalize_deviation", e.normalize_deviation}};
}

void env_from_json(json j, EnvConfig& e) {
  take(j, "width", e.width);
  take(j, "height", e.height);
  take(j, "n_routes", e.n_routes);
  take(j, "max_intruders_per_route", e.max_intruders_per_route);
  take(j, "cruise_speed", e.cruise_speed);
  take(j, "goal_margin", e.goal_margin);
  take(j, "initial_separation", e.initial_separation);
  take(j, "goal_capture_radius", e.goal_capture_radius);
  take(j, "max_steps", e.max_steps);
  take(j, "d_los", e.thresholds.d_los);
  take(j, "d_nmac", e.thresholds.d_nmac);
  take(j, "alpha_goal", e.reward_weights.alpha_goal);
  take(j, "alpha_1", e.reward_weights.alpha_1);
  take(j, "alpha_2", e.reward_weights.alpha_2);
  take(j, "alpha_step", e.reward_weights.alpha_step);
  take(j, "los_penalty", e.reward_weights.los_penalty);
  take(j, "nmac_penalty", e.reward_weights.nmac_penalty);
  take(j, "timeout_penalty", e.reward_weights.timeout_penalty);
  take(j, "dpsi_step_deg", e.limits.dpsi_step_deg);
  take(j, "dv_step_kt", e.limits.dv_step_kt);
  take(j, "v_min", e.limits.v_min);
  take(j, "v_max", e.limits.v_max);
  take(j, "dt_seconds", e.units.dt_seconds);
  take(j, "normalize_deviation", e.normalize_deviation);
  expect_empty(j, "env");
}

json train_to_json(const TrainConfig& t) {
  return json{{"batch_size", t.batch_size},
              {"update_period", t.update_period},
              {"gradient_steps_per_update", t.gradient_steps_per_update},
              {"gamma", t.gamma},
              {"tau_teacher", t.tau_teacher},
              {"lambda_ce", t.lambda_ce},
              {"eps_sm", t.eps_sm},
              {"lr_policy", t.lr_policy},
              {"lr_critic", t.lr_critic},
              {"polyak_tau", t.polyak_tau},
              {"grad_clip_norm", t.grad_clip_norm},
              {"warmup_transitions", t.warmup_transitions},
              {"replay_capacity", t.replay_capacity}};
}

void train_from_json(json j, TrainConfig& t) {
  take(j, "batch_size", t.batch_size);
  take(j, "update_period", t.update_period);
  take(j, "gradient_steps_per_update", t.gradient_steps_per_update);
  take(j, "gamma", t.gamma);
  take(j, "tau_teacher", t.tau_teacher);
  take(j, "lambda_ce", t.lambda_ce);
  take(j, "eps_sm", t.eps_sm);
  take(j, "lr_policy", t.lr_policy);
  take(j, "lr_critic", t.lr_critic);
  take(j, "polyak_tau", t.polyak_tau);
  take(j, "grad_clip_norm", t.grad_clip_norm);
  take(j, "warmup_transitions", t.warmup_transitions);
  take(j, "replay_capacity", t.replay_capacity);
  expect_empty(j, "train");
}

json curriculum_to_json(const CurriculumConfig& c) {
  return json{{"n_stages", c.n_stages},
              {"window", c.window},
              {"promote_threshold", c.promote_threshold},
              {"episode_budget", c.episode_budget},
              {"tau_teacher_start", c.tau_teacher_start},
              {"tau_teacher_end", c.tau_teacher_end},
              {"fixed_stage", c.fixed_stage},
              {"stop_stage", c.stop_stage},
              {"stop_rate", c.stop_rate}};
}

void curriculum_from_json(json j, CurriculumConfig& c) {
  take(j, "n_stages", c.n_stages);
  take(j, "window", c.window);
  take(j, "promote_threshold", c.promote_threshold);
  take(j, "episode_budget", c.episode_budget);
  take(j, "tau_teacher_start", c.tau_teacher_start);
  take(j, "tau_teacher_end", c.tau_teacher_end);
  take(j, "fixed_stage", c.fixed_stage);
  take(j, "stop_stage", c.stop_stage);
  take(j, "stop_rate", c.stop_rate);
  expect_empty(j, "curriculum");
}

json denoiser_to_json(const DenoiserConfig& d) {
  return json{{"obs_dim", d.obs_dim},
              {"hidden", d.hidden},
              {"time_sin_dim", d.time_sin_dim},
              {"n_actions", d.n_actions},
              {"attn_groups", d.attn_groups},
              {"attn_heads", d.attn_heads},
              {"head_init_scale", d.head_init_scale}};
}

void denoiser_from_json(json j, DenoiserConfig& d) {
  take(j, "obs_dim", d.obs_dim);
  take(j, "hidden", d.hidden);
  take(j, "time_sin_dim", d.time_sin_dim);
  take(j, "n_actions", d.n_actions);
  take(j, "attn_groups", d.attn_groups);
  take(j, "attn_heads", d.attn_heads);
  take(j, "head_init_scale", d.head_init_scale);
  expect_empty(j, "denoiser");
}

json critic_to_json(const QNetworkConfig& q) {
  return json{{"obs_dim", q.obs_dim},
              {"hidden", q.hidden},
              {"n_actions", q.n_actions}};
}

void critic_from_json(json j, QNetworkConfig& q) {
  take(j, "obs_dim", q.obs_dim);
  take(j, "hidden", q.hidden);
  take(j, "n_actions", q.n_actions);
  expect_empty(j, "critic");
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["env"] = env_to_json(cfg.env);
  j["train"] = train_to_json(cfg.train);
  j["curriculum"] = curriculum_to_json(cfg.curriculum);
  j["denoiser"] = denoiser_to_json(cfg.denoiser);
  j["critic"] = critic_to_json(cfg.critic);
  return j.dump(2);
}

RunConfig run_config_from_json_text(const std::string& text) {
  json j = json::parse(text);
  RunConfig cfg;
  take(j, "seed", cfg.seed);
  if (auto it = j.find("env"); it != j.end()) {
    env_from_json(*it, cfg.env);
    j.erase(it);
  }
  if (auto it = j.find("train"); it != j.end()) {
    train_from_json(*it, cfg.train);
    j.erase(it);
  }
  if (auto it = j.find("curriculum"); it != j.end()) {
    curriculum_from_json(*it, cfg.curriculum);
    j.erase(it);
  }
  if (auto it = j.find("denoiser"); it != j.end()) {
    denoiser_from_json(*it, cfg.denoiser);
    j.erase(it);
  }
  if (auto it = j.find("critic"); it != j.end()) {
    critic_from_json(*it, cfg.critic);
    j.erase(it);
  }
  expect_empty(j, "root");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return run_config_from_json_text(buf.str());
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("config: cannot open " + path + " for writing");
  os << run_config_to_json(cfg) << '\n';
}

}  // namespace dac
