#include "dac/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace dac {

using nlohmann::json;

PolicyFn diffusion_policy_fn(const DenoiserFn& denoiser,
                             const NoiseSchedule& schedule) {
  return [denoiser, schedule](const Observation& obs, const FeasibilityMask& mask,
                              Rng& rng) {
    return sample_policy(obs, mask, denoiser, schedule, rng);
  };
}

std::string metrics_csv_header() {
  return "label,n_episodes,success_rate,los_rate,nmac_rate,timeout_rate,"
         "avg_steps,avg_goal_reward,avg_safe_reward";
}

std::string metrics_csv_row(const std::string& label, const MetricsReport& m) {
  std::ostringstream os;
  os.precision(17);
  os << label << ',' << m.n_episodes << ',' << m.success_rate << ','
     << m.los_rate << ',' << m.nmac_rate << ',' << m.timeout_rate << ','
     << m.avg_steps << ',' << m.avg_goal_reward << ',' << m.avg_safe_reward;
  return os.str();
}

int density_routes(Density d) {
  switch (d) {
    case Density::Low: return 8;
    case Density::Medium: return 12;
    case Density::High: return 16;
  }
  throw std::domain_error("density_routes: bad density");
}

const char* density_name(Density d) {
  switch (d) {
    case Density::Low: return "low";
    case Density::Medium: return "medium";
    case Density::High: return "high";
  }
  return "?";
}

namespace {

struct EpisodeOutcome {
  TerminalReason terminal = TerminalReason::None;
  int steps = 0;
  int los_events = 0;
  double goal_reward = 0.0;
  double safe_reward = 0.0;
};

EpisodeOutcome run_one_episode(const PolicyFn& policy, const EnvConfig& cfg,
                               std::uint64_t master_seed, int episode) {
  EnvConfig ec = cfg;
  ec.rng_seed = master_seed * 0x100000001B3ULL + static_cast<std::uint64_t>(episode);
  Environment env(ec);
  Rng rng = Rng::stream(master_seed, 0x10000ULL + static_cast<std::uint64_t>(episode));

  Observation obs = env.reset();
  EpisodeOutcome out;
  while (!env.done()) {
    const FeasibilityMask mask = feasibility_mask(env.agent().fl, ec.limits);
    const PolicySample ps = policy(obs, mask, rng);
    const Transition tr = env.step(ps.chosen);
    out.goal_reward += tr.reward_goal;
    out.safe_reward += tr.reward_safe;
    obs = tr.next_obs;
  }
  out.terminal = env.terminal_reason();
  out.steps = env.steps();
  out.los_events = env.episode_los_events();
  return out;
}

}  // namespace

MetricsReport run_eval(const PolicyFn& policy, const EnvConfig& base_env,
                       Density density, int n_episodes, std::uint64_t seed,
                       int n_threads) {
  if (n_episodes <= 0) throw std::domain_error("run_eval: n_episodes must be positive");
  EnvConfig cfg = base_env;
  cfg.n_routes = density_routes(density);
  cfg.thresholds.d_los = 10.0;

  std::vector<EpisodeOutcome> outcomes(n_episodes);
  const int workers = std::max(1, n_threads);
  if (workers == 1) {
    for (int i = 0; i < n_episodes; ++i) {
      outcomes[i] = run_one_episode(policy, cfg, seed, i);
    }
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int i = w; i < n_episodes; i += workers) {
          outcomes[i] = run_one_episode(policy, cfg, seed, i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  MetricsReport m;
  m.n_episodes = n_episodes;
  int n_goal = 0, n_nmac = 0, n_timeout = 0, n_los = 0;
  long long goal_steps = 0;
  for (const EpisodeOutcome& o : outcomes) {
    switch (o.terminal) {
      case TerminalReason::Goal: ++n_goal; goal_steps += o.steps; break;
      case TerminalReason::NMAC: ++n_nmac; break;
      case TerminalReason::Timeout: ++n_timeout; break;
      case TerminalReason::None:
        throw std::logic_error("run_eval: episode ended without terminal reason");
    }
    if (o.los_events > 0) ++n_los;
    m.avg_goal_reward += o.goal_reward;
    m.avg_safe_reward += o.safe_reward;
  }
  const double inv_n = 1.0 / n_episodes;
  m.success_rate = n_goal * inv_n;
  m.nmac_rate = n_nmac * inv_n;
  m.timeout_rate = n_timeout * inv_n;
  m.los_rate = n_los * inv_n;
  m.avg_steps = n_goal > 0 ? static_cast<double>(goal_steps) / n_goal : 0.0;
  m.avg_goal_reward *= inv_n;
  m.avg_safe_reward *= inv_n;
  return m;
}

LatencyReport measure_latency(const PolicyFn& policy, const Observation& obs,
                              const FeasibilityMask& mask, int n_decisions,
                              std::uint64_t seed) {
  if (n_decisions <= 0) throw std::domain_error("measure_latency: n_decisions must be positive");
  Rng rng = Rng::stream(seed, 0x6c617431ULL);
  // Warm-up decisions outside the timed region.
  for (int i = 0; i < 5; ++i) (void)policy(obs, mask, rng);

  std::vector<double> ms(n_decisions);
  for (int i = 0; i < n_decisions; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    (void)policy(obs, mask, rng);
    const auto t1 = std::chrono::steady_clock::now();
    ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  LatencyReport r;
  for (double v : ms) r.mean_ms += v;
  r.mean_ms /= n_decisions;
  std::sort(ms.begin(), ms.end());
  const int idx = std::min(n_decisions - 1,
                           static_cast<int>(std::ceil(0.95 * n_decisions)) - 1);
  r.p95_ms = ms[std::max(0, idx)];
  return r;
}

int HeatmapGrid::total() const {
  int s = 0;
  for (const auto& layer : counts)
    for (const auto& row : layer)
      for (int c : row) s += c;
  return s;
}

std::string HeatmapGrid::layer_csv(int a_h) const {
  if (a_h < -1 || a_h > 1) throw std::domain_error("HeatmapGrid: a_h out of range");
  std::ostringstream os;
  for (int p = 0; p < 3; ++p) {
    for (int v = 0; v < 3; ++v) {
      os << counts[a_h + 1][p][v];
      if (v < 2) os << ',';
    }
    os << '\n';
  }
  return os.str();
}

MultimodalResult multimodal_protocol(const PolicyFn& policy,
                                     const EnvConfig& base_env,
                                     const TacticalScenario& scenario,
                                     int n_samples, int rollout_horizon,
                                     std::uint64_t seed) {
  if (n_samples <= 0) throw std::domain_error("multimodal_protocol: n_samples must be positive");
  validate_scenario(scenario, base_env.thresholds);

  Environment env(base_env);
  const Observation frozen_obs = env.reset_from_scenario(scenario);
  const FeasibilityMask mask =
      feasibility_mask(env.agent().fl, base_env.limits);

  // Stage 1: first actions at the frozen state.
  MultimodalResult out;
  out.samples.resize(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    Rng rng = Rng::stream(seed, 0x20000ULL + static_cast<std::uint64_t>(i));
    out.samples[i].action = policy(frozen_obs, mask, rng).chosen.index;
  }

  // Stage 2: validate each distinct first action with a full rollout.
  std::array<int, kNumActions> label{};
  label.fill(-1);
  for (const auto& s : out.samples) {
    const int a = s.action;
    if (label[a] >= 0) continue;
    ++out.distinct_first_actions;

    Environment roll(base_env);
    Observation obs = roll.reset_from_scenario(scenario);
    Rng rng = Rng::stream(seed, 0x30000ULL + static_cast<std::uint64_t>(a));
    Transition tr = roll.step(ActionClass{a});
    obs = tr.next_obs;
    while (!roll.done() && roll.steps() < rollout_horizon) {
      const FeasibilityMask m = feasibility_mask(roll.agent().fl, base_env.limits);
      const PolicySample ps = policy(obs, m, rng);
      obs = roll.step(ps.chosen).next_obs;
    }
    const bool ok = roll.terminal_reason() == TerminalReason::Goal &&
                    roll.episode_los_events() == 0 &&
                    roll.episode_nmac_events() == 0;
    label[a] = ok ? 1 : 0;
  }

  for (auto& s : out.samples) {
    s.success = label[s.action];
    if (!s.success) continue;
    ++out.successful_samples;
    const ActionTriple t = decode_action(ActionClass{s.action});
    ++out.grid.counts[t.a_h + 1][t.a_psi + 1][t.a_v + 1];
  }
  return out;
}

std::string scenario_to_json(const TacticalScenario& s) {
  json j;
  j["label"] = s.label;
  j["agent"] = {{"x", s.agent.x}, {"y", s.agent.y},
                {"heading_deg", rad_to_deg(s.agent.psi)},
                {"speed", s.agent.v}, {"fl", s.agent.fl}};
  j["goal"] = {{"x", s.goal_x}, {"y", s.goal_y}};
  j["intruders"] = json::array();
  for (const ScenarioIntruder& in : s.intruders) {
    j["intruders"].push_back({{"x", in.x}, {"y", in.y},
                              {"heading_deg", in.heading_deg},
                              {"speed", in.speed}, {"fl", in.fl}});
  }
  return j.dump(2);
}

TacticalScenario scenario_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  TacticalScenario s;
  s.label = j.at("label").get<std::string>();
  const json& a = j.at("agent");
  s.agent.x = a.at("x").get<double>();
  s.agent.y = a.at("y").get<double>();
  s.agent.psi = deg_to_rad(a.at("heading_deg").get<double>());
  s.agent.v = a.at("speed").get<double>();
  s.agent.fl = a.at("fl").get<int>();
  s.agent.sync_velocity();
  s.goal_x = j.at("goal").at("x").get<double>();
  s.goal_y = j.at("goal").at("y").get<double>();
  for (const json& ij : j.at("intruders")) {
    ScenarioIntruder in;
    in.x = ij.at("x").get<double>();
    in.y = ij.at("y").get<double>();
    in.heading_deg = ij.at("heading_deg").get<double>();
    in.speed = ij.at("speed").get<double>();
    in.fl = ij.at("fl").get<int>();
    s.intruders.push_back(in);
  }
  return s;
}

TacticalScenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_scenario: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return scenario_from_json_text(buf.str());
}

void validate_scenario(const TacticalScenario& s,
                       const SeparationThresholds& thresholds,
                       double min_s, double max_s) {
  if (s.agent.fl != 1) {
    throw std::runtime_error("scenario: agent must start at the middle flight level");
  }
  // Straight-line projection at 1 s resolution; the first LoS must fall in
  // [min_s, max_s].
  AircraftState agent = s.agent;
  agent.sync_velocity();
  std::vector<AircraftState> intruders;
  for (const ScenarioIntruder& in : s.intruders) {
    AircraftState st;
    st.x = in.x;
    st.y = in.y;
    st.psi = deg_to_rad(in.heading_deg);
    st.v = in.speed;
    st.fl = in.fl;
    st.sync_velocity();
    intruders.push_back(st);
  }
  const double horizon = max_s + 60.0;
  for (double t = 0.0; t <= horizon; t += 1.0) {
    for (const AircraftState& base : intruders) {
      AircraftState a = agent;
      a.x += a.vx * t / 3600.0;
      a.y += a.vy * t / 3600.0;
      AircraftState b = base;
      b.x += b.vx * t / 3600.0;
      b.y += b.vy * t / 3600.0;
      if (separation_status(a, b, thresholds) != Separation::Clear) {
        if (t < min_s) {
          throw std::runtime_error("scenario: conflict occurs before the imminence window");
        }
        if (t > max_s) {
          throw std::runtime_error("scenario: conflict occurs after the imminence window");
        }
        return;
      }
    }
  }
  throw std::runtime_error("scenario: no conflict inside the imminence window");
}

}  // namespace dac
