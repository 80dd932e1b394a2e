// Command-line entry point: train / eval / sample / latency / heatmap.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dac/checkpoint.hpp"
#include "dac/config.hpp"
#include "dac/curriculum.hpp"
#include "dac/eval.hpp"

namespace fs = std::filesystem;
using namespace dac;

namespace {

RunConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return load_run_config(path);
}

std::uint64_t effective_seed(const RunConfig& cfg, std::uint64_t cli_seed,
                             bool cli_seed_set) {
  if (const char* env = std::getenv("DAC_MASTER_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return cli_seed_set ? cli_seed : cfg.seed;
}

Trainer make_trainer(const RunConfig& cfg, std::uint64_t seed) {
  Rng init_rng = Rng::stream(seed, 0x696e6974ULL);
  return Trainer(cfg.train, cfg.denoiser, cfg.critic, init_rng);
}

void ensure_run_dir(const fs::path& dir, const RunConfig& cfg) {
  fs::create_directories(dir);
  save_run_config((dir / "config.json").string(), cfg);
}

int cmd_train(const std::string& config_path, std::uint64_t seed, bool seed_set,
              int episodes, bool no_curriculum, const std::string& ablation,
              const std::string& out_dir) {
  if (ablation == "no-diffusion") {
    std::cerr << "ablation no-diffusion is not implemented: it replaces the "
                 "policy family (Gaussian head) rather than configuring this "
                 "one\n";
    return 2;
  }
  RunConfig cfg = load_config_or_default(config_path);
  const std::uint64_t s = effective_seed(cfg, seed, seed_set);
  cfg.seed = s;
  if (episodes > 0) cfg.curriculum.episode_budget = episodes;
  if (no_curriculum) {
    cfg.curriculum.fixed_stage = cfg.curriculum.n_stages;
    cfg.train.tau_teacher = cfg.curriculum.tau_teacher_end;
  }

  ensure_run_dir(out_dir, cfg);
  Trainer trainer = make_trainer(cfg, s);
  if (ablation == "no-doubleq") trainer.single_critic_ablation = true;
  if (ablation == "no-value-guidance") trainer.uniform_teacher_ablation = true;

  std::ofstream log(fs::path(out_dir) / "episodes.csv");
  log << episode_record_csv_header() << '\n';
  int last_stage = 1;
  const TrainingResult res = training_loop(
      trainer, cfg.env, cfg.curriculum, s, [&](const EpisodeRecord& r) {
        log << episode_record_csv_row(r) << '\n';
        last_stage = r.stage;
        if (r.episode % 500 == 0) {
          CheckpointMeta meta{r.stage, r.episode, s};
          save_checkpoint((fs::path(out_dir) / "checkpoint.json").string(),
                          trainer, meta);
        }
      });

  CheckpointMeta meta{res.final_stage, res.episodes_run, s};
  save_checkpoint((fs::path(out_dir) / "checkpoint.json").string(), trainer, meta);
  std::cout << "episodes=" << res.episodes_run << " final_stage=" << res.final_stage
            << " completed=" << (res.completed ? 1 : 0)
            << " rolling_rate=" << res.final_rolling_rate << '\n';
  (void)last_stage;
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint,
             const std::string& density_name_str, int episodes,
             std::uint64_t seed, bool seed_set, const std::string& out_dir,
             int threads) {
  RunConfig cfg = load_config_or_default(config_path);
  const std::uint64_t s = effective_seed(cfg, seed, seed_set);
  cfg.seed = s;

  Trainer trainer = make_trainer(cfg, s);
  load_checkpoint(checkpoint, trainer);

  Density density = Density::Medium;
  if (density_name_str == "low") density = Density::Low;
  else if (density_name_str == "medium") density = Density::Medium;
  else if (density_name_str == "high") density = Density::High;
  else {
    std::cerr << "unknown density '" << density_name_str << "'\n";
    return 2;
  }

  const DenoiserFn dfn = [&](const Vec& obs, const LogitVector& y, int t) {
    return trainer.denoiser.forward(obs, y, t);
  };
  const MetricsReport m = run_eval(diffusion_policy_fn(dfn, trainer.schedule),
                                   cfg.env, density, episodes, s, threads);

  ensure_run_dir(out_dir, cfg);
  std::ofstream os(fs::path(out_dir) / "metrics.csv");
  os << metrics_csv_header() << '\n'
     << metrics_csv_row(density_name(density), m) << '\n';
  std::cout << metrics_csv_header() << '\n'
            << metrics_csv_row(density_name(density), m) << '\n';
  return 0;
}

int cmd_sample(const std::string& config_path, const std::string& checkpoint,
               const std::string& scenario_path, std::uint64_t seed,
               bool seed_set) {
  RunConfig cfg = load_config_or_default(config_path);
  const std::uint64_t s = effective_seed(cfg, seed, seed_set);

  Trainer trainer = make_trainer(cfg, s);
  if (!checkpoint.empty()) load_checkpoint(checkpoint, trainer);

  const TacticalScenario scenario = load_scenario(scenario_path);
  validate_scenario(scenario, cfg.env.thresholds);
  Environment env(cfg.env);
  const Observation obs = env.reset_from_scenario(scenario);
  const FeasibilityMask mask = feasibility_mask(env.agent().fl, cfg.env.limits);

  Rng rng = Rng::stream(s, 0x73616d31ULL);
  const DenoiserFn dfn = [&](const Vec& o, const LogitVector& y, int t) {
    return trainer.denoiser.forward(o, y, t);
  };
  const PolicySample ps = sample_policy(obs, mask, dfn, trainer.schedule, rng);

  std::cout.precision(17);
  for (int a = 0; a < kNumActions; ++a) {
    const ActionTriple t = decode_action(ActionClass{a});
    std::cout << a << " (" << t.a_psi << ',' << t.a_v << ',' << t.a_h << ") "
              << ps.probs[a] << '\n';
  }
  std::cout << "chosen=" << ps.chosen.index << '\n';
  return 0;
}

int cmd_latency(const std::string& config_path, const std::string& checkpoint,
                int decisions, int steps, std::uint64_t seed, bool seed_set) {
  RunConfig cfg = load_config_or_default(config_path);
  const std::uint64_t s = effective_seed(cfg, seed, seed_set);

  Trainer trainer = make_trainer(cfg, s);
  if (!checkpoint.empty()) load_checkpoint(checkpoint, trainer);
  const NoiseSchedule schedule = NoiseSchedule::linear(steps);

  Environment env(cfg.env);
  const Observation obs = env.reset();
  const FeasibilityMask mask = feasibility_mask(env.agent().fl, cfg.env.limits);
  const DenoiserFn dfn = [&](const Vec& o, const LogitVector& y, int t) {
    return trainer.denoiser.forward(o, y, t);
  };
  const LatencyReport r = measure_latency(diffusion_policy_fn(dfn, schedule),
                                          obs, mask, decisions, s);
  std::cout << "steps=" << steps << " mean_ms=" << r.mean_ms
            << " p95_ms=" << r.p95_ms << '\n';
  return 0;
}

int cmd_heatmap(const std::string& config_path, const std::string& checkpoint,
                const std::string& scenario_path, int samples, int horizon,
                std::uint64_t seed, bool seed_set, const std::string& out_dir) {
  RunConfig cfg = load_config_or_default(config_path);
  const std::uint64_t s = effective_seed(cfg, seed, seed_set);
  cfg.seed = s;

  Trainer trainer = make_trainer(cfg, s);
  if (!checkpoint.empty()) load_checkpoint(checkpoint, trainer);

  const TacticalScenario scenario = load_scenario(scenario_path);
  const DenoiserFn dfn = [&](const Vec& o, const LogitVector& y, int t) {
    return trainer.denoiser.forward(o, y, t);
  };
  const MultimodalResult res =
      multimodal_protocol(diffusion_policy_fn(dfn, trainer.schedule), cfg.env,
                          scenario, samples, horizon, s);

  ensure_run_dir(out_dir, cfg);
  for (int a_h = -1; a_h <= 1; ++a_h) {
    const std::string name =
        a_h < 0 ? "heatmap_-1.csv" : a_h == 0 ? "heatmap_0.csv" : "heatmap_+1.csv";
    std::ofstream os(fs::path(out_dir) / name);
    os << res.grid.layer_csv(a_h);
  }
  std::cout << "samples=" << samples
            << " distinct_first_actions=" << res.distinct_first_actions
            << " successful_samples=" << res.successful_samples
            << " grid_total=" << res.grid.total() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffusion actor-critic for en-route conflict resolution"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, scenario_path, ablation, out_dir = "run";
  std::string density = "medium";
  std::uint64_t seed = 0;
  int episodes = 0, eval_episodes = 100, decisions = 100, steps = 10;
  int samples = 1000, horizon = 1000, threads = 1;
  bool no_curriculum = false;

  auto* train = app.add_subcommand("train", "run the curriculum training loop");
  train->add_option("--config", config_path, "config.json path");
  auto* train_seed = train->add_option("--seed", seed, "master seed");
  train->add_option("--episodes", episodes, "global episode budget override");
  train->add_flag("--no-curriculum", no_curriculum, "pin the final stage from episode 1");
  train->add_option("--ablation", ablation, "no-doubleq | no-value-guidance | no-diffusion")
      ->check(CLI::IsMember({"no-doubleq", "no-value-guidance", "no-diffusion"}));
  train->add_option("--out", out_dir, "run directory");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  ev->add_option("--config", config_path, "config.json path");
  ev->add_option("--checkpoint", checkpoint, "checkpoint path")->required();
  ev->add_option("--density", density, "low | medium | high");
  ev->add_option("--episodes", eval_episodes, "episode count");
  auto* ev_seed = ev->add_option("--seed", seed, "master seed");
  ev->add_option("--threads", threads, "worker threads");
  ev->add_option("--out", out_dir, "run directory");

  auto* sm = app.add_subcommand("sample", "print one decision distribution");
  sm->add_option("--config", config_path, "config.json path");
  sm->add_option("--checkpoint", checkpoint, "checkpoint path");
  sm->add_option("--scenario", scenario_path, "scenario file")->required();
  auto* sm_seed = sm->add_option("--seed", seed, "master seed");

  auto* lat = app.add_subcommand("latency", "measure per-decision latency");
  lat->add_option("--config", config_path, "config.json path");
  lat->add_option("--checkpoint", checkpoint, "checkpoint path");
  lat->add_option("--decisions", decisions, "timed decision count");
  lat->add_option("--steps", steps, "denoising steps");
  auto* lat_seed = lat->add_option("--seed", seed, "master seed");

  auto* hm = app.add_subcommand("heatmap", "two-stage multimodality protocol");
  hm->add_option("--config", config_path, "config.json path");
  hm->add_option("--checkpoint", checkpoint, "checkpoint path");
  hm->add_option("--scenario", scenario_path, "scenario file")->required();
  hm->add_option("--samples", samples, "first-action sample count");
  hm->add_option("--horizon", horizon, "rollout step limit");
  auto* hm_seed = hm->add_option("--seed", seed, "master seed");
  hm->add_option("--out", out_dir, "run directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      return cmd_train(config_path, seed, train_seed->count() > 0, episodes,
                       no_curriculum, ablation, out_dir);
    }
    if (ev->parsed()) {
      return cmd_eval(config_path, checkpoint, density, eval_episodes, seed,
                      ev_seed->count() > 0, out_dir, threads);
    }
    if (sm->parsed()) {
      return cmd_sample(config_path, checkpoint, scenario_path, seed,
                        sm_seed->count() > 0);
    }
    if (lat->parsed()) {
      return cmd_latency(config_path, checkpoint, decisions, steps, seed,
                         lat_seed->count() > 0);
    }
    if (hm->parsed()) {
      return cmd_heatmap(config_path, checkpoint, scenario_path, samples,
                         horizon, seed, hm_seed->count() > 0, out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
