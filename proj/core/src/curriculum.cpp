#include "dac/curriculum.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dac {

CurriculumStage stage_params(int k) {
  if (k < 1 || k > 12) throw std::domain_error("stage_params: k out of [1,12]");
  CurriculumStage s;
  s.k = k;
  s.n_routes = k;
  s.n_intruders_nominal = 3 * k;
  s.d_los = 4.5 + 0.5 * (k - 1);
  return s;
}

bool GateWindow::record(int success) {
  if (static_cast<int>(flags_.size()) < window_) {
    flags_.push_back(success);
  } else {
    flags_[cursor_] = success;
    cursor_ = (cursor_ + 1) % window_;
  }
  ++observed_;
  return full() && rolling_rate() >= threshold_;
}

void GateWindow::reset() {
  flags_.clear();
  cursor_ = 0;
  observed_ = 0;
}

double GateWindow::rolling_rate() const {
  if (flags_.empty()) return 0.0;
  double s = 0.0;
  for (int f : flags_) s += f;
  return s / static_cast<double>(flags_.size());
}

double stage_teacher_temperature(int k, const CurriculumConfig& cfg) {
  if (cfg.n_stages <= 1) return cfg.tau_teacher_end;
  const double f = static_cast<double>(k - 1) / static_cast<double>(cfg.n_stages - 1);
  return cfg.tau_teacher_start + f * (cfg.tau_teacher_end - cfg.tau_teacher_start);
}

std::string episode_record_csv_header() {
  return "episode,stage,success,rolling_rate,terminal,steps,return,"
         "los_count,nmac_count,td_loss,policy_loss";
}

std::string episode_record_csv_row(const EpisodeRecord& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.episode << ',' << r.stage << ',' << r.success << ',' << r.rolling_rate
     << ',' << terminal_reason_name(r.terminal) << ',' << r.steps << ','
     << r.episode_return << ',' << r.los_count << ',' << r.nmac_count << ','
     << r.td_loss << ',' << r.policy_loss;
  return os.str();
}

TrainingResult training_loop(Trainer& trainer, const EnvConfig& base_env,
                             const CurriculumConfig& cfg, std::uint64_t seed,
                             const EpisodeCallback& on_episode) {
  TrainingResult result;
  int k = cfg.fixed_stage > 0 ? cfg.fixed_stage : 1;
  const int last_stage = cfg.fixed_stage > 0 ? cfg.fixed_stage : cfg.n_stages;

  GateWindow gate(cfg.window, cfg.promote_threshold);
  Rng train_rng = Rng::stream(seed, 0x7261696eULL);
  Rng sample_rng = Rng::stream(seed, 0x73616d70ULL);

  auto make_env = [&](int stage) {
    const CurriculumStage sp = stage_params(stage);
    EnvConfig ec = base_env;
    ec.n_routes = sp.n_routes;
    ec.thresholds.d_los = sp.d_los;
    ec.rng_seed = seed * 0x100000001B3ULL + static_cast<std::uint64_t>(stage);
    return Environment(ec);
  };

  Environment env = make_env(k);
  trainer.config.tau_teacher = stage_teacher_temperature(k, cfg);

  const DenoiserFn denoiser_fn = [&](const Vec& obs, const LogitVector& y, int t) {
    return trainer.denoiser.forward(obs, y, t);
  };

  int env_steps = 0;
  for (int episode = 1; episode <= cfg.episode_budget; ++episode) {
    Observation obs = env.reset();
    double episode_return = 0.0;
    TrainScalars last_scalars;
    while (!env.done()) {
      const FeasibilityMask mask =
          feasibility_mask(env.agent().fl, env.config().limits);
      const PolicySample ps = sample_policy(obs, mask, denoiser_fn,
                                            trainer.schedule, sample_rng);
      const Transition tr = env.step(ps.chosen);
      trainer.buffer.push(tr);
      episode_return += tr.reward;
      obs = tr.next_obs;
      if (++env_steps % trainer.config.update_period == 0) {
        for (int g = 0; g < trainer.config.gradient_steps_per_update; ++g) {
          const TrainScalars s =
              trainer.train_iteration(train_rng, env.config().limits);
          if (!s.skipped) last_scalars = s;
        }
      }
    }

    const int success = env.terminal_reason() == TerminalReason::Goal &&
                                env.episode_los_events() == 0 &&
                                env.episode_nmac_events() == 0
                            ? 1
                            : 0;
    const bool promote = gate.record(success);

    EpisodeRecord rec;
    rec.episode = episode;
    rec.stage = k;
    rec.success = success;
    rec.rolling_rate = gate.rolling_rate();
    rec.terminal = env.terminal_reason();
    rec.steps = env.steps();
    rec.episode_return = episode_return;
    rec.los_count = env.episode_los_events();
    rec.nmac_count = env.episode_nmac_events();
    rec.td_loss = last_scalars.td_loss;
    rec.policy_loss = last_scalars.policy_loss;
    if (on_episode) on_episode(rec);

    result.episodes_run = episode;
    result.final_stage = k;
    result.final_rolling_rate = gate.rolling_rate();

    if (cfg.stop_stage > 0 && k == cfg.stop_stage && gate.full() &&
        gate.rolling_rate() >= cfg.stop_rate) {
      result.stopped_early = true;
      return result;
    }

    if (promote && cfg.fixed_stage == 0) {
      if (k == last_stage) {
        result.completed = true;
        return result;
      }
      ++k;
      gate.reset();
      env = make_env(k);
      trainer.config.tau_teacher = stage_teacher_temperature(k, cfg);
    } else if (promote && cfg.fixed_stage > 0 && k == last_stage) {
      result.completed = true;
      return result;
    }
  }
  return result;
}

}  // namespace dac
