#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dac/trainer.hpp"

namespace dac {

struct CurriculumStage {
  int k = 1;
  int n_routes = 1;
  int n_intruders_nominal = 3;
  double d_los = 4.5;  // km
  int window = 100;
  double promote_threshold = 0.90;
};

// R(k) = k, A(k) = 3k, d_los(k) = 4.5 + 0.5 (k - 1); d_nmac stays 0.2 km.
CurriculumStage stage_params(int k);

// Rolling success window; promotion requires a full window.
class GateWindow {
 public:
  explicit GateWindow(int window = 100, double threshold = 0.90)
      : window_(window), threshold_(threshold) {}

  // Appends one success flag; returns true when the gate fires. The caller
  // resets the window on promotion.
  bool record(int success);
  void reset();

  double rolling_rate() const;
  int observed() const { return observed_; }
  bool full() const { return observed_ >= window_; }

 private:
  int window_;
  double threshold_;
  std::vector<int> flags_;
  int cursor_ = 0;
  int observed_ = 0;
};

struct CurriculumConfig {
  int n_stages = 12;
  int window = 100;
  double promote_threshold = 0.90;
  int episode_budget = 10000;
  // Teacher temperature anneals linearly across stages.
  double tau_teacher_start = 5.0;
  double tau_teacher_end = 1.0;
  // 0 = curriculum on; k > 0 pins that stage from episode 1 (no promotion).
  int fixed_stage = 0;
  // Stop early once the rolling rate at `stop_stage` reaches `stop_rate`
  // (demo / smoke-training hook); 0 disables.
  int stop_stage = 0;
  double stop_rate = 0.0;
};

double stage_teacher_temperature(int k, const CurriculumConfig& cfg);

struct EpisodeRecord {
  int episode = 0;
  int stage = 0;
  int success = 0;
  double rolling_rate = 0.0;
  TerminalReason terminal = TerminalReason::None;
  int steps = 0;
  double episode_return = 0.0;
  int los_count = 0;
  int nmac_count = 0;
  double td_loss = 0.0;
  double policy_loss = 0.0;
};

std::string episode_record_csv_header();
std::string episode_record_csv_row(const EpisodeRecord& r);

struct TrainingResult {
  int episodes_run = 0;
  int final_stage = 1;
  bool completed = false;     // promoted out of the final stage
  bool stopped_early = false;  // stop_rate hook fired
  double final_rolling_rate = 0.0;
};

using EpisodeCallback = std::function<void(const EpisodeRecord&)>;

// Outer interaction loop: per stage, run episodes with the stage's density
// and LoS threshold, train every update_period env steps, and promote on the
// rolling gate. Stops when the last stage promotes or the budget runs out.
TrainingResult training_loop(Trainer& trainer, const EnvConfig& base_env,
                             const CurriculumConfig& cfg, std::uint64_t seed,
                             const EpisodeCallback& on_episode = {});

}  // namespace dac
