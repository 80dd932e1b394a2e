#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "dac/diffusion.hpp"
#include "dac/traffic_env.hpp"

namespace dac {

// One decision: distribution plus chosen class, given an rng stream the
// caller controls. Wraps sample_policy for the learned agent and trivial
// stubs for scripted baselines.
using PolicyFn = std::function<PolicySample(const Observation& obs,
                                            const FeasibilityMask& mask,
                                            Rng& rng)>;

PolicyFn diffusion_policy_fn(const DenoiserFn& denoiser,
                             const NoiseSchedule& schedule);

struct MetricsReport {
  int n_episodes = 0;
  double success_rate = 0.0;
  double los_rate = 0.0;   // fraction of episodes with >= 1 LoS event
  double nmac_rate = 0.0;
  double timeout_rate = 0.0;
  double avg_steps = 0.0;  // over successful episodes only
  double avg_goal_reward = 0.0;  // per-episode sums averaged over all episodes
  double avg_safe_reward = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& label, const MetricsReport& m);

enum class Density { Low, Medium, High };  // 24 / 36 / 48 nominal intruders

int density_routes(Density d);
const char* density_name(Density d);

// Runs n_episodes with per-episode seed streams split from `seed`, so the
// report is identical for any n_threads. Evaluation always uses d_los = 10 km.
MetricsReport run_eval(const PolicyFn& policy, const EnvConfig& base_env,
                       Density density, int n_episodes, std::uint64_t seed,
                       int n_threads = 1);

struct LatencyReport {
  double mean_ms = 0.0;
  double p95_ms = 0.0;
};

// Wall clock per decision on a fixed observation; n_decisions must be > 0.
LatencyReport measure_latency(const PolicyFn& policy, const Observation& obs,
                              const FeasibilityMask& mask, int n_decisions,
                              std::uint64_t seed);

// Counts indexed [a_h + 1][a_psi + 1][a_v + 1].
struct HeatmapGrid {
  std::array<std::array<std::array<int, 3>, 3>, 3> counts{};

  int total() const;
  std::string layer_csv(int a_h) const;  // 3x3 grid for one vertical command
};

struct MultimodalSampleRecord {
  int action = 0;   // class index of the sampled first action
  int success = 0;  // label inherited from its action's validation rollout
};

struct MultimodalResult {
  HeatmapGrid grid;  // successful samples only
  std::vector<MultimodalSampleRecord> samples;
  int distinct_first_actions = 0;
  int successful_samples = 0;
};

// Stage 1: n_samples independent first-action draws at the frozen scenario
// state. Stage 2: each distinct first action is validated by a full rollout
// (success = goal with zero LoS/NMAC); the grid counts successful samples
// stratified by vertical command.
MultimodalResult multimodal_protocol(const PolicyFn& policy,
                                     const EnvConfig& base_env,
                                     const TacticalScenario& scenario,
                                     int n_samples, int rollout_horizon,
                                     std::uint64_t seed);

// Scenario files are JSON; loading validates geometry and conflict imminence.
TacticalScenario load_scenario(const std::string& path);
std::string scenario_to_json(const TacticalScenario& s);
TacticalScenario scenario_from_json_text(const std::string& text);

// First projected LoS (straight-line, no action) must occur within
// [min_s, max_s] seconds; throws on violation.
void validate_scenario(const TacticalScenario& s,
                       const SeparationThresholds& thresholds,
                       double min_s = 60.0, double max_s = 90.0);

}  // namespace dac
