#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dac/airspace.hpp"
#include "dac/rng.hpp"

namespace dac {

struct Airway {
  double entry_x = 0.0, entry_y = 0.0;  // km, on the boundary
  double exit_x = 0.0, exit_y = 0.0;
  double length = 0.0;
  double heading = 0.0;  // rad, entry -> exit
};

struct Intruder {
  AircraftState state;
  int airway_id = 0;
  double progress = 0.0;        // fraction of airway length covered
  int spawned_followers = 0;    // meaningful for the FL0 leader
  std::uint64_t creation_index = 0;
};

struct RewardWeights {
  double alpha_goal = 1.0;
  double alpha_1 = 1.0;       // position-deviation weight (normalized coords)
  double alpha_2 = 0.5;       // boundary penalty
  double alpha_step = 0.001;  // per-step penalty
  double los_penalty = 0.5;
  double nmac_penalty = 1.0;
  double timeout_penalty = 0.5;  // terminal penalty on timeout failure
};

struct EnvConfig {
  double width = 400.0;   // km
  double height = 400.0;  // km
  int n_routes = 12;
  int max_intruders_per_route = 3;
  double cruise_speed = 800.0;  // km/h
  double spawn_threshold_1 = 1.0 / 3.0;
  double spawn_threshold_2 = 2.0 / 3.0;
  double goal_margin = 20.0;         // km from every boundary
  double initial_separation = 20.0;  // km agent-to-intruder at reset
  double goal_capture_radius = 5.0;  // km
  int max_steps = 1000;
  SeparationThresholds thresholds;
  RewardWeights reward_weights;
  ManeuverLimits limits;
  Units units;
  // Position-deviation term uses coordinates divided by `width`; raw-km mode
  // is available for comparison with the unnormalized objective.
  bool normalize_deviation = true;
  std::uint64_t rng_seed = 0;
};

enum class TerminalReason { None, Goal, NMAC, Timeout };

const char* terminal_reason_name(TerminalReason r);

using Observation = std::vector<double>;

inline constexpr int kObservationDim = 22;
inline constexpr int kObservedIntruders = 3;

struct StepEvents {
  std::vector<int> per_intruder;  // 0 = clear, 1 = LoS, 2 = NMAC
  int los_count = 0;
  int nmac_count = 0;
  bool out_of_bounds = false;
  bool reached_goal = false;
};

struct Transition {
  Observation obs;
  ActionClass action;
  double reward = 0.0;
  double reward_goal = 0.0;
  double reward_safe = 0.0;
  Observation next_obs;
  int done = 0;
  TerminalReason terminal_reason = TerminalReason::None;
  StepEvents events;
};

// Fixed scenario: explicit initial states instead of randomized reset.
struct ScenarioIntruder {
  double x = 0.0, y = 0.0;   // km
  double heading_deg = 0.0;  // degrees, counterclockwise from +x
  double speed = 800.0;      // km/h
  int fl = 0;
};

struct TacticalScenario {
  std::string label;  // headon | crossing | overtaking
  AircraftState agent;
  double goal_x = 0.0, goal_y = 0.0;
  std::vector<ScenarioIntruder> intruders;
};

// Deterministic single-agent MDP over the airway network. One instance is
// owned by one worker; independent instances with independent seeds can run
// in parallel.
class Environment {
 public:
  explicit Environment(const EnvConfig& config);

  // Randomized episode start: agent on the boundary heading toward a random
  // interior goal, one FL0 intruder per route at its entry.
  Observation reset();

  // Fixed-scenario start (no phased spawning; intruders fly straight).
  Observation reset_from_scenario(const TacticalScenario& scenario);

  // Advances the world one step. The action must be feasible under the
  // safety mask for the current flight level.
  Transition step(const ActionClass& action);

  Observation observation() const;

  const EnvConfig& config() const { return config_; }
  EnvConfig& mutable_config() { return config_; }
  const AircraftState& agent() const { return agent_; }
  const std::vector<Intruder>& intruders() const { return intruders_; }
  const std::vector<Airway>& airways() const { return airways_; }
  double goal_x() const { return goal_x_; }
  double goal_y() const { return goal_y_; }
  int steps() const { return step_count_; }
  bool done() const { return terminal_ != TerminalReason::None; }
  TerminalReason terminal_reason() const { return terminal_; }
  int episode_los_events() const { return episode_los_; }
  int episode_nmac_events() const { return episode_nmac_; }

 private:
  void generate_airways();
  void advance_traffic();
  Intruder make_route_intruder(int airway_id, int fl, double progress);

  EnvConfig config_;
  Rng rng_;
  std::vector<Airway> airways_;
  std::vector<Intruder> intruders_;
  AircraftState agent_;
  double goal_x_ = 0.0, goal_y_ = 0.0;
  int step_count_ = 0;
  int episode_los_ = 0;
  int episode_nmac_ = 0;
  TerminalReason terminal_ = TerminalReason::None;
  std::uint64_t next_creation_index_ = 0;
  bool scenario_mode_ = false;
};

// Transition log record as line-delimited JSON.
std::string transition_to_json(const Transition& t, std::uint64_t episode_id,
                               int step_index, int stage_k);

}  // namespace dac
