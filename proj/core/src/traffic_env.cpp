#include "dac/traffic_env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dac {

const char* terminal_reason_name(TerminalReason r) {
  switch (r) {
    case TerminalReason::None: return "none";
    case TerminalReason::Goal: return "goal";
    case TerminalReason::NMAC: return "nmac";
    case TerminalReason::Timeout: return "timeout";
  }
  return "unknown";
}

Environment::Environment(const EnvConfig& config)
    : config_(config), rng_(Rng::stream(config.rng_seed, 0)) {
  generate_airways();
}

void Environment::generate_airways() {
  // Alternating left-to-right and bottom-to-top straight segments; any two
  // routes of opposite orientation intersect inside the sector, so every
  // route crosses at least one other whenever n_routes >= 2.
  airways_.clear();
  Rng layout_rng = Rng::stream(config_.rng_seed, 1);
  for (int i = 0; i < config_.n_routes; ++i) {
    Airway a;
    if (i % 2 == 0) {
      a.entry_x = 0.0;
      a.entry_y = layout_rng.uniform(0.1 * config_.height, 0.9 * config_.height);
      a.exit_x = config_.width;
      a.exit_y = layout_rng.uniform(0.1 * config_.height, 0.9 * config_.height);
    } else {
      a.entry_x = layout_rng.uniform(0.1 * config_.width, 0.9 * config_.width);
      a.entry_y = 0.0;
      a.exit_x = layout_rng.uniform(0.1 * config_.width, 0.9 * config_.width);
      a.exit_y = config_.height;
    }
    const double dx = a.exit_x - a.entry_x;
    const double dy = a.exit_y - a.entry_y;
    a.length = std::sqrt(dx * dx + dy * dy);
    a.heading = std::atan2(dy, dx);
    airways_.push_back(a);
  }
}

Intruder Environment::make_route_intruder(int airway_id, int fl, double progress) {
  const Airway& a = airways_[airway_id];
  Intruder in;
  in.airway_id = airway_id;
  in.progress = progress;
  in.creation_index = next_creation_index_++;
  in.state.x = a.entry_x + progress * (a.exit_x - a.entry_x);
  in.state.y = a.entry_y + progress * (a.exit_y - a.entry_y);
  in.state.psi = a.heading;
  in.state.v = config_.cruise_speed;
  in.state.fl = fl;
  in.state.sync_velocity();
  return in;
}

Observation Environment::reset() {
  scenario_mode_ = false;
  step_count_ = 0;
  episode_los_ = 0;
  episode_nmac_ = 0;
  terminal_ = TerminalReason::None;

  goal_x_ = rng_.uniform(config_.goal_margin, config_.width - config_.goal_margin);
  goal_y_ = rng_.uniform(config_.goal_margin, config_.height - config_.goal_margin);

  intruders_.clear();
  next_creation_index_ = 0;
  for (int i = 0; i < config_.n_routes; ++i) {
    intruders_.push_back(make_route_intruder(i, 0, 0.0));
  }

  constexpr int kMaxTries = 1000;
  bool placed = false;
  for (int attempt = 0; attempt < kMaxTries && !placed; ++attempt) {
    const int side = static_cast<int>(rng_.uniform_int(4));
    double x = 0.0, y = 0.0;
    switch (side) {
      case 0: x = 0.0; y = rng_.uniform(0.0, config_.height); break;
      case 1: x = config_.width; y = rng_.uniform(0.0, config_.height); break;
      case 2: x = rng_.uniform(0.0, config_.width); y = 0.0; break;
      default: x = rng_.uniform(0.0, config_.width); y = config_.height; break;
    }
    agent_.x = x;
    agent_.y = y;
    agent_.psi = std::atan2(goal_y_ - y, goal_x_ - x);
    agent_.v = config_.cruise_speed;
    agent_.fl = 1;
    agent_.sync_velocity();
    placed = true;
    for (const auto& in : intruders_) {
      if (horizontal_distance(agent_, in.state) < config_.initial_separation) {
        placed = false;
        break;
      }
    }
  }
  if (!placed) {
    throw std::runtime_error(
        "Environment::reset: could not satisfy initial separation; "
        "check route layout and initial_separation");
  }
  return observation();
}

Observation Environment::reset_from_scenario(const TacticalScenario& scenario) {
  scenario_mode_ = true;
  step_count_ = 0;
  episode_los_ = 0;
  episode_nmac_ = 0;
  terminal_ = TerminalReason::None;
  next_creation_index_ = 0;

  agent_ = scenario.agent;
  agent_.sync_velocity();
  goal_x_ = scenario.goal_x;
  goal_y_ = scenario.goal_y;

  intruders_.clear();
  for (const auto& si : scenario.intruders) {
    Intruder in;
    in.airway_id = -1;
    in.creation_index = next_creation_index_++;
    in.state.x = si.x;
    in.state.y = si.y;
    in.state.psi = deg_to_rad(si.heading_deg);
    in.state.v = si.speed;
    in.state.fl = si.fl;
    in.state.sync_velocity();
    intruders_.push_back(in);
  }
  return observation();
}

void Environment::advance_traffic() {
  const double dt_h = config_.units.dt_seconds / 3600.0;

  if (scenario_mode_) {
    for (auto& in : intruders_) {
      in.state.x += in.state.vx * dt_h;
      in.state.y += in.state.vy * dt_h;
    }
    return;
  }

  std::vector<Intruder> spawned;
  for (auto& in : intruders_) {
    const Airway& a = airways_[in.airway_id];
    const double before = in.progress;
    in.progress += in.state.v * dt_h / a.length;
    in.state.x = a.entry_x + in.progress * (a.exit_x - a.entry_x);
    in.state.y = a.entry_y + in.progress * (a.exit_y - a.entry_y);

    if (in.state.fl == 0) {
      auto route_count = [&](int id) {
        int n = static_cast<int>(std::count_if(
            intruders_.begin(), intruders_.end(),
            [id](const Intruder& x) { return x.airway_id == id; }));
        n += static_cast<int>(std::count_if(
            spawned.begin(), spawned.end(),
            [id](const Intruder& x) { return x.airway_id == id; }));
        return n;
      };
      if (before <= config_.spawn_threshold_1 &&
          in.progress > config_.spawn_threshold_1 && in.spawned_followers < 1 &&
          route_count(in.airway_id) < config_.max_intruders_per_route) {
        spawned.push_back(make_route_intruder(in.airway_id, 1, 0.0));
        in.spawned_followers = 1;
      }
      if (before <= config_.spawn_threshold_2 &&
          in.progress > config_.spawn_threshold_2 && in.spawned_followers < 2 &&
          route_count(in.airway_id) < config_.max_intruders_per_route) {
        spawned.push_back(make_route_intruder(in.airway_id, 2, 0.0));
        in.spawned_followers = 2;
      }
    }
  }

  // Remove completed intruders; a completed FL0 leader respawns immediately.
  std::vector<int> respawn_routes;
  intruders_.erase(
      std::remove_if(intruders_.begin(), intruders_.end(),
                     [&](const Intruder& in) {
                       if (in.progress < 1.0) return false;
                       if (in.state.fl == 0) respawn_routes.push_back(in.airway_id);
                       return true;
                     }),
      intruders_.end());
  for (int route : respawn_routes) {
    intruders_.push_back(make_route_intruder(route, 0, 0.0));
  }
  for (auto& in : spawned) intruders_.push_back(std::move(in));
}

Observation Environment::observation() const {
  Observation obs;
  obs.reserve(kObservationDim);

  std::vector<int> order(intruders_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double da = horizontal_distance(agent_, intruders_[a].state);
    const double db = horizontal_distance(agent_, intruders_[b].state);
    if (da != db) return da < db;
    return intruders_[a].creation_index < intruders_[b].creation_index;
  });

  for (int k = 0; k < kObservedIntruders; ++k) {
    if (k < static_cast<int>(order.size())) {
      const AircraftState& s = intruders_[order[k]].state;
      obs.push_back((s.x - agent_.x) / config_.width);
      obs.push_back((s.y - agent_.y) / config_.width);
      obs.push_back((s.vx - agent_.vx) / config_.cruise_speed);
      obs.push_back((s.vy - agent_.vy) / config_.cruise_speed);
      obs.push_back(static_cast<double>(s.fl - agent_.fl) / 2.0);
    } else {
      // Absent-intruder sentinel: unit relative distance, zero velocity.
      obs.push_back(1.0);
      obs.push_back(0.0);
      obs.push_back(0.0);
      obs.push_back(0.0);
      obs.push_back(0.0);
    }
  }

  obs.push_back(std::sin(agent_.psi));
  obs.push_back(std::cos(agent_.psi));
  obs.push_back((agent_.v - config_.limits.v_min) /
                (config_.limits.v_max - config_.limits.v_min));
  obs.push_back(static_cast<double>(agent_.fl) /
                static_cast<double>(config_.limits.fl_max));

  const double gx = (goal_x_ - agent_.x) / config_.width;
  const double gy = (goal_y_ - agent_.y) / config_.width;
  obs.push_back(gx);
  obs.push_back(gy);
  obs.push_back(std::sqrt(gx * gx + gy * gy));
  return obs;
}

Transition Environment::step(const ActionClass& action) {
  if (terminal_ != TerminalReason::None) {
    throw std::logic_error("Environment::step called on a finished episode");
  }
  const ActionTriple triple = decode_action(action);
  const int fl_next = agent_.fl + triple.a_h;
  if (fl_next < config_.limits.fl_min || fl_next > config_.limits.fl_max) {
    throw std::logic_error("Environment::step: infeasible action (safety mask)");
  }

  Transition tr;
  tr.obs = observation();
  tr.action = action;

  const FlTransition transition{agent_.fl, fl_next};
  const bool transitioning = triple.a_h != 0;

  agent_ = step_kinematics(agent_, triple, config_.limits, config_.units);
  advance_traffic();

  // Separation events against every intruder at the post-step positions.
  StepEvents& ev = tr.events;
  ev.per_intruder.resize(intruders_.size(), 0);
  for (std::size_t k = 0; k < intruders_.size(); ++k) {
    const Separation s =
        separation_status(agent_, intruders_[k].state, config_.thresholds,
                          transitioning ? &transition : nullptr);
    if (s == Separation::NMAC) {
      ev.per_intruder[k] = 2;
      ++ev.nmac_count;
    } else if (s == Separation::LoS) {
      ev.per_intruder[k] = 1;
      ++ev.los_count;
    }
  }
  episode_los_ += ev.los_count;
  episode_nmac_ += ev.nmac_count;

  const double goal_dist = std::hypot(agent_.x - goal_x_, agent_.y - goal_y_);
  ev.reached_goal = goal_dist <= config_.goal_capture_radius;
  ev.out_of_bounds = agent_.x < 0.0 || agent_.x > config_.width ||
                     agent_.y < 0.0 || agent_.y > config_.height;

  ++step_count_;
  if (ev.nmac_count > 0) {
    terminal_ = TerminalReason::NMAC;
  } else if (ev.reached_goal) {
    terminal_ = TerminalReason::Goal;
  } else if (step_count_ >= config_.max_steps) {
    terminal_ = TerminalReason::Timeout;
  }

  const RewardWeights& w = config_.reward_weights;
  const double scale = config_.normalize_deviation ? config_.width : 1.0;
  const double dx = (agent_.x - goal_x_) / scale;
  const double dy = (agent_.y - goal_y_) / scale;
  double r_goal = w.alpha_goal * (terminal_ == TerminalReason::Goal ? 1.0 : 0.0) -
                  w.alpha_1 * (dx * dx + dy * dy) -
                  w.alpha_2 * (ev.out_of_bounds ? 1.0 : 0.0) - w.alpha_step;
  if (terminal_ == TerminalReason::Timeout) r_goal -= w.timeout_penalty;
  const double r_safe = -(w.nmac_penalty * ev.nmac_count + w.los_penalty * ev.los_count);

  tr.reward_goal = r_goal;
  tr.reward_safe = r_safe;
  tr.reward = r_goal + r_safe;
  tr.next_obs = observation();
  tr.done = terminal_ != TerminalReason::None ? 1 : 0;
  tr.terminal_reason = terminal_;
  return tr;
}

std::string transition_to_json(const Transition& t, std::uint64_t episode_id,
                               int step_index, int stage_k) {
  std::ostringstream ss;
  ss.precision(17);
  auto put_vec = [&ss](const Observation& v) {
    ss << "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) ss << ",";
      ss << v[i];
    }
    ss << "]";
  };
  ss << "{\"episode\":" << episode_id << ",\"step\":" << step_index
     << ",\"stage\":" << stage_k << ",\"obs\":";
  put_vec(t.obs);
  ss << ",\"action\":" << t.action.index << ",\"reward\":" << t.reward
     << ",\"reward_goal\":" << t.reward_goal
     << ",\"reward_safe\":" << t.reward_safe << ",\"next_obs\":";
  put_vec(t.next_obs);
  ss << ",\"done\":" << t.done << ",\"terminal\":\""
     << terminal_reason_name(t.terminal_reason) << "\"}";
  return ss.str();
}

}  // namespace dac
