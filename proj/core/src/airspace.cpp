#include "dac/airspace.hpp"

#include <algorithm>

namespace dac {

namespace {
void check_component(int c) {
  if (c < -1 || c > 1) {
    throw std::domain_error("action triple component outside {-1,0,+1}");
  }
}
}  // namespace

ActionClass encode_action(const ActionTriple& triple) {
  check_component(triple.a_psi);
  check_component(triple.a_v);
  check_component(triple.a_h);
  return ActionClass{9 * (triple.a_psi + 1) + 3 * (triple.a_v + 1) +
                     (triple.a_h + 1)};
}

ActionTriple decode_action(const ActionClass& cls) {
  if (cls.index < 0 || cls.index >= kNumActions) {
    throw std::domain_error("action class index out of range");
  }
  return ActionTriple{cls.index / 9 - 1, (cls.index / 3) % 3 - 1,
                      cls.index % 3 - 1};
}

AircraftState step_kinematics(const AircraftState& state,
                              const ActionTriple& triple,
                              const ManeuverLimits& limits,
                              const Units& units) {
  AircraftState next = state;
  next.psi = state.psi + triple.a_psi * deg_to_rad(limits.dpsi_step_deg);
  next.v = std::clamp(state.v + triple.a_v * limits.dv_step_kt * units.kt_to_kmh,
                      limits.v_min, limits.v_max);
  next.fl = state.fl + triple.a_h;
  if (next.fl < limits.fl_min || next.fl > limits.fl_max) {
    throw std::logic_error(
        "flight level left the envelope; the safety mask must prevent this");
  }
  const double dt_h = units.dt_seconds / 3600.0;
  next.sync_velocity();
  next.x = state.x + next.vx * dt_h;
  next.y = state.y + next.vy * dt_h;
  return next;
}

Separation separation_status(const AircraftState& a, const AircraftState& b,
                             const SeparationThresholds& thr,
                             const FlTransition* transition) {
  bool level_conflict;
  if (transition != nullptr) {
    level_conflict = (b.fl == transition->from) || (b.fl == transition->to);
  } else {
    level_conflict = (a.fl == b.fl);
  }
  if (!level_conflict) return Separation::Clear;
  const double d = horizontal_distance(a, b);
  if (d < thr.d_nmac) return Separation::NMAC;
  if (d < thr.d_los) return Separation::LoS;
  return Separation::Clear;
}

}  // namespace dac
