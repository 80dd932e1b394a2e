#pragma once

#include <cmath>
#include <stdexcept>

namespace dac {

// Internal unit convention: kilometers, km/h, seconds, radians. Degrees and
// knots appear only at configuration boundaries.
struct Units {
  double km_per_sim_unit = 0.2;
  double dt_seconds = 30.0;
  double kt_to_kmh = 1.852;
};

constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Heading psi is measured counterclockwise from +x.
struct AircraftState {
  double x = 0.0;   // km
  double y = 0.0;   // km
  double vx = 0.0;  // km/h
  double vy = 0.0;  // km/h
  double psi = 0.0; // rad
  double v = 0.0;   // km/h
  int fl = 0;       // flight-level index

  void sync_velocity() {
    vx = v * std::cos(psi);
    vy = v * std::sin(psi);
  }
};

struct ActionTriple {
  int a_psi = 0;  // heading step, in {-1,0,+1}
  int a_v = 0;    // speed step
  int a_h = 0;    // flight-level step

  bool operator==(const ActionTriple&) const = default;
};

struct ActionClass {
  int index = 0;  // in [0, 27)

  bool operator==(const ActionClass&) const = default;
};

inline constexpr int kNumActions = 27;

struct ManeuverLimits {
  double dpsi_step_deg = 5.0;
  double dv_step_kt = 50.0;
  double v_min = 600.0;   // km/h
  double v_max = 1000.0;  // km/h
  int fl_min = 0;
  int fl_max = 2;
};

struct SeparationThresholds {
  double d_los = 10.0;  // km
  double d_nmac = 0.2;  // km
};

enum class Separation { Clear, LoS, NMAC };

// Row-major (a_psi, a_v, a_h) codec with a -1 -> 0 offset.
ActionClass encode_action(const ActionTriple& triple);
ActionTriple decode_action(const ActionClass& cls);

// One discrete kinematic step: heading/speed/level increments per the fixed
// step sizes, speed clipped to the envelope, position advanced along the new
// heading. The caller guarantees (via the safety mask) that the resulting
// flight level stays within [fl_min, fl_max].
AircraftState step_kinematics(const AircraftState& state,
                              const ActionTriple& triple,
                              const ManeuverLimits& limits, const Units& units);

struct FlTransition {
  int from = 0;
  int to = 0;
};

// Separation between two aircraft. A level conflict holds when both occupy
// the same flight level, or, when `transition` is supplied for aircraft `a`,
// when b's level equals either the source or target level of the transition.
Separation separation_status(const AircraftState& a, const AircraftState& b,
                             const SeparationThresholds& thr,
                             const FlTransition* transition = nullptr);

inline double horizontal_distance(const AircraftState& a,
                                  const AircraftState& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace dac
