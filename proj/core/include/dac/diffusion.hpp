#pragma once

#include <array>
#include <functional>

#include "dac/airspace.hpp"
#include "dac/nn.hpp"
#include "dac/rng.hpp"

namespace dac {

// beta_t, alpha_t, alpha_bar_t, beta_tilde_t tables, indexed 1..T (index 0
// holds the alpha_bar_0 = 1 convention).
struct NoiseSchedule {
  int T = 10;
  Vec beta;        // beta[t], t in 1..T; beta[0] unused
  Vec alpha;       // 1 - beta_t
  Vec alpha_bar;   // prod alpha, alpha_bar[0] = 1
  Vec beta_tilde;  // (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * beta_t

  static NoiseSchedule linear(int steps = 10, double beta_start = 1e-4,
                              double beta_end = 2e-2);
};

using LogitVector = Vec;  // 27 entries

struct FeasibilityMask {
  std::array<bool, kNumActions> feasible{};

  int count() const {
    int n = 0;
    for (bool b : feasible) n += b ? 1 : 0;
    return n;
  }
};

// State-local envelope mask: a class is infeasible iff its vertical component
// would take the flight level outside [fl_min, fl_max]. Heading and speed
// components are never masked (speed is clipped at state update instead).
FeasibilityMask feasibility_mask(int agent_fl, const ManeuverLimits& limits);

// y_t = sqrt(alpha_bar_t) y0 + sqrt(1 - alpha_bar_t) eps
LogitVector forward_noising(const LogitVector& y0, int t,
                            const NoiseSchedule& schedule, Rng& rng);

// One reverse transition using the x0-prediction mean; deterministic at t=1.
LogitVector reverse_step(const LogitVector& y_t, const LogitVector& y0_hat,
                         int t, const NoiseSchedule& schedule, Rng& rng);

// Softmax restricted to feasible classes; infeasible entries are exactly 0.
Vec masked_softmax(const LogitVector& logits, const FeasibilityMask& mask);

// y0 = ln(p + eps_sm / 27) entrywise.
LogitVector teacher_to_logits(const Vec& p_star, double eps_sm);

// Cross-entropy of q against reference p over the 27-class simplex.
double cross_entropy(const Vec& p_ref, const Vec& q);

using DenoiserFn =
    std::function<LogitVector(const Vec& obs, const LogitVector& y_t, int t)>;

struct PolicySample {
  Vec probs;           // 27 entries, zero on infeasible classes
  ActionClass chosen;
  LogitVector logits;  // logits fed to the masked softmax
};

struct SamplerOptions {
  // When true the masked softmax consumes the chained y_0 sample from the
  // reverse process instead of the final denoiser prediction. The two agree
  // exactly because the final reverse step is deterministic; the flag is kept
  // for ablation parity.
  bool chained_sample_logits = false;
};

// Full reverse chain from y_T ~ N(0, I); the class is the argmax of the
// masked distribution. Exact ties are broken by the diffusion noise carried
// in the final denoiser input, so an untrained (constant) denoiser explores
// uniformly over feasible classes.
PolicySample sample_policy(const Vec& obs, const FeasibilityMask& mask,
                           const DenoiserFn& denoiser,
                           const NoiseSchedule& schedule, Rng& rng,
                           const SamplerOptions& options = {});

}  // namespace dac
