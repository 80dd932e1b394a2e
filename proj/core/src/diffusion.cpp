#include "dac/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dac {

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw std::domain_error("NoiseSchedule: T must be >= 1");
  NoiseSchedule s;
  s.T = steps;
  s.beta.assign(steps + 1, 0.0);
  s.alpha.assign(steps + 1, 0.0);
  s.alpha_bar.assign(steps + 1, 1.0);
  s.beta_tilde.assign(steps + 1, 0.0);
  for (int t = 1; t <= steps; ++t) {
    s.beta[t] = steps == 1 ? beta_start
                           : beta_start + (beta_end - beta_start) *
                                              static_cast<double>(t - 1) /
                                              static_cast<double>(steps - 1);
    s.alpha[t] = 1.0 - s.beta[t];
    s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
    s.beta_tilde[t] =
        (1.0 - s.alpha_bar[t - 1]) / (1.0 - s.alpha_bar[t]) * s.beta[t];
  }
  return s;
}

FeasibilityMask feasibility_mask(int agent_fl, const ManeuverLimits& limits) {
  if (agent_fl < limits.fl_min || agent_fl > limits.fl_max) {
    throw std::domain_error("feasibility_mask: flight level out of range");
  }
  FeasibilityMask mask;
  for (int i = 0; i < kNumActions; ++i) {
    const ActionTriple t = decode_action(ActionClass{i});
    const int fl = agent_fl + t.a_h;
    mask.feasible[i] = fl >= limits.fl_min && fl <= limits.fl_max;
  }
  return mask;
}

LogitVector forward_noising(const LogitVector& y0, int t,
                            const NoiseSchedule& schedule, Rng& rng) {
  if (t < 1 || t > schedule.T) {
    throw std::domain_error("forward_noising: t out of range");
  }
  const double a = std::sqrt(schedule.alpha_bar[t]);
  const double b = std::sqrt(1.0 - schedule.alpha_bar[t]);
  LogitVector y(y0.size());
  for (std::size_t i = 0; i < y0.size(); ++i) y[i] = a * y0[i] + b * rng.normal();
  return y;
}

LogitVector reverse_step(const LogitVector& y_t, const LogitVector& y0_hat,
                         int t, const NoiseSchedule& schedule, Rng& rng) {
  if (t < 1 || t > schedule.T) {
    throw std::domain_error("reverse_step: t out of range");
  }
  const double one_minus_ab = 1.0 - schedule.alpha_bar[t];
  const double c0 = std::sqrt(schedule.alpha_bar[t - 1]) * schedule.beta[t] / one_minus_ab;
  const double ct = std::sqrt(schedule.alpha[t]) * (1.0 - schedule.alpha_bar[t - 1]) / one_minus_ab;
  const double sigma = t > 1 ? std::sqrt(schedule.beta_tilde[t]) : 0.0;
  LogitVector y(y_t.size());
  for (std::size_t i = 0; i < y_t.size(); ++i) {
    y[i] = c0 * y0_hat[i] + ct * y_t[i];
    if (sigma > 0.0) y[i] += sigma * rng.normal();
  }
  return y;
}

Vec masked_softmax(const LogitVector& logits, const FeasibilityMask& mask) {
  if (mask.count() == 0) {
    throw std::logic_error("masked_softmax: all classes masked");
  }
  double maxv = -1e300;
  for (int i = 0; i < kNumActions; ++i) {
    if (mask.feasible[i]) maxv = std::max(maxv, logits[i]);
  }
  Vec probs(kNumActions, 0.0);
  double z = 0.0;
  for (int i = 0; i < kNumActions; ++i) {
    if (!mask.feasible[i]) continue;
    const double e = std::exp(std::clamp(logits[i] - maxv, -60.0, 60.0));
    probs[i] = e;
    z += e;
  }
  for (int i = 0; i < kNumActions; ++i) probs[i] /= z;
  return probs;
}

LogitVector teacher_to_logits(const Vec& p_star, double eps_sm) {
  LogitVector y(p_star.size());
  for (std::size_t i = 0; i < p_star.size(); ++i) {
    if (p_star[i] < 0.0) {
      throw std::domain_error("teacher_to_logits: negative probability");
    }
    y[i] = std::log(p_star[i] + eps_sm / static_cast<double>(kNumActions));
  }
  return y;
}

double cross_entropy(const Vec& p_ref, const Vec& q) {
  double ce = 0.0;
  for (std::size_t i = 0; i < p_ref.size(); ++i) {
    if (p_ref[i] > 0.0) ce -= p_ref[i] * std::log(std::max(q[i], 1e-300));
  }
  return ce;
}

PolicySample sample_policy(const Vec& obs, const FeasibilityMask& mask,
                           const DenoiserFn& denoiser,
                           const NoiseSchedule& schedule, Rng& rng,
                           const SamplerOptions& options) {
  if (mask.count() == 0) {
    throw std::logic_error("sample_policy: all classes masked");
  }
  LogitVector y(kNumActions);
  for (auto& v : y) v = rng.normal();

  LogitVector last_input = y;
  LogitVector y0_hat;
  for (int t = schedule.T; t >= 1; --t) {
    last_input = y;
    y0_hat = denoiser(obs, y, t);
    y = reverse_step(y, y0_hat, t, schedule, rng);
  }

  PolicySample out;
  out.logits = options.chained_sample_logits ? y : y0_hat;
  out.probs = masked_softmax(out.logits, mask);

  // Argmax; bitwise ties fall back to the final noised denoiser input so an
  // untrained constant head still explores.
  int best = -1;
  for (int i = 0; i < kNumActions; ++i) {
    if (!mask.feasible[i]) continue;
    if (best < 0 || out.probs[i] > out.probs[best]) {
      best = i;
    } else if (out.probs[i] == out.probs[best] &&
               last_input[i] > last_input[best]) {
      best = i;
    }
  }
  out.chosen = ActionClass{best};
  return out;
}

}  // namespace dac
