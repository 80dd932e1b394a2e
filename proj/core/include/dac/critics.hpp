#pragma once

#include "dac/diffusion.hpp"
#include "dac/nn.hpp"
#include "dac/traffic_env.hpp"

namespace dac {

// Twin online critics with Polyak-averaged targets.
struct CriticPair {
  QNetwork q1, q2;
  QNetwork q1_target, q2_target;
  double polyak_tau = 5e-3;

  CriticPair() = default;
  CriticPair(const QNetworkConfig& cfg, Rng& rng)
      : q1(cfg, rng), q2(cfg, rng), q1_target(q1), q2_target(q2) {}
};

// y = r + gamma * (1 - done) * max over feasible a' of min(Qbar1, Qbar2),
// the max enumerated exhaustively over the masked 27 classes.
double conservative_target(double reward, int done, const Observation& next_obs,
                           const FeasibilityMask& next_mask, CriticPair& pair,
                           double gamma);

// Direct-value variant used by tests to verify pessimism and masking without
// running the networks.
double conservative_target_from_values(double reward, int done,
                                       const Vec& q1_values, const Vec& q2_values,
                                       const FeasibilityMask& next_mask,
                                       double gamma);

struct TdLossResult {
  double loss = 0.0;
};

// Mean over the batch of (Q1(s,a)-y)^2 + (Q2(s,a)-y)^2; gradients accumulate
// into the online critics only. Targets must be precomputed constants.
TdLossResult td_loss(const std::vector<const Transition*>& batch,
                     const std::vector<double>& targets, CriticPair& pair);

// target <- tau * online + (1 - tau) * target for every parameter.
void polyak_update(CriticPair& pair);

}  // namespace dac
