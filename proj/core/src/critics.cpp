#include "dac/critics.hpp"

#include <limits>
#include <stdexcept>

namespace dac {

double conservative_target_from_values(double reward, int done,
                                       const Vec& q1_values, const Vec& q2_values,
                                       const FeasibilityMask& next_mask,
                                       double gamma) {
  if (done) return reward;
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < kNumActions; ++a) {
    if (!next_mask.feasible[a]) continue;
    const double q = std::min(q1_values[a], q2_values[a]);
    if (q > best) best = q;
  }
  if (best == -std::numeric_limits<double>::infinity()) {
    throw std::logic_error("conservative_target: no feasible next action");
  }
  return reward + gamma * best;
}

double conservative_target(double reward, int done, const Observation& next_obs,
                           const FeasibilityMask& next_mask, CriticPair& pair,
                           double gamma) {
  if (done) return reward;
  const Vec q1 = pair.q1_target.forward(next_obs);
  const Vec q2 = pair.q2_target.forward(next_obs);
  return conservative_target_from_values(reward, done, q1, q2, next_mask, gamma);
}

TdLossResult td_loss(const std::vector<const Transition*>& batch,
                     const std::vector<double>& targets, CriticPair& pair) {
  if (batch.empty() || batch.size() != targets.size()) {
    throw std::logic_error("td_loss: batch/target size mismatch");
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  TdLossResult out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& tr = *batch[i];
    const int a = tr.action.index;
    const Vec q1 = pair.q1.forward(tr.obs);
    const double e1 = q1[a] - targets[i];
    Vec d1(kNumActions, 0.0);
    d1[a] = 2.0 * e1 * inv_n;
    pair.q1.backward(d1);

    const Vec q2 = pair.q2.forward(tr.obs);
    const double e2 = q2[a] - targets[i];
    Vec d2(kNumActions, 0.0);
    d2[a] = 2.0 * e2 * inv_n;
    pair.q2.backward(d2);

    out.loss += (e1 * e1 + e2 * e2) * inv_n;
  }
  return out;
}

static void polyak_one(QNetwork& online, QNetwork& target, double tau) {
  auto po = online.params();
  auto pt = target.params();
  for (std::size_t i = 0; i < po.size(); ++i) {
    for (std::size_t j = 0; j < po[i].size; ++j) {
      pt[i].value[j] = tau * po[i].value[j] + (1.0 - tau) * pt[i].value[j];
    }
  }
}

void polyak_update(CriticPair& pair) {
  polyak_one(pair.q1, pair.q1_target, pair.polyak_tau);
  polyak_one(pair.q2, pair.q2_target, pair.polyak_tau);
}

}  // namespace dac
