#include "dac/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dac {

void ReplayBuffer::push(const Transition& t) {
  if (storage_.size() < capacity_) {
    storage_.push_back(t);
  } else {
    storage_[cursor_] = t;
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (storage_.empty()) throw std::domain_error("ReplayBuffer: sample from empty buffer");
  std::vector<const Transition*> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = &storage_[rng.uniform_int(storage_.size())];
  }
  return out;
}

TeacherDistribution teacher_distribution(const Observation& obs,
                                         const FeasibilityMask& mask,
                                         CriticPair& pair, double tau) {
  if (tau <= 0.0) throw std::domain_error("teacher_distribution: tau must be positive");
  const Vec q1 = pair.q1.forward(obs);
  const Vec q2 = pair.q2.forward(obs);
  LogitVector scaled(kNumActions, 0.0);
  for (int a = 0; a < kNumActions; ++a) {
    scaled[a] = std::min(q1[a], q2[a]) / tau;
  }
  TeacherDistribution t;
  t.mask = mask;
  t.temperature = tau;
  t.probs = masked_softmax(scaled, mask);
  return t;
}

TeacherDistribution uniform_teacher(const FeasibilityMask& mask) {
  const int n = mask.count();
  if (n == 0) throw std::logic_error("uniform_teacher: all classes masked");
  TeacherDistribution t;
  t.mask = mask;
  t.probs.assign(kNumActions, 0.0);
  for (int a = 0; a < kNumActions; ++a) {
    if (mask.feasible[a]) t.probs[a] = 1.0 / n;
  }
  return t;
}

PolicyLossResult policy_loss(const std::vector<PolicyLossItem>& batch,
                             DenoiserNetwork& denoiser,
                             const NoiseSchedule& schedule, double lambda_ce,
                             double eps_sm, Rng& rng) {
  if (batch.empty()) throw std::logic_error("policy_loss: empty batch");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  PolicyLossResult out;
  for (const PolicyLossItem& item : batch) {
    const LogitVector y0 = teacher_to_logits(item.teacher.probs, eps_sm);

    int t = item.fixed_t;
    Vec eps = item.fixed_eps;
    if (t < 1) {
      t = 1 + static_cast<int>(rng.uniform_int(static_cast<std::size_t>(schedule.T)));
      eps.resize(y0.size());
      for (auto& e : eps) e = rng.normal();
    }
    const double a = std::sqrt(schedule.alpha_bar[t]);
    const double b = std::sqrt(1.0 - schedule.alpha_bar[t]);
    LogitVector y_t(y0.size());
    for (std::size_t i = 0; i < y0.size(); ++i) y_t[i] = a * y0[i] + b * eps[i];

    // Denoising regression term.
    const Vec pred = denoiser.forward(*item.obs, y_t, t);
    Vec d_pred(kNumActions, 0.0);
    double l_diff = 0.0;
    for (int i = 0; i < kNumActions; ++i) {
      const double e = pred[i] - y0[i];
      l_diff += e * e;
      d_pred[i] = 2.0 * e * inv_n;
    }
    denoiser.backward(d_pred);

    // Terminal cross-entropy at the clean logits, time index 0.
    double l_term = 0.0;
    if (lambda_ce != 0.0) {
      const Vec clean_pred = denoiser.forward(*item.obs, y0, 0);
      const Vec q = masked_softmax(clean_pred, item.teacher.mask);
      l_term = cross_entropy(item.teacher.probs, q);
      // d(CE)/d(logit_i) = q_i * sum(p over feasible) - p_i on feasible classes.
      double p_mass = 0.0;
      for (int i = 0; i < kNumActions; ++i) {
        if (item.teacher.mask.feasible[i]) p_mass += item.teacher.probs[i];
      }
      Vec d_clean(kNumActions, 0.0);
      for (int i = 0; i < kNumActions; ++i) {
        if (!item.teacher.mask.feasible[i]) continue;
        d_clean[i] = lambda_ce * inv_n * (q[i] * p_mass - item.teacher.probs[i]);
      }
      denoiser.backward(d_clean);
    }

    out.denoise_loss += l_diff * inv_n;
    out.ce_loss += l_term * inv_n;
  }
  out.loss = out.denoise_loss + lambda_ce * out.ce_loss;
  if (!std::isfinite(out.loss)) {
    throw std::runtime_error("policy_loss: non-finite loss");
  }
  return out;
}

Trainer::Trainer(const TrainConfig& cfg, const DenoiserConfig& dcfg,
                 const QNetworkConfig& qcfg, Rng& rng)
    : config(cfg),
      buffer(cfg.replay_capacity),
      denoiser(dcfg, rng),
      critics(qcfg, rng),
      policy_opt(cfg.lr_policy),
      critic_opt(cfg.lr_critic) {
  critics.polyak_tau = cfg.polyak_tau;
}

FeasibilityMask Trainer::mask_for_obs(const Observation& obs,
                                      const ManeuverLimits& limits) const {
  // The normalized flight level is the fourth ownship feature.
  const int fl_index = kObservedIntruders * 5 + 3;
  const int fl = static_cast<int>(std::lround(obs[fl_index] * limits.fl_max));
  return feasibility_mask(fl, limits);
}

TrainScalars Trainer::train_iteration(Rng& rng, const ManeuverLimits& limits) {
  TrainScalars scalars;
  if (buffer.size() < config.batch_size ||
      buffer.size() < config.warmup_transitions) {
    scalars.skipped = true;
    return scalars;
  }
  const auto batch = buffer.sample(config.batch_size, rng);

  // A: critic update against conservative masked targets.
  std::vector<double> targets(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& tr = *batch[i];
    if (tr.done) {
      targets[i] = tr.reward;
    } else {
      const FeasibilityMask next_mask = mask_for_obs(tr.next_obs, limits);
      const Vec q1 = critics.q1_target.forward(tr.next_obs);
      const Vec q2 = single_critic_ablation
                         ? q1
                         : critics.q2_target.forward(tr.next_obs);
      targets[i] = conservative_target_from_values(tr.reward, 0, q1, q2,
                                                   next_mask, config.gamma);
    }
  }
  auto critic_params = critics.q1.params();
  {
    auto p2 = critics.q2.params();
    critic_params.insert(critic_params.end(), p2.begin(), p2.end());
  }
  zero_grads(critic_params);
  scalars.td_loss = td_loss(batch, targets, critics).loss;
  clip_grad_global_norm(critic_params, config.grad_clip_norm);
  critic_opt.step(critic_params);

  // B/C/D: teacher construction (critics frozen) and denoiser update.
  std::vector<PolicyLossItem> items(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const FeasibilityMask mask = mask_for_obs(batch[i]->obs, limits);
    items[i].obs = &batch[i]->obs;
    if (uniform_teacher_ablation) {
      items[i].teacher = uniform_teacher(mask);
    } else if (single_critic_ablation) {
      const Vec q1 = critics.q1.forward(batch[i]->obs);
      LogitVector scaled(kNumActions);
      for (int a = 0; a < kNumActions; ++a) scaled[a] = q1[a] / config.tau_teacher;
      items[i].teacher.mask = mask;
      items[i].teacher.temperature = config.tau_teacher;
      items[i].teacher.probs = masked_softmax(scaled, mask);
    } else {
      items[i].teacher =
          teacher_distribution(batch[i]->obs, mask, critics, config.tau_teacher);
    }
  }
  auto policy_params = denoiser.params();
  zero_grads(policy_params);
  const PolicyLossResult pl = policy_loss(items, denoiser, schedule,
                                          config.lambda_ce, config.eps_sm, rng);
  clip_grad_global_norm(policy_params, config.grad_clip_norm);
  policy_opt.step(policy_params);
  scalars.policy_loss = pl.loss;
  scalars.denoise_loss = pl.denoise_loss;
  scalars.ce_loss = pl.ce_loss;

  // E: Polyak target update.
  polyak_update(critics);
  return scalars;
}

}  // namespace dac
