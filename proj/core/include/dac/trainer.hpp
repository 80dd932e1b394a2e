#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "dac/critics.hpp"
#include "dac/diffusion.hpp"
#include "dac/nn.hpp"
#include "dac/traffic_env.hpp"

namespace dac {

// FIFO ring of transitions with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 1000000) : capacity_(capacity) {
    if (capacity_ == 0) throw std::domain_error("ReplayBuffer: zero capacity");
  }

  void push(const Transition& t);
  // Uniform with replacement; pointers stay valid until the next push.
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return storage_[i]; }

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> storage_;
};

struct TrainConfig {
  std::size_t batch_size = 128;
  int update_period = 4;  // env steps per parameter update
  int gradient_steps_per_update = 1;
  double gamma = 0.99;
  double tau_teacher = 1.0;
  double lambda_ce = 1.0;
  double eps_sm = 1e-3;
  double lr_policy = 3e-4;
  double lr_critic = 1e-3;
  double polyak_tau = 5e-3;
  double grad_clip_norm = 10.0;
  std::size_t warmup_transitions = 1000;
  std::size_t replay_capacity = 1000000;
};

struct TeacherDistribution {
  Vec probs;  // 27 entries, zero on infeasible classes
  FeasibilityMask mask;
  double temperature = 1.0;
};

// p*(a) proportional to exp(min(Q1,Q2)(s,a)/tau) over feasible classes, using
// the online critics.
TeacherDistribution teacher_distribution(const Observation& obs,
                                         const FeasibilityMask& mask,
                                         CriticPair& pair, double tau);

// Uniform over feasible classes; the value-guidance ablation teacher.
TeacherDistribution uniform_teacher(const FeasibilityMask& mask);

struct PolicyLossResult {
  double loss = 0.0;
  double denoise_loss = 0.0;
  double ce_loss = 0.0;
};

struct PolicyLossItem {
  const Observation* obs = nullptr;
  TeacherDistribution teacher;
  // When t > 0 the noise draw is frozen (one entry per logit); otherwise t and
  // epsilon are drawn from rng inside policy_loss.
  int fixed_t = 0;
  Vec fixed_eps;
};

// Denoising regression to teacher logits plus the terminal cross-entropy term
// at (s, y0, 0). Gradients accumulate into the denoiser only.
PolicyLossResult policy_loss(const std::vector<PolicyLossItem>& batch,
                             DenoiserNetwork& denoiser,
                             const NoiseSchedule& schedule, double lambda_ce,
                             double eps_sm, Rng& rng);

struct TrainScalars {
  bool skipped = false;
  double td_loss = 0.0;
  double policy_loss = 0.0;
  double denoise_loss = 0.0;
  double ce_loss = 0.0;
};

struct Trainer {
  TrainConfig config;
  NoiseSchedule schedule = NoiseSchedule::linear();
  ReplayBuffer buffer;
  DenoiserNetwork denoiser;
  CriticPair critics;
  AdamOptimizer policy_opt;
  AdamOptimizer critic_opt;
  // Replaces the value-guided teacher with the uniform-over-feasible teacher.
  bool uniform_teacher_ablation = false;
  // Collapses min(Q1,Q2) to Q1 in both the target and the teacher.
  bool single_critic_ablation = false;

  Trainer(const TrainConfig& cfg, const DenoiserConfig& dcfg,
          const QNetworkConfig& qcfg, Rng& rng);

  // Mask for the flight level encoded in an observation.
  FeasibilityMask mask_for_obs(const Observation& obs,
                               const ManeuverLimits& limits) const;

  // One full iteration (critic update, teacher, denoiser update, Polyak) on a
  // uniformly sampled batch; no-op below batch_size or during warm-up.
  TrainScalars train_iteration(Rng& rng, const ManeuverLimits& limits);
};

}  // namespace dac
