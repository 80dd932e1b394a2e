#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dac/rng.hpp"

namespace dac {

using Vec = std::vector<double>;

struct Matrix {
  int rows = 0;
  int cols = 0;
  Vec data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// Named view into one parameter array and its gradient accumulator. Views
// stay valid as long as the owning network is not moved or resized.
struct ParamView {
  std::string name;
  double* value = nullptr;
  double* grad = nullptr;
  std::size_t size = 0;
};

void zero_grads(std::vector<ParamView>& params);
double grad_global_norm(const std::vector<ParamView>& params);
void clip_grad_global_norm(std::vector<ParamView>& params, double max_norm);

double mish(double x);
double mish_derivative(double x);

// ---------------------------------------------------------------------------
// Layers. Each layer caches what its backward pass needs; backward must be
// called with the cache of the matching forward call. Gradients accumulate
// until zero_grads.
// ---------------------------------------------------------------------------

struct DenseLayer {
  Matrix weight;  // out x in
  Vec bias;
  Matrix grad_weight;
  Vec grad_bias;
  Vec input_cache;

  DenseLayer() = default;
  DenseLayer(int in, int out) : weight(out, in), bias(out, 0.0),
      grad_weight(out, in), grad_bias(out, 0.0) {}

  void init_uniform_fan_in(Rng& rng);
  Vec forward(const Vec& x);
  Vec backward(const Vec& dy);
  void collect(std::vector<ParamView>& out, const std::string& prefix);
};

struct LayerNorm {
  Vec gamma;
  Vec beta;
  Vec grad_gamma;
  Vec grad_beta;
  Vec xhat_cache;
  double inv_sigma_cache = 0.0;

  LayerNorm() = default;
  explicit LayerNorm(int dim)
      : gamma(dim, 1.0), beta(dim, 0.0), grad_gamma(dim, 0.0), grad_beta(dim, 0.0) {}

  Vec forward(const Vec& x);
  Vec backward(const Vec& dy);
  void collect(std::vector<ParamView>& out, const std::string& prefix);
};

struct MishLayer {
  Vec input_cache;
  Vec forward(const Vec& x);
  Vec backward(const Vec& dy);
};

// Dense -> LayerNorm -> Mish with a skip connection (in == out).
struct ResidualBlock {
  DenseLayer dense;
  LayerNorm norm;
  MishLayer act;

  ResidualBlock() = default;
  explicit ResidualBlock(int dim) : dense(dim, dim), norm(dim) {}

  void init(Rng& rng) { dense.init_uniform_fan_in(rng); }
  Vec forward(const Vec& x);
  Vec backward(const Vec& dy);
  void collect(std::vector<ParamView>& out, const std::string& prefix);
};

// Multi-head self-attention over the hidden vector reshaped into `seq_len`
// feature groups of dimension hidden/seq_len, with a residual skip.
struct SelfAttention {
  int seq_len = 8;
  int n_heads = 8;
  int d_model = 0;   // hidden / seq_len
  int head_dim = 0;  // d_model / n_heads
  DenseLayer wq, wk, wv, wo;  // d_model x d_model projections, shared per token

  Matrix q_cache, k_cache, v_cache, x_cache, concat_cache;
  std::vector<Matrix> attn_cache;  // per head: seq_len x seq_len rows

  SelfAttention() = default;
  SelfAttention(int hidden, int seq, int heads);

  void init(Rng& rng);
  Vec forward(const Vec& x);
  Vec backward(const Vec& dy);
  void collect(std::vector<ParamView>& out, const std::string& prefix);
};

// Deterministic sinusoidal embedding, entrywise in [-1, 1].
Vec sinusoidal_time_embedding(int t, int dim);

// ---------------------------------------------------------------------------
// Networks
// ---------------------------------------------------------------------------

struct DenoiserConfig {
  int obs_dim = 22;
  int hidden = 128;
  int time_sin_dim = 32;
  int n_actions = 27;
  int attn_groups = 8;
  int attn_heads = 8;
  double head_init_scale = 0.0;  // zero-initialized prediction head
};

// D(s, y_t, t): predicts clean logits from noised logits, conditioned on the
// observation and a sinusoidal embedding of the diffusion step.
class DenoiserNetwork {
 public:
  DenoiserNetwork() = default;
  DenoiserNetwork(const DenoiserConfig& cfg, Rng& rng);

  Vec forward(const Vec& obs, const Vec& noised_logits, int t);
  // Accumulates parameter gradients; returns gradient w.r.t. noised_logits.
  Vec backward(const Vec& d_out);

  std::vector<ParamView> params();
  const DenoiserConfig& config() const { return cfg_; }
  std::string architecture_id() const;

 private:
  DenoiserConfig cfg_;

  DenseLayer state_dense_;
  LayerNorm state_norm_;
  MishLayer state_act_;

  DenseLayer time_dense1_;
  MishLayer time_act_;
  DenseLayer time_dense2_;

  struct TrunkStage {
    DenseLayer dense;
    LayerNorm norm;
    MishLayer act;
  };
  std::vector<TrunkStage> trunk_;          // 4 stages
  std::vector<ResidualBlock> residuals_;   // 4 blocks
  SelfAttention attention_;
  DenseLayer head_;
};

struct QNetworkConfig {
  int obs_dim = 22;
  int hidden = 128;
  int n_actions = 27;
};

// Observation -> 27 action values; three dense layers with Mish in between.
class QNetwork {
 public:
  QNetwork() = default;
  QNetwork(const QNetworkConfig& cfg, Rng& rng);

  Vec forward(const Vec& obs);
  Vec backward(const Vec& d_out);

  std::vector<ParamView> params();
  const QNetworkConfig& config() const { return cfg_; }
  std::string architecture_id() const;

 private:
  QNetworkConfig cfg_;
  DenseLayer l1_, l2_, l3_;
  MishLayer a1_, a2_;
};

// Adam with bias correction; beta1=0.9, beta2=0.999, eps=1e-8.
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  explicit AdamOptimizer(double learning_rate) : lr_(learning_rate) {}

  // Applies one update using the views' accumulated gradients.
  // Throws std::runtime_error on non-finite gradients.
  void step(std::vector<ParamView>& params);

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  long step_count() const { return t_; }

  // Serialized moment state, flattened in parameter order.
  Vec& first_moments() { return m_; }
  Vec& second_moments() { return v_; }
  void set_step_count(long t) { t_ = t; }

 private:
  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  Vec m_, v_;
};

}  // namespace dac
