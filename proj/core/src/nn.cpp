#include "dac/nn.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace dac {

void zero_grads(std::vector<ParamView>& params) {
  for (auto& p : params) std::memset(p.grad, 0, p.size * sizeof(double));
}

double grad_global_norm(const std::vector<ParamView>& params) {
  double sum = 0.0;
  for (const auto& p : params) {
    for (std::size_t i = 0; i < p.size; ++i) sum += p.grad[i] * p.grad[i];
  }
  return std::sqrt(sum);
}

void clip_grad_global_norm(std::vector<ParamView>& params, double max_norm) {
  const double norm = grad_global_norm(params);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (auto& p : params) {
    for (std::size_t i = 0; i < p.size; ++i) p.grad[i] *= scale;
  }
}

namespace {
double softplus(double x) {
  // Stable: max(x,0) + log1p(exp(-|x|))
  return (x > 0 ? x : 0.0) + std::log1p(std::exp(-std::abs(x)));
}
double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
}  // namespace

double mish(double x) { return x * std::tanh(softplus(x)); }

double mish_derivative(double x) {
  const double t = std::tanh(softplus(x));
  return t + x * (1.0 - t * t) * sigmoid(x);
}

// ---------------------------------------------------------------------------
// DenseLayer
// ---------------------------------------------------------------------------

void DenseLayer::init_uniform_fan_in(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(weight.cols));
  for (auto& w : weight.data) w = rng.uniform(-bound, bound);
  for (auto& b : bias) b = rng.uniform(-bound, bound);
}

Vec DenseLayer::forward(const Vec& x) {
  if (static_cast<int>(x.size()) != weight.cols) {
    throw std::domain_error("DenseLayer: input dimension mismatch");
  }
  input_cache = x;
  Vec y(bias);
  const int out = weight.rows, in = weight.cols;
  for (int o = 0; o < out; ++o) {
    const double* wrow = &weight.data[static_cast<std::size_t>(o) * in];
    double acc = 0.0;
    for (int i = 0; i < in; ++i) acc += wrow[i] * x[i];
    y[o] += acc;
  }
  return y;
}

Vec DenseLayer::backward(const Vec& dy) {
  const int out = weight.rows, in = weight.cols;
  Vec dx(in, 0.0);
  for (int o = 0; o < out; ++o) {
    const double g = dy[o];
    grad_bias[o] += g;
    double* gw = &grad_weight.data[static_cast<std::size_t>(o) * in];
    const double* wrow = &weight.data[static_cast<std::size_t>(o) * in];
    for (int i = 0; i < in; ++i) {
      gw[i] += g * input_cache[i];
      dx[i] += wrow[i] * g;
    }
  }
  return dx;
}

void DenseLayer::collect(std::vector<ParamView>& out, const std::string& prefix) {
  out.push_back({prefix + ".weight", weight.data.data(), grad_weight.data.data(),
                 weight.data.size()});
  out.push_back({prefix + ".bias", bias.data(), grad_bias.data(), bias.size()});
}

// ---------------------------------------------------------------------------
// LayerNorm
// ---------------------------------------------------------------------------

Vec LayerNorm::forward(const Vec& x) {
  const std::size_t n = gamma.size();
  if (x.size() != n) throw std::domain_error("LayerNorm: dimension mismatch");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double inv_sigma = 1.0 / std::sqrt(var + 1e-10);
  inv_sigma_cache = inv_sigma;
  xhat_cache.resize(n);
  Vec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    xhat_cache[i] = (x[i] - mean) * inv_sigma;
    y[i] = gamma[i] * xhat_cache[i] + beta[i];
  }
  return y;
}

Vec LayerNorm::backward(const Vec& dy) {
  const std::size_t n = gamma.size();
  Vec dxhat(n);
  double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    grad_gamma[i] += dy[i] * xhat_cache[i];
    grad_beta[i] += dy[i];
    dxhat[i] = dy[i] * gamma[i];
    mean_dxhat += dxhat[i];
    mean_dxhat_xhat += dxhat[i] * xhat_cache[i];
  }
  mean_dxhat /= static_cast<double>(n);
  mean_dxhat_xhat /= static_cast<double>(n);
  Vec dx(n);
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] = inv_sigma_cache *
            (dxhat[i] - mean_dxhat - xhat_cache[i] * mean_dxhat_xhat);
  }
  return dx;
}

void LayerNorm::collect(std::vector<ParamView>& out, const std::string& prefix) {
  out.push_back({prefix + ".gamma", gamma.data(), grad_gamma.data(), gamma.size()});
  out.push_back({prefix + ".beta", beta.data(), grad_beta.data(), beta.size()});
}

// ---------------------------------------------------------------------------
// Mish
// ---------------------------------------------------------------------------

Vec MishLayer::forward(const Vec& x) {
  input_cache = x;
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = mish(x[i]);
  return y;
}

Vec MishLayer::backward(const Vec& dy) {
  Vec dx(dy.size());
  for (std::size_t i = 0; i < dy.size(); ++i) {
    dx[i] = dy[i] * mish_derivative(input_cache[i]);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// ResidualBlock
// ---------------------------------------------------------------------------

Vec ResidualBlock::forward(const Vec& x) {
  Vec y = act.forward(norm.forward(dense.forward(x)));
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
  return y;
}

Vec ResidualBlock::backward(const Vec& dy) {
  Vec dx = dense.backward(norm.backward(act.backward(dy)));
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
  return dx;
}

void ResidualBlock::collect(std::vector<ParamView>& out, const std::string& prefix) {
  dense.collect(out, prefix + ".dense");
  norm.collect(out, prefix + ".norm");
}

// ---------------------------------------------------------------------------
// SelfAttention
// ---------------------------------------------------------------------------

SelfAttention::SelfAttention(int hidden, int seq, int heads)
    : seq_len(seq), n_heads(heads) {
  if (hidden % seq != 0) {
    throw std::domain_error("SelfAttention: hidden not divisible by seq_len");
  }
  d_model = hidden / seq;
  if (d_model % heads != 0) {
    throw std::domain_error("SelfAttention: d_model not divisible by n_heads");
  }
  head_dim = d_model / heads;
  wq = DenseLayer(d_model, d_model);
  wk = DenseLayer(d_model, d_model);
  wv = DenseLayer(d_model, d_model);
  wo = DenseLayer(d_model, d_model);
}

void SelfAttention::init(Rng& rng) {
  wq.init_uniform_fan_in(rng);
  wk.init_uniform_fan_in(rng);
  wv.init_uniform_fan_in(rng);
  wo.init_uniform_fan_in(rng);
}

Vec SelfAttention::forward(const Vec& x) {
  const int S = seq_len, D = d_model, H = n_heads, hd = head_dim;
  x_cache = Matrix(S, D);
  q_cache = Matrix(S, D);
  k_cache = Matrix(S, D);
  v_cache = Matrix(S, D);
  concat_cache = Matrix(S, D);
  attn_cache.assign(H, Matrix(S, S));

  // Token projections share the per-token Dense weights; matvec done inline
  // so the DenseLayer caches are not clobbered across tokens.
  auto project = [&](const DenseLayer& l, const double* in, double* out_row) {
    for (int o = 0; o < D; ++o) {
      const double* wrow = &l.weight.data[static_cast<std::size_t>(o) * D];
      double acc = l.bias[o];
      for (int i = 0; i < D; ++i) acc += wrow[i] * in[i];
      out_row[o] = acc;
    }
  };

  for (int s = 0; s < S; ++s) {
    const double* xs = &x[static_cast<std::size_t>(s) * D];
    std::memcpy(&x_cache.at(s, 0), xs, D * sizeof(double));
    project(wq, xs, &q_cache.at(s, 0));
    project(wk, xs, &k_cache.at(s, 0));
    project(wv, xs, &v_cache.at(s, 0));
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  for (int h = 0; h < H; ++h) {
    const int off = h * hd;
    Matrix& A = attn_cache[h];
    for (int s = 0; s < S; ++s) {
      double maxv = -1e300;
      for (int u = 0; u < S; ++u) {
        double sc = 0.0;
        for (int d = 0; d < hd; ++d) sc += q_cache.at(s, off + d) * k_cache.at(u, off + d);
        sc *= scale;
        A.at(s, u) = sc;
        if (sc > maxv) maxv = sc;
      }
      double z = 0.0;
      for (int u = 0; u < S; ++u) {
        A.at(s, u) = std::exp(A.at(s, u) - maxv);
        z += A.at(s, u);
      }
      for (int u = 0; u < S; ++u) A.at(s, u) /= z;
      for (int d = 0; d < hd; ++d) {
        double acc = 0.0;
        for (int u = 0; u < S; ++u) acc += A.at(s, u) * v_cache.at(u, off + d);
        concat_cache.at(s, off + d) = acc;
      }
    }
  }

  Vec y(x.size());
  for (int s = 0; s < S; ++s) {
    double* ys = &y[static_cast<std::size_t>(s) * D];
    project(wo, &concat_cache.at(s, 0), ys);
    for (int d = 0; d < D; ++d) ys[d] += x_cache.at(s, d);  // residual
  }
  return y;
}

Vec SelfAttention::backward(const Vec& dy) {
  const int S = seq_len, D = d_model, H = n_heads, hd = head_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  Matrix d_concat(S, D), dQ(S, D), dK(S, D), dV(S, D), dX(S, D);

  auto backprop_proj = [&](DenseLayer& l, const Matrix& in_rows, int s,
                           const double* dy_row, double* dx_row) {
    for (int o = 0; o < D; ++o) {
      const double g = dy_row[o];
      l.grad_bias[o] += g;
      double* gw = &l.grad_weight.data[static_cast<std::size_t>(o) * D];
      const double* wrow = &l.weight.data[static_cast<std::size_t>(o) * D];
      for (int i = 0; i < D; ++i) {
        gw[i] += g * in_rows.at(s, i);
        dx_row[i] += wrow[i] * g;
      }
    }
  };

  // Output projection + residual.
  for (int s = 0; s < S; ++s) {
    const double* dys = &dy[static_cast<std::size_t>(s) * D];
    backprop_proj(wo, concat_cache, s, dys, &d_concat.at(s, 0));
    for (int d = 0; d < D; ++d) dX.at(s, d) += dys[d];
  }

  for (int h = 0; h < H; ++h) {
    const int off = h * hd;
    const Matrix& A = attn_cache[h];
    Matrix dA(S, S);
    for (int s = 0; s < S; ++s) {
      for (int u = 0; u < S; ++u) {
        double acc = 0.0;
        for (int d = 0; d < hd; ++d) acc += d_concat.at(s, off + d) * v_cache.at(u, off + d);
        dA.at(s, u) = acc;
      }
      for (int u = 0; u < S; ++u) {
        for (int d = 0; d < hd; ++d) {
          dV.at(u, off + d) += A.at(s, u) * d_concat.at(s, off + d);
        }
      }
      // softmax row backward
      double dot = 0.0;
      for (int w = 0; w < S; ++w) dot += A.at(s, w) * dA.at(s, w);
      for (int u = 0; u < S; ++u) {
        const double ds = A.at(s, u) * (dA.at(s, u) - dot) * scale;
        for (int d = 0; d < hd; ++d) {
          dQ.at(s, off + d) += ds * k_cache.at(u, off + d);
          dK.at(u, off + d) += ds * q_cache.at(s, off + d);
        }
      }
    }
  }

  for (int s = 0; s < S; ++s) {
    backprop_proj(wq, x_cache, s, &dQ.at(s, 0), &dX.at(s, 0));
    backprop_proj(wk, x_cache, s, &dK.at(s, 0), &dX.at(s, 0));
    backprop_proj(wv, x_cache, s, &dV.at(s, 0), &dX.at(s, 0));
  }

  return dX.data;
}

void SelfAttention::collect(std::vector<ParamView>& out, const std::string& prefix) {
  wq.collect(out, prefix + ".wq");
  wk.collect(out, prefix + ".wk");
  wv.collect(out, prefix + ".wv");
  wo.collect(out, prefix + ".wo");
}

// ---------------------------------------------------------------------------
// Time embedding
// ---------------------------------------------------------------------------

Vec sinusoidal_time_embedding(int t, int dim) {
  Vec emb(dim, 0.0);
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                                 static_cast<double>(half));
    emb[2 * i] = std::sin(t * freq);
    emb[2 * i + 1] = std::cos(t * freq);
  }
  return emb;
}

// ---------------------------------------------------------------------------
// DenoiserNetwork
// ---------------------------------------------------------------------------

DenoiserNetwork::DenoiserNetwork(const DenoiserConfig& cfg, Rng& rng) : cfg_(cfg) {
  const int h = cfg.hidden;
  state_dense_ = DenseLayer(cfg.obs_dim, h);
  state_norm_ = LayerNorm(h);
  time_dense1_ = DenseLayer(cfg.time_sin_dim, h);
  time_dense2_ = DenseLayer(h, h);
  trunk_.resize(4);
  trunk_[0].dense = DenseLayer(2 * h + cfg.n_actions, h);
  for (int i = 1; i < 4; ++i) trunk_[i].dense = DenseLayer(h, h);
  for (auto& s : trunk_) s.norm = LayerNorm(h);
  residuals_.assign(4, ResidualBlock(h));
  attention_ = SelfAttention(h, cfg.attn_groups, cfg.attn_heads);
  head_ = DenseLayer(h, cfg.n_actions);

  state_dense_.init_uniform_fan_in(rng);
  time_dense1_.init_uniform_fan_in(rng);
  time_dense2_.init_uniform_fan_in(rng);
  for (auto& s : trunk_) s.dense.init_uniform_fan_in(rng);
  for (auto& r : residuals_) r.init(rng);
  attention_.init(rng);
  if (cfg.head_init_scale > 0.0) {
    for (auto& w : head_.weight.data) {
      w = rng.uniform(-cfg.head_init_scale, cfg.head_init_scale);
    }
  }
}

Vec DenoiserNetwork::forward(const Vec& obs, const Vec& noised_logits, int t) {
  if (static_cast<int>(obs.size()) != cfg_.obs_dim ||
      static_cast<int>(noised_logits.size()) != cfg_.n_actions) {
    throw std::domain_error("DenoiserNetwork: input dimension mismatch");
  }
  Vec s_emb = state_act_.forward(state_norm_.forward(state_dense_.forward(obs)));
  Vec t_emb = time_dense2_.forward(
      time_act_.forward(time_dense1_.forward(sinusoidal_time_embedding(t, cfg_.time_sin_dim))));

  Vec x;
  x.reserve(s_emb.size() + noised_logits.size() + t_emb.size());
  x.insert(x.end(), s_emb.begin(), s_emb.end());
  x.insert(x.end(), noised_logits.begin(), noised_logits.end());
  x.insert(x.end(), t_emb.begin(), t_emb.end());

  for (auto& stage : trunk_) {
    x = stage.act.forward(stage.norm.forward(stage.dense.forward(x)));
  }
  for (auto& r : residuals_) x = r.forward(x);
  x = attention_.forward(x);
  return head_.forward(x);
}

Vec DenoiserNetwork::backward(const Vec& d_out) {
  Vec d = head_.backward(d_out);
  d = attention_.backward(d);
  for (auto it = residuals_.rbegin(); it != residuals_.rend(); ++it) {
    d = it->backward(d);
  }
  for (auto it = trunk_.rbegin(); it != trunk_.rend(); ++it) {
    d = it->dense.backward(it->norm.backward(it->act.backward(d)));
  }
  const int h = cfg_.hidden;
  Vec d_state(d.begin(), d.begin() + h);
  Vec d_logits(d.begin() + h, d.begin() + h + cfg_.n_actions);
  Vec d_time(d.begin() + h + cfg_.n_actions, d.end());

  state_dense_.backward(state_norm_.backward(state_act_.backward(d_state)));
  time_dense1_.backward(time_act_.backward(time_dense2_.backward(d_time)));
  return d_logits;
}

std::vector<ParamView> DenoiserNetwork::params() {
  std::vector<ParamView> out;
  state_dense_.collect(out, "state.dense");
  state_norm_.collect(out, "state.norm");
  time_dense1_.collect(out, "time.dense1");
  time_dense2_.collect(out, "time.dense2");
  for (std::size_t i = 0; i < trunk_.size(); ++i) {
    const std::string p = "trunk" + std::to_string(i);
    trunk_[i].dense.collect(out, p + ".dense");
    trunk_[i].norm.collect(out, p + ".norm");
  }
  for (std::size_t i = 0; i < residuals_.size(); ++i) {
    residuals_[i].collect(out, "res" + std::to_string(i));
  }
  attention_.collect(out, "attn");
  head_.collect(out, "head");
  return out;
}

std::string DenoiserNetwork::architecture_id() const {
  std::ostringstream ss;
  ss << "denoiser/obs" << cfg_.obs_dim << "/h" << cfg_.hidden << "/sin"
     << cfg_.time_sin_dim << "/a" << cfg_.n_actions << "/g" << cfg_.attn_groups
     << "x" << cfg_.attn_heads;
  return ss.str();
}

// ---------------------------------------------------------------------------
// QNetwork
// ---------------------------------------------------------------------------

QNetwork::QNetwork(const QNetworkConfig& cfg, Rng& rng) : cfg_(cfg) {
  l1_ = DenseLayer(cfg.obs_dim, cfg.hidden);
  l2_ = DenseLayer(cfg.hidden, cfg.hidden);
  l3_ = DenseLayer(cfg.hidden, cfg.n_actions);
  l1_.init_uniform_fan_in(rng);
  l2_.init_uniform_fan_in(rng);
  l3_.init_uniform_fan_in(rng);
}

Vec QNetwork::forward(const Vec& obs) {
  return l3_.forward(a2_.forward(l2_.forward(a1_.forward(l1_.forward(obs)))));
}

Vec QNetwork::backward(const Vec& d_out) {
  return l1_.backward(a1_.backward(l2_.backward(a2_.backward(l3_.backward(d_out)))));
}

std::vector<ParamView> QNetwork::params() {
  std::vector<ParamView> out;
  l1_.collect(out, "l1");
  l2_.collect(out, "l2");
  l3_.collect(out, "l3");
  return out;
}

std::string QNetwork::architecture_id() const {
  std::ostringstream ss;
  ss << "qnet/obs" << cfg_.obs_dim << "/h" << cfg_.hidden << "/a" << cfg_.n_actions;
  return ss.str();
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

void AdamOptimizer::step(std::vector<ParamView>& params) {
  std::size_t total = 0;
  for (const auto& p : params) total += p.size;
  if (m_.empty()) {
    m_.assign(total, 0.0);
    v_.assign(total, 0.0);
  } else if (m_.size() != total) {
    throw std::runtime_error("AdamOptimizer: parameter count changed");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  std::size_t k = 0;
  for (auto& p : params) {
    for (std::size_t i = 0; i < p.size; ++i, ++k) {
      const double g = p.grad[i];
      if (!std::isfinite(g)) {
        throw std::runtime_error("AdamOptimizer: non-finite gradient");
      }
      m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g;
      v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g * g;
      const double mhat = m_[k] / bc1;
      const double vhat = v_[k] / bc2;
      p.value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace dac
