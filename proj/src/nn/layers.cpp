#include "cmi/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "cmi/kernels/kernels.hpp"

namespace cmi::nn {

namespace k = cmi::kernels;

TensorRef ParameterLayout::Add(const std::string& name, int rows, int cols, bool decay) {
  TensorRef ref{size_, rows, cols};
  entries_.push_back({name, ref, decay});
  size_ += ref.size();
  return ref;
}

void FillNormal(float* params, const TensorRef& t, float stddev, Rng& rng) {
  float* p = params + t.offset;
  for (std::size_t i = 0; i < t.size(); ++i) p[i] = static_cast<float>(Normal(rng) * stddev);
}

void FillConstant(float* params, const TensorRef& t, float value) {
  std::fill_n(params + t.offset, t.size(), value);
}

namespace {
constexpr float kGeluC = 0.7978845608028654f;  // sqrt(2/pi)
constexpr float kLayerNormEps = 1e-5f;
}  // namespace

float Gelu(float x) {
  const float u = kGeluC * (x + 0.044715f * x * x * x);
  return 0.5f * x * (1.0f + std::tanh(u));
}

float GeluGrad(float x) {
  const float u = kGeluC * (x + 0.044715f * x * x * x);
  const float t = std::tanh(u);
  const float du = kGeluC * (1.0f + 3.0f * 0.044715f * x * x);
  return 0.5f * (1.0f + t) + 0.5f * x * (1.0f - t * t) * du;
}

// ---------------------------------------------------------------- Linear

Linear Linear::Create(ParameterLayout& layout, const std::string& name, int in, int out) {
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = layout.Add(name + ".weight", in, out, true);
  l.bias = layout.Add(name + ".bias", 1, out, false);
  return l;
}

void Linear::Init(float* params, Rng& rng, float stddev) const {
  FillNormal(params, weight, stddev, rng);
  FillConstant(params, bias, 0.0f);
}

void Linear::Forward(const float* params, const float* x, int rows, float* y) const {
  const float* w = params + weight.offset;
  const float* b = params + bias.offset;
  for (int r = 0; r < rows; ++r) std::memcpy(y + static_cast<long>(r) * out, b, sizeof(float) * out);
  k::GemmNN(x, w, y, rows, in, out, /*accumulate=*/true);
}

void Linear::Backward(const float* params, float* grads, const float* x, const float* dy, int rows,
                      float* dx, bool accumulate_dx) const {
  k::GemmTN(x, dy, grads + weight.offset, in, rows, out, /*accumulate=*/true);
  float* db = grads + bias.offset;
  for (int r = 0; r < rows; ++r) k::Axpy(1.0f, dy + static_cast<long>(r) * out, db, out);
  if (dx != nullptr) k::GemmNT(dy, params + weight.offset, dx, rows, out, in, accumulate_dx);
}

// ------------------------------------------------------------- LayerNorm

LayerNorm LayerNorm::Create(ParameterLayout& layout, const std::string& name, int dim) {
  LayerNorm n;
  n.dim = dim;
  n.gamma = layout.Add(name + ".gamma", 1, dim, false);
  n.beta = layout.Add(name + ".beta", 1, dim, false);
  return n;
}

void LayerNorm::Init(float* params) const {
  FillConstant(params, gamma, 1.0f);
  FillConstant(params, beta, 0.0f);
}

void LayerNorm::Forward(const float* params, const float* x, int rows, float* y,
                        Cache& cache) const {
  cache.xhat.resize(static_cast<std::size_t>(rows) * dim);
  cache.rstd.resize(rows);
  k::NormalizeRows(x, cache.xhat.data(), cache.rstd.data(), rows, dim, kLayerNormEps);
  const float* g = params + gamma.offset;
  const float* b = params + beta.offset;
  for (int r = 0; r < rows; ++r) {
    const float* xh = cache.xhat.data() + static_cast<long>(r) * dim;
    float* yr = y + static_cast<long>(r) * dim;
    for (int j = 0; j < dim; ++j) yr[j] = xh[j] * g[j] + b[j];
  }
}

void LayerNorm::Backward(const float* params, float* grads, const Cache& cache, const float* dy,
                         int rows, float* dx) const {
  const float* g = params + gamma.offset;
  float* dg = grads + gamma.offset;
  float* db = grads + beta.offset;
  std::vector<float> dxhat(dim);
  for (int r = 0; r < rows; ++r) {
    const float* xh = cache.xhat.data() + static_cast<long>(r) * dim;
    const float* dyr = dy + static_cast<long>(r) * dim;
    float mean_d = 0.0f;
    float mean_dx = 0.0f;
    for (int j = 0; j < dim; ++j) {
      dg[j] += dyr[j] * xh[j];
      db[j] += dyr[j];
      dxhat[j] = dyr[j] * g[j];
      mean_d += dxhat[j];
      mean_dx += dxhat[j] * xh[j];
    }
    mean_d /= static_cast<float>(dim);
    mean_dx /= static_cast<float>(dim);
    const float rs = cache.rstd[r];
    float* dxr = dx + static_cast<long>(r) * dim;
    for (int j = 0; j < dim; ++j) dxr[j] = rs * (dxhat[j] - mean_d - xh[j] * mean_dx);
  }
}

// --------------------------------------------------------- SelfAttention

SelfAttention SelfAttention::Create(ParameterLayout& layout, const std::string& name, int dim,
                                    int heads) {
  SelfAttention a;
  a.dim = dim;
  a.heads = heads;
  a.query = Linear::Create(layout, name + ".query", dim, dim);
  a.key = Linear::Create(layout, name + ".key", dim, dim);
  a.value = Linear::Create(layout, name + ".value", dim, dim);
  a.output = Linear::Create(layout, name + ".output", dim, dim);
  return a;
}

void SelfAttention::Init(float* params, Rng& rng, float stddev) const {
  query.Init(params, rng, stddev);
  key.Init(params, rng, stddev);
  value.Init(params, rng, stddev);
  output.Init(params, rng, stddev);
}

namespace {

// [len, heads*hd] -> [heads, len, hd]
void SplitHeads(const float* x, int len, int heads, int hd, float* out) {
  for (int h = 0; h < heads; ++h)
    for (int t = 0; t < len; ++t)
      std::memcpy(out + (static_cast<long>(h) * len + t) * hd,
                  x + static_cast<long>(t) * heads * hd + h * hd, sizeof(float) * hd);
}

// [heads, len, hd] -> [len, heads*hd]
void MergeHeads(const float* x, int len, int heads, int hd, float* out) {
  for (int h = 0; h < heads; ++h)
    for (int t = 0; t < len; ++t)
      std::memcpy(out + static_cast<long>(t) * heads * hd + h * hd,
                  x + (static_cast<long>(h) * len + t) * hd, sizeof(float) * hd);
}

}  // namespace

void SelfAttention::Forward(const float* params, const float* x, int len, float* y,
                            Cache& cache) const {
  const int hd = dim / heads;
  const std::size_t n = static_cast<std::size_t>(len) * dim;
  const float scale = 1.0f / std::sqrt(static_cast<float>(hd));
  cache.len = len;
  std::vector<float> tmp(n);
  cache.q.resize(n);
  cache.k.resize(n);
  cache.v.resize(n);
  query.Forward(params, x, len, tmp.data());
  SplitHeads(tmp.data(), len, heads, hd, cache.q.data());
  key.Forward(params, x, len, tmp.data());
  SplitHeads(tmp.data(), len, heads, hd, cache.k.data());
  value.Forward(params, x, len, tmp.data());
  SplitHeads(tmp.data(), len, heads, hd, cache.v.data());

  cache.probs.resize(static_cast<std::size_t>(heads) * len * len);
  std::vector<float> ctx_heads(n);
  for (int h = 0; h < heads; ++h) {
    const long hoff = static_cast<long>(h) * len * hd;
    float* p = cache.probs.data() + static_cast<long>(h) * len * len;
    k::GemmNT(cache.q.data() + hoff, cache.k.data() + hoff, p, len, hd, len);
    for (long i = 0; i < static_cast<long>(len) * len; ++i) p[i] *= scale;
    k::SoftmaxRows(p, len, len);
    k::GemmNN(p, cache.v.data() + hoff, ctx_heads.data() + hoff, len, len, hd);
  }
  cache.ctx.resize(n);
  MergeHeads(ctx_heads.data(), len, heads, hd, cache.ctx.data());
  output.Forward(params, cache.ctx.data(), len, y);
}

void SelfAttention::Backward(const float* params, float* grads, const float* x,
                             const Cache& cache, const float* dy, float* dx) const {
  const int len = cache.len;
  const int hd = dim / heads;
  const std::size_t n = static_cast<std::size_t>(len) * dim;
  const float scale = 1.0f / std::sqrt(static_cast<float>(hd));

  std::vector<float> dctx(n);
  output.Backward(params, grads, cache.ctx.data(), dy, len, dctx.data());
  std::vector<float> dctx_heads(n);
  SplitHeads(dctx.data(), len, heads, hd, dctx_heads.data());

  std::vector<float> dq(n), dk(n), dv(n);
  std::vector<float> dp(static_cast<std::size_t>(len) * len);
  for (int h = 0; h < heads; ++h) {
    const long hoff = static_cast<long>(h) * len * hd;
    const float* p = cache.probs.data() + static_cast<long>(h) * len * len;
    const float* dc = dctx_heads.data() + hoff;
    // dP = dctx * V^T ; dV = P^T * dctx
    k::GemmNT(dc, cache.v.data() + hoff, dp.data(), len, hd, len);
    k::GemmTN(p, dc, dv.data() + hoff, len, len, hd);
    // softmax backward, folded with the score scale
    for (int i = 0; i < len; ++i) {
      const float* pr = p + static_cast<long>(i) * len;
      float* dr = dp.data() + static_cast<long>(i) * len;
      const float s = k::Dot(pr, dr, len);
      for (int j = 0; j < len; ++j) dr[j] = pr[j] * (dr[j] - s) * scale;
    }
    k::GemmNN(dp.data(), cache.k.data() + hoff, dq.data() + hoff, len, len, hd);
    k::GemmTN(dp.data(), cache.q.data() + hoff, dk.data() + hoff, len, len, hd);
  }
  std::vector<float> merged(n);
  MergeHeads(dq.data(), len, heads, hd, merged.data());
  query.Backward(params, grads, x, merged.data(), len, dx, /*accumulate_dx=*/false);
  MergeHeads(dk.data(), len, heads, hd, merged.data());
  key.Backward(params, grads, x, merged.data(), len, dx, /*accumulate_dx=*/true);
  MergeHeads(dv.data(), len, heads, hd, merged.data());
  value.Backward(params, grads, x, merged.data(), len, dx, /*accumulate_dx=*/true);
}

// ------------------------------------------------------ TransformerBlock

TransformerBlock TransformerBlock::Create(ParameterLayout& layout, const std::string& name,
                                          int dim, int heads, int ff_dim) {
  TransformerBlock b;
  b.dim = dim;
  b.ff_dim = ff_dim;
  b.attention = SelfAttention::Create(layout, name + ".attention", dim, heads);
  b.norm1 = LayerNorm::Create(layout, name + ".norm1", dim);
  b.ff_in = Linear::Create(layout, name + ".ff_in", dim, ff_dim);
  b.ff_out = Linear::Create(layout, name + ".ff_out", ff_dim, dim);
  b.norm2 = LayerNorm::Create(layout, name + ".norm2", dim);
  return b;
}

void TransformerBlock::Init(float* params, Rng& rng, float stddev) const {
  attention.Init(params, rng, stddev);
  norm1.Init(params);
  ff_in.Init(params, rng, stddev);
  ff_out.Init(params, rng, stddev);
  norm2.Init(params);
}

void TransformerBlock::Forward(const float* params, const float* x, int len, float* out,
                               Cache* cache) const {
  Cache local;
  Cache& c = cache != nullptr ? *cache : local;
  const std::size_t n = static_cast<std::size_t>(len) * dim;
  c.len = len;
  c.input.assign(x, x + n);

  std::vector<float> r(n);
  attention.Forward(params, x, len, r.data(), c.attention);
  for (std::size_t i = 0; i < n; ++i) r[i] += x[i];
  c.x1.resize(n);
  norm1.Forward(params, r.data(), len, c.x1.data(), c.norm1);

  const std::size_t nf = static_cast<std::size_t>(len) * ff_dim;
  c.ff_pre.resize(nf);
  c.ff_act.resize(nf);
  ff_in.Forward(params, c.x1.data(), len, c.ff_pre.data());
  for (std::size_t i = 0; i < nf; ++i) c.ff_act[i] = Gelu(c.ff_pre[i]);
  ff_out.Forward(params, c.ff_act.data(), len, r.data());
  for (std::size_t i = 0; i < n; ++i) r[i] += c.x1[i];
  norm2.Forward(params, r.data(), len, out, c.norm2);
}

void TransformerBlock::Backward(const float* params, float* grads, const Cache& c,
                                const float* dout, float* dx) const {
  const int len = c.len;
  const std::size_t n = static_cast<std::size_t>(len) * dim;
  const std::size_t nf = static_cast<std::size_t>(len) * ff_dim;

  std::vector<float> dr2(n);
  norm2.Backward(params, grads, c.norm2, dout, len, dr2.data());

  std::vector<float> dact(nf);
  ff_out.Backward(params, grads, c.ff_act.data(), dr2.data(), len, dact.data());
  for (std::size_t i = 0; i < nf; ++i) dact[i] *= GeluGrad(c.ff_pre[i]);
  std::vector<float> dx1(dr2);
  ff_in.Backward(params, grads, c.x1.data(), dact.data(), len, dx1.data(), /*accumulate_dx=*/true);

  std::vector<float> dr1(n);
  norm1.Backward(params, grads, c.norm1, dx1.data(), len, dr1.data());
  attention.Backward(params, grads, c.input.data(), c.attention, dr1.data(), dx);
  for (std::size_t i = 0; i < n; ++i) dx[i] += dr1[i];
}

// ------------------------------------------------------------------ AdamW

AdamW::AdamW(const ParameterLayout& layout, AdamWConfig config)
    : config_(config),
      decay_mask_(layout.size(), 0),
      m_(layout.size(), 0.0f),
      v_(layout.size(), 0.0f) {
  for (const auto& e : layout.entries())
    if (e.decay) std::fill_n(decay_mask_.begin() + e.ref.offset, e.ref.size(), 1);
}

float AdamW::Step(std::span<float> params, std::span<float> grads) {
  double sq = 0.0;
  for (float g : grads) sq += static_cast<double>(g) * g;
  const float norm = static_cast<float>(std::sqrt(sq));
  float clip = 1.0f;
  if (config_.clip_norm > 0.0f && norm > config_.clip_norm) clip = config_.clip_norm / norm;

  ++step_;
  float lr = config_.learning_rate;
  if (config_.warmup_steps > 0 && step_ <= config_.warmup_steps)
    lr *= static_cast<float>(step_) / static_cast<float>(config_.warmup_steps);
  const float b1 = config_.beta1;
  const float b2 = config_.beta2;
  const float bc1 = 1.0f - std::pow(b1, static_cast<float>(step_));
  const float bc2 = 1.0f - std::pow(b2, static_cast<float>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const float g = grads[i] * clip;
    m_[i] = b1 * m_[i] + (1.0f - b1) * g;
    v_[i] = b2 * v_[i] + (1.0f - b2) * g * g;
    const float mhat = m_[i] / bc1;
    const float vhat = v_[i] / bc2;
    if (decay_mask_[i]) params[i] -= lr * config_.weight_decay * params[i];
    params[i] -= lr * mhat / (std::sqrt(vhat) + config_.epsilon);
  }
  return norm;
}

}  // namespace cmi::nn
