#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cmi/common/rng.hpp"

// Hand-differentiated transformer pieces. Parameters live in one flat float
// buffer owned by the model; layers only hold offsets into it, so the same
// layer object drives forward passes over the weights and backward passes
// into a gradient buffer of identical layout.

namespace cmi::nn {

struct TensorRef {
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

class ParameterLayout {
 public:
  struct Entry {
    std::string name;
    TensorRef ref;
    bool decay;
  };

  TensorRef Add(const std::string& name, int rows, int cols, bool decay);
  std::size_t size() const { return size_; }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
  std::size_t size_ = 0;
};

void FillNormal(float* params, const TensorRef& t, float stddev, Rng& rng);
void FillConstant(float* params, const TensorRef& t, float value);

float Gelu(float x);
float GeluGrad(float x);

struct Linear {
  TensorRef weight;  // in x out
  TensorRef bias;    // 1 x out
  int in = 0;
  int out = 0;

  static Linear Create(ParameterLayout& layout, const std::string& name, int in, int out);
  void Init(float* params, Rng& rng, float stddev) const;

  // y[rows,out] = x[rows,in] * W + b
  void Forward(const float* params, const float* x, int rows, float* y) const;
  // Accumulates dW, db into `grads`; writes (or adds to) dx when non-null.
  void Backward(const float* params, float* grads, const float* x, const float* dy, int rows,
                float* dx, bool accumulate_dx = false) const;
};

struct LayerNorm {
  TensorRef gamma;
  TensorRef beta;
  int dim = 0;

  struct Cache {
    std::vector<float> xhat;
    std::vector<float> rstd;
  };

  static LayerNorm Create(ParameterLayout& layout, const std::string& name, int dim);
  void Init(float* params) const;
  void Forward(const float* params, const float* x, int rows, float* y, Cache& cache) const;
  void Backward(const float* params, float* grads, const Cache& cache, const float* dy, int rows,
                float* dx) const;
};

struct SelfAttention {
  Linear query;
  Linear key;
  Linear value;
  Linear output;
  int dim = 0;
  int heads = 0;

  struct Cache {
    int len = 0;
    std::vector<float> q;      // heads x len x head_dim
    std::vector<float> k;      // heads x len x head_dim
    std::vector<float> v;      // heads x len x head_dim
    std::vector<float> probs;  // heads x len x len
    std::vector<float> ctx;    // len x dim
  };

  static SelfAttention Create(ParameterLayout& layout, const std::string& name, int dim,
                              int heads);
  void Init(float* params, Rng& rng, float stddev) const;
  void Forward(const float* params, const float* x, int len, float* y, Cache& cache) const;
  // Writes dx (overwrite).
  void Backward(const float* params, float* grads, const float* x, const Cache& cache,
                const float* dy, float* dx) const;
};

// Post-LN transformer block:
//   x1  = LN1(x + Attn(x))
//   out = LN2(x1 + W2 gelu(W1 x1))
struct TransformerBlock {
  SelfAttention attention;
  LayerNorm norm1;
  Linear ff_in;
  Linear ff_out;
  LayerNorm norm2;
  int dim = 0;
  int ff_dim = 0;

  struct Cache {
    int len = 0;
    std::vector<float> input;
    SelfAttention::Cache attention;
    LayerNorm::Cache norm1;
    std::vector<float> x1;
    std::vector<float> ff_pre;
    std::vector<float> ff_act;
    LayerNorm::Cache norm2;
  };

  static TransformerBlock Create(ParameterLayout& layout, const std::string& name, int dim,
                                 int heads, int ff_dim);
  void Init(float* params, Rng& rng, float stddev) const;
  void Forward(const float* params, const float* x, int len, float* out, Cache* cache) const;
  void Backward(const float* params, float* grads, const Cache& cache, const float* dout,
                float* dx) const;
};

struct AdamWConfig {
  float learning_rate = 3e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
  float weight_decay = 0.01f;
  int warmup_steps = 0;
  float clip_norm = 1.0f;  // <= 0 disables clipping
};

// AdamW with decoupled weight decay, linear warmup and global-norm clipping.
class AdamW {
 public:
  AdamW(const ParameterLayout& layout, AdamWConfig config);

  // Returns the pre-clipping gradient norm.
  float Step(std::span<float> params, std::span<float> grads);
  long steps() const { return step_; }

 private:
  AdamWConfig config_;
  std::vector<unsigned char> decay_mask_;
  std::vector<float> m_;
  std::vector<float> v_;
  long step_ = 0;
};

}  // namespace cmi::nn
