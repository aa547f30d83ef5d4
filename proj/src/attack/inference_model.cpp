#include "cmi/attack/inference_model.hpp"

#include <algorithm>
#include <cmath>

#include "cmi/common/error.hpp"
#include "cmi/common/rng.hpp"
#include "cmi/nn/archive.hpp"
#include "cmi/nn/batch.hpp"

namespace cmi::attack {

namespace {
constexpr double kLogitClamp = 35.0;
}

std::string_view ToString(Pooling pooling) { return pooling == Pooling::kCls ? "cls" : "mean"; }

Pooling ParsePooling(std::string_view text) {
  if (text == "mean") return Pooling::kMean;
  if (text == "cls") return Pooling::kCls;
  throw ConfigError("unknown pooling '" + std::string(text) + "'");
}

double Sigmoid(double logit) {
  const double z = std::clamp(logit, -kLogitClamp, kLogitClamp);
  return 1.0 / (1.0 + std::exp(-z));
}

void InferenceConfig::Validate() const {
  if (model_dim < 1 || num_layers < 0 || num_heads < 1 || ff_dim < 1)
    throw ConfigError("inference model dimensions must be positive");
  if (model_dim % num_heads != 0) throw ConfigError("inference model_dim must divide by num_heads");
  if (steps < 0 || batch_size < 1) throw ConfigError("bad inference training schedule");
  if (!(learning_rate > 0)) throw ConfigError("inference learning rate must be positive");
}

nlohmann::json InferenceConfig::ToJson() const {
  return {{"model_dim", model_dim},       {"num_layers", num_layers},
          {"num_heads", num_heads},       {"ff_dim", ff_dim},
          {"pooling", ToString(pooling)}, {"steps", steps},
          {"batch_size", batch_size},     {"learning_rate", learning_rate},
          {"weight_decay", weight_decay}, {"warmup_steps", warmup_steps},
          {"seed", seed}};
}

InferenceConfig InferenceConfig::FromJson(const nlohmann::json& j) {
  InferenceConfig c;
  c.model_dim = j.at("model_dim").get<int>();
  c.num_layers = j.at("num_layers").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.ff_dim = j.at("ff_dim").get<int>();
  c.pooling = ParsePooling(j.at("pooling").get<std::string>());
  c.steps = j.at("steps").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.learning_rate = j.at("learning_rate").get<float>();
  c.weight_decay = j.at("weight_decay").get<float>();
  c.warmup_steps = j.at("warmup_steps").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

InferenceModel::InferenceModel(int input_dim, const InferenceConfig& config)
    : input_dim_(input_dim), config_(config) {
  if (input_dim < 1) throw ConfigError("inference input dimension must be positive");
  config_.Validate();
  input_ = nn::Linear::Create(layout_, "input", input_dim, config_.model_dim);
  for (int l = 0; l < config_.num_layers; ++l)
    blocks_.push_back(nn::TransformerBlock::Create(layout_, "block" + std::to_string(l),
                                                   config_.model_dim, config_.num_heads,
                                                   config_.ff_dim));
  head_ = nn::Linear::Create(layout_, "head", config_.model_dim, 1);
  params_.assign(layout_.size(), 0.0f);
  Rng rng(DeriveSeed(config_.seed, "init"));
  input_.Init(params_.data(), rng, 1.0f / std::sqrt(static_cast<float>(input_dim)));
  for (const auto& b : blocks_) b.Init(params_.data(), rng, 0.02f);
  head_.Init(params_.data(), rng, 0.02f);
}

void InferenceModel::CheckInput(const Matrix& features) const {
  if (features.cols != input_dim_)
    throw ConfigError("inference model expects " + std::to_string(input_dim_) +
                      " features per token, got " + std::to_string(features.cols));
  if (features.rows < 1) throw ConfigError("inference input has no tokens");
}

double InferenceModel::Logit(const Matrix& features) const {
  CheckInput(features);
  const int len = features.rows;
  const int d = config_.model_dim;
  std::vector<float> h(static_cast<std::size_t>(len) * d);
  std::vector<float> next(h.size());
  input_.Forward(params_.data(), features.data.data(), len, h.data());
  for (const auto& b : blocks_) {
    b.Forward(params_.data(), h.data(), len, next.data(), nullptr);
    h.swap(next);
  }
  std::vector<float> pooled(d, 0.0f);
  if (config_.pooling == Pooling::kCls) {
    std::copy(h.begin(), h.begin() + d, pooled.begin());
  } else {
    for (int t = 0; t < len; ++t)
      for (int j = 0; j < d; ++j) pooled[j] += h[static_cast<std::size_t>(t) * d + j];
    for (float& v : pooled) v /= static_cast<float>(len);
  }
  float z = 0.0f;
  head_.Forward(params_.data(), pooled.data(), 1, &z);
  return z;
}

double InferenceModel::Score(const Matrix& features) const { return Sigmoid(Logit(features)); }

double InferenceModel::ExampleLoss(const Matrix& features, int label, float scale,
                                   float* grads) const {
  CheckInput(features);
  const int len = features.rows;
  const int d = config_.model_dim;
  const std::size_t n = static_cast<std::size_t>(len) * d;
  std::vector<std::vector<float>> acts(blocks_.size() + 1, std::vector<float>(n));
  std::vector<nn::TransformerBlock::Cache> caches(blocks_.size());
  input_.Forward(params_.data(), features.data.data(), len, acts[0].data());
  for (std::size_t l = 0; l < blocks_.size(); ++l)
    blocks_[l].Forward(params_.data(), acts[l].data(), len, acts[l + 1].data(), &caches[l]);
  const auto& top = acts.back();

  std::vector<float> pooled(d, 0.0f);
  if (config_.pooling == Pooling::kCls) {
    std::copy(top.begin(), top.begin() + d, pooled.begin());
  } else {
    for (int t = 0; t < len; ++t)
      for (int j = 0; j < d; ++j) pooled[j] += top[static_cast<std::size_t>(t) * d + j];
    for (float& v : pooled) v /= static_cast<float>(len);
  }
  float z = 0.0f;
  head_.Forward(params_.data(), pooled.data(), 1, &z);
  const double zc = std::clamp(static_cast<double>(z), -kLogitClamp, kLogitClamp);
  // softplus(z) - y z, computed stably.
  const double loss = std::max(zc, 0.0) + std::log1p(std::exp(-std::abs(zc))) - label * zc;
  if (!grads) return loss;

  float dz = static_cast<float>((Sigmoid(z) - label) * scale);
  if (std::abs(z) >= kLogitClamp) dz = 0.0f;
  std::vector<float> dpooled(d);
  head_.Backward(params_.data(), grads, pooled.data(), &dz, 1, dpooled.data());
  std::vector<float> dh(n, 0.0f);
  if (config_.pooling == Pooling::kCls) {
    std::copy(dpooled.begin(), dpooled.end(), dh.begin());
  } else {
    const float inv = 1.0f / static_cast<float>(len);
    for (int t = 0; t < len; ++t)
      for (int j = 0; j < d; ++j) dh[static_cast<std::size_t>(t) * d + j] = dpooled[j] * inv;
  }
  std::vector<float> dprev(n);
  for (std::size_t l = blocks_.size(); l-- > 0;) {
    blocks_[l].Backward(params_.data(), grads, caches[l], dh.data(), dprev.data());
    dh.swap(dprev);
  }
  input_.Backward(params_.data(), grads, features.data.data(), dh.data(), len, nullptr);
  return loss;
}

std::vector<double> InferenceModel::Train(std::span<const Matrix> features,
                                          std::span<const int> labels) {
  if (features.empty()) throw ConfigError("inference training set is empty");
  if (features.size() != labels.size()) throw ConfigError("features and labels differ in length");
  for (int y : labels)
    if (y != 0 && y != 1) throw ConfigError("inference labels must be 0 or 1");
  for (const auto& f : features) CheckInput(f);

  nn::AdamW optimizer(layout_, {.learning_rate = config_.learning_rate,
                                .weight_decay = config_.weight_decay,
                                .warmup_steps = config_.warmup_steps});
  Rng rng(DeriveSeed(config_.seed, "batching"));
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  std::vector<float> grads(params_.size());
  std::vector<double> trace;
  trace.reserve(config_.steps);
  const std::size_t batch = std::min<std::size_t>(config_.batch_size, features.size());
  for (int step = 0; step < config_.steps; ++step) {
    std::vector<std::size_t> picked;
    picked.reserve(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        order = Permutation(features.size(), rng);
        cursor = 0;
      }
      picked.push_back(order[cursor++]);
    }
    std::fill(grads.begin(), grads.end(), 0.0f);
    const float scale = 1.0f / static_cast<float>(batch);
    const double loss = nn::AccumulateGradients(picked.size(), grads, [&](std::size_t i, float* g) {
                          return ExampleLoss(features[picked[i]], labels[picked[i]], scale, g);
                        }) /
                        static_cast<double>(batch);
    if (!std::isfinite(loss)) throw TrainingError("inference loss became non-finite", step);
    optimizer.Step(params_, grads);
    trace.push_back(loss);
  }
  return trace;
}

void InferenceModel::Save(const std::filesystem::path& path, const nlohmann::json& extra) const {
  nlohmann::json header = {{"kind", "inference-model"},
                           {"input_dim", input_dim_},
                           {"config", config_.ToJson()},
                           {"extra", extra}};
  nn::WriteArchive(path, header, params_);
}

InferenceModel InferenceModel::Load(const std::filesystem::path& path, nlohmann::json* extra) {
  auto archive = nn::ReadArchive(path);
  if (archive.header.value("kind", "") != "inference-model")
    throw IoError(path.string() + " is not an inference model archive");
  InferenceModel model(archive.header.at("input_dim").get<int>(),
                       InferenceConfig::FromJson(archive.header.at("config")));
  if (archive.values.size() != model.params_.size())
    throw IoError(path.string() + " holds " + std::to_string(archive.values.size()) +
                  " weights, expected " + std::to_string(model.params_.size()));
  model.params_ = std::move(archive.values);
  if (extra) *extra = archive.header.value("extra", nlohmann::json{});
  return model;
}

}  // namespace cmi::attack
