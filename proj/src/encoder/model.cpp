#include "cmi/encoder/model.hpp"

#include <cmath>
#include <cstring>

#include "cmi/common/error.hpp"
#include "cmi/common/rng.hpp"
#include "cmi/encoder/tokenizer.hpp"
#include "cmi/kernels/kernels.hpp"
#include "cmi/nn/archive.hpp"

namespace cmi::encoder {

namespace {
constexpr float kInitStd = 0.02f;
constexpr const char* kArchiveKind = "encoder";
}  // namespace

void EncoderConfig::Validate() const {
  if (vocab_size < kMinVocabSize) throw ConfigError("encoder vocab_size below byte vocabulary");
  if (num_layers < 1) throw ConfigError("encoder num_layers must be positive");
  if (hidden_dim < 1 || num_heads < 1 || hidden_dim % num_heads != 0)
    throw ConfigError("encoder hidden_dim must be a positive multiple of num_heads");
  if (ff_dim < 1) throw ConfigError("encoder ff_dim must be positive");
  if (max_positions < 4) throw ConfigError("encoder max_positions must be at least 4");
}

nlohmann::json EncoderConfig::ToJson() const {
  return {{"vocab_size", vocab_size}, {"num_layers", num_layers}, {"hidden_dim", hidden_dim},
          {"num_heads", num_heads},   {"ff_dim", ff_dim},         {"max_positions", max_positions},
          {"architecture_tag", architecture_tag}};
}

EncoderConfig EncoderConfig::FromJson(const nlohmann::json& j) {
  EncoderConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.num_layers = j.at("num_layers").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.ff_dim = j.at("ff_dim").get<int>();
  c.max_positions = j.at("max_positions").get<int>();
  c.architecture_tag = j.at("architecture_tag").get<std::string>();
  return c;
}

const Matrix& EncodingResult::layer(int index) const {
  if (index < 1 || index > num_layers())
    throw AccessViolation("layer " + std::to_string(index) + " not present (have " +
                          std::to_string(num_layers()) + ")");
  return layer_outputs[index - 1];
}

EncoderModel::EncoderModel(const EncoderConfig& config) : config_(config) {
  config_.Validate();
  BuildLayout();
  params_.assign(layout_.size(), 0.0f);
}

EncoderModel::EncoderModel(const EncoderConfig& config, std::uint64_t init_seed)
    : EncoderModel(config) {
  Rng rng(init_seed);
  nn::FillNormal(params_.data(), token_embedding_, kInitStd, rng);
  nn::FillNormal(params_.data(), position_embedding_, kInitStd, rng);
  embedding_norm_.Init(params_.data());
  for (const auto& b : blocks_) b.Init(params_.data(), rng, kInitStd);
  mlm_head_.Init(params_.data(), rng, kInitStd);
}

void EncoderModel::BuildLayout() {
  const int d = config_.hidden_dim;
  token_embedding_ = layout_.Add("embeddings.token", config_.vocab_size, d, true);
  position_embedding_ = layout_.Add("embeddings.position", config_.max_positions, d, true);
  embedding_norm_ = nn::LayerNorm::Create(layout_, "embeddings.norm", d);
  for (int l = 0; l < config_.num_layers; ++l)
    blocks_.push_back(nn::TransformerBlock::Create(layout_, "layer" + std::to_string(l + 1), d,
                                                   config_.num_heads, config_.ff_dim));
  mlm_head_ = nn::Linear::Create(layout_, "mlm_head", d, config_.vocab_size);
}

void EncoderModel::Embed(std::span<const int> ids, std::vector<float>& sum) const {
  const int d = config_.hidden_dim;
  const int len = static_cast<int>(ids.size());
  if (len < 1 || len > config_.max_positions)
    throw InputError("sequence length " + std::to_string(len) + " outside [1, " +
                     std::to_string(config_.max_positions) + "]");
  sum.resize(static_cast<std::size_t>(len) * d);
  const float* tok = params_.data() + token_embedding_.offset;
  const float* pos = params_.data() + position_embedding_.offset;
  for (int t = 0; t < len; ++t) {
    const int id = ids[t];
    if (id < 0 || id >= config_.vocab_size)
      throw InputError("token id " + std::to_string(id) + " outside the encoder vocabulary");
    float* out = sum.data() + static_cast<long>(t) * d;
    const float* te = tok + static_cast<long>(id) * d;
    const float* pe = pos + static_cast<long>(t) * d;
    for (int j = 0; j < d; ++j) out[j] = te[j] + pe[j];
  }
}

EncodingResult EncoderModel::Forward(std::span<const int> ids) const {
  const int d = config_.hidden_dim;
  const int len = static_cast<int>(ids.size());
  EncodingResult result;
  result.token_ids.assign(ids.begin(), ids.end());
  std::vector<float> sum;
  Embed(ids, sum);
  nn::LayerNorm::Cache norm_cache;
  std::vector<float> x(sum.size());
  embedding_norm_.Forward(params_.data(), sum.data(), len, x.data(), norm_cache);
  for (const auto& block : blocks_) {
    Matrix out(len, d);
    block.Forward(params_.data(), x.data(), len, out.data.data(), nullptr);
    x = out.data;
    result.layer_outputs.push_back(std::move(out));
  }
  return result;
}

Matrix EncoderModel::ForwardLast(std::span<const int> ids) const {
  EncodingResult r = Forward(ids);
  return std::move(r.layer_outputs.back());
}

void EncoderModel::ForwardTrace(std::span<const int> ids, Trace& trace) const {
  const int d = config_.hidden_dim;
  const int len = static_cast<int>(ids.size());
  trace.ids.assign(ids.begin(), ids.end());
  std::vector<float> sum;
  Embed(ids, sum);
  std::vector<float> x(sum.size());
  embedding_norm_.Forward(params_.data(), sum.data(), len, x.data(), trace.embedding_norm);
  trace.blocks.resize(blocks_.size());
  std::vector<float> out(x.size());
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    blocks_[l].Forward(params_.data(), x.data(), len, out.data(), &trace.blocks[l]);
    std::swap(x, out);
  }
  trace.last = Matrix(len, d);
  trace.last.data = std::move(x);
}

void EncoderModel::Backward(const Trace& trace, const float* d_last, float* grads) const {
  const int d = config_.hidden_dim;
  const int len = static_cast<int>(trace.ids.size());
  std::vector<float> dy(d_last, d_last + static_cast<std::size_t>(len) * d);
  std::vector<float> dx(dy.size());
  for (std::size_t l = blocks_.size(); l-- > 0;) {
    blocks_[l].Backward(params_.data(), grads, trace.blocks[l], dy.data(), dx.data());
    std::swap(dy, dx);
  }
  embedding_norm_.Backward(params_.data(), grads, trace.embedding_norm, dy.data(), len, dx.data());
  float* gtok = grads + token_embedding_.offset;
  float* gpos = grads + position_embedding_.offset;
  for (int t = 0; t < len; ++t) {
    const float* row = dx.data() + static_cast<long>(t) * d;
    kernels::Axpy(1.0f, row, gtok + static_cast<long>(trace.ids[t]) * d, d);
    kernels::Axpy(1.0f, row, gpos + static_cast<long>(t) * d, d);
  }
}

double EncoderModel::MlmLoss(std::span<const int> corrupted, std::span<const MaskedTarget> targets,
                             float scale, float* grads) const {
  if (targets.empty()) return 0.0;
  const int d = config_.hidden_dim;
  const int vocab = config_.vocab_size;
  const int m = static_cast<int>(targets.size());
  Trace trace;
  ForwardTrace(corrupted, trace);

  std::vector<float> gathered(static_cast<std::size_t>(m) * d);
  for (int i = 0; i < m; ++i) {
    const auto src = trace.last.row(targets[i].position);
    std::memcpy(gathered.data() + static_cast<long>(i) * d, src.data(), sizeof(float) * d);
  }
  std::vector<float> logits(static_cast<std::size_t>(m) * vocab);
  mlm_head_.Forward(params_.data(), gathered.data(), m, logits.data());
  kernels::SoftmaxRows(logits.data(), m, vocab);
  double loss = 0.0;
  for (int i = 0; i < m; ++i) {
    const float p = logits[static_cast<long>(i) * vocab + targets[i].token];
    loss -= std::log(std::max(p, 1e-30f));
  }
  loss /= m;
  if (grads == nullptr) return loss;

  // d(scale * mean CE)/d logits = scale * (softmax - onehot) / m
  const float coef = scale / static_cast<float>(m);
  for (int i = 0; i < m; ++i) {
    float* row = logits.data() + static_cast<long>(i) * vocab;
    row[targets[i].token] -= 1.0f;
    for (int j = 0; j < vocab; ++j) row[j] *= coef;
  }
  std::vector<float> dgathered(gathered.size());
  mlm_head_.Backward(params_.data(), grads, gathered.data(), logits.data(), m, dgathered.data());
  std::vector<float> dlast(trace.last.data.size(), 0.0f);
  for (int i = 0; i < m; ++i)
    kernels::Axpy(1.0f, dgathered.data() + static_cast<long>(i) * d,
                  dlast.data() + static_cast<long>(targets[i].position) * d, d);
  Backward(trace, dlast.data(), grads);
  return loss;
}

void EncoderModel::Save(const std::filesystem::path& path, const nlohmann::json& extra) const {
  nlohmann::json header = {{"kind", kArchiveKind}, {"config", config_.ToJson()}};
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& e : layout_.entries())
    tensors.push_back({{"name", e.name}, {"rows", e.ref.rows}, {"cols", e.ref.cols}});
  header["tensors"] = tensors;
  if (!extra.is_null()) header["extra"] = extra;
  nn::WriteArchive(path, header, params_);
}

EncoderModel EncoderModel::Load(const std::filesystem::path& path, nlohmann::json* extra) {
  nn::WeightArchive archive = nn::ReadArchive(path);
  if (archive.header.value("kind", "") != kArchiveKind)
    throw IoError(path.string() + " is not an encoder checkpoint");
  EncoderModel model(EncoderConfig::FromJson(archive.header.at("config")));
  if (archive.values.size() != model.params_.size())
    throw IoError(path.string() + ": parameter count does not match its config");
  model.params_ = std::move(archive.values);
  if (extra != nullptr) *extra = archive.header.value("extra", nlohmann::json{});
  return model;
}

}  // namespace cmi::encoder
