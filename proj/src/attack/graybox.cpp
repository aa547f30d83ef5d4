#include "cmi/attack/graybox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cmi/common/error.hpp"
#include "cmi/common/rng.hpp"
#include "cmi/nn/batch.hpp"

namespace cmi::attack {

std::string_view ToString(KdLossKind kind) { return kind == KdLossKind::kCos ? "cos" : "mse"; }

KdLossKind ParseKdLoss(std::string_view text) {
  if (text == "mse") return KdLossKind::kMse;
  if (text == "cos") return KdLossKind::kCos;
  if (text == "nst" || text == "pkd")
    throw ConfigError("kd loss '" + std::string(text) +
                      "' needs inner teacher layers and is not supported");
  throw ConfigError("unknown kd loss '" + std::string(text) + "'");
}

namespace {

constexpr double kNormFloor = 1e-12;

void CheckShapes(const Matrix& teacher, const Matrix& student) {
  if (teacher.rows != student.rows || teacher.cols != student.cols)
    throw ConfigError("kd loss shape mismatch: teacher " + std::to_string(teacher.rows) + "x" +
                      std::to_string(teacher.cols) + ", student " + std::to_string(student.rows) +
                      "x" + std::to_string(student.cols));
  if (teacher.rows == 0) throw ConfigError("kd loss over zero tokens");
}

double KdImpl(const Matrix& teacher, const Matrix& student, KdLossKind kind, Matrix* grad) {
  CheckShapes(teacher, student);
  const int rows = teacher.rows;
  const int d = teacher.cols;
  if (grad) *grad = Matrix(rows, d);
  const double inv_rows = 1.0 / rows;
  double total = 0.0;
  for (int r = 0; r < rows; ++r) {
    const float* t = &teacher.data[static_cast<std::size_t>(r) * d];
    const float* s = &student.data[static_cast<std::size_t>(r) * d];
    if (kind == KdLossKind::kMse) {
      double sq = 0.0;
      for (int j = 0; j < d; ++j) {
        const double diff = static_cast<double>(s[j]) - t[j];
        sq += diff * diff;
        if (grad) (*grad)(r, j) = static_cast<float>(2.0 * diff * inv_rows);
      }
      total += sq;
    } else {
      double dot = 0.0, tt = 0.0, ss = 0.0;
      for (int j = 0; j < d; ++j) {
        dot += static_cast<double>(t[j]) * s[j];
        tt += static_cast<double>(t[j]) * t[j];
        ss += static_cast<double>(s[j]) * s[j];
      }
      const double tn = std::max(std::sqrt(tt), kNormFloor);
      const double sn = std::max(std::sqrt(ss), kNormFloor);
      const double cos = dot / (tn * sn);
      total += 1.0 - cos;
      if (grad)
        for (int j = 0; j < d; ++j)
          (*grad)(r, j) =
              static_cast<float>(-(t[j] / (tn * sn) - cos * s[j] / (sn * sn)) * inv_rows);
    }
  }
  return total * inv_rows;
}

}  // namespace

double KdLoss(const Matrix& teacher, const Matrix& student, KdLossKind kind) {
  return KdImpl(teacher, student, kind, nullptr);
}

double KdLossGradient(const Matrix& teacher, const Matrix& student, KdLossKind kind, Matrix& grad) {
  return KdImpl(teacher, student, kind, &grad);
}

double MeanKdLoss(const encoder::Oracle& teacher, const encoder::EncoderModel& student,
                  const encoder::Tokenizer& tokenizer,
                  std::span<const corpus::CodeSnippet> snippets, KdLossKind kind) {
  if (snippets.empty()) throw ConfigError("kd evaluation set is empty");
  const int max_pos = student.config().max_positions;
  const auto losses = nn::ParallelMap<double>(snippets.size(), [&](std::size_t i) {
    const auto ids = tokenizer.EncodeInput(snippets[i].code, std::nullopt, max_pos);
    return KdLoss(teacher.EncodeLast(snippets[i].code, std::nullopt), student.ForwardLast(ids), kind);
  });
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

ShadowModel DistillShadow(const encoder::Oracle& teacher, const encoder::Tokenizer& tokenizer,
                          std::span<const corpus::CodeSnippet> known_members,
                          const encoder::EncoderConfig& student_config,
                          const DistillConfig& config, KdLossKind kind,
                          std::span<const corpus::CodeSnippet> heldout,
                          const encoder::EncoderModel* init) {
  if (teacher.level() != encoder::AccessLevel::kGray)
    throw AccessViolation("shadow distillation takes a gray handle, got " +
                          std::string(encoder::ToString(teacher.level())));
  if (known_members.empty()) throw ConfigError("shadow distillation needs known members");
  if (config.steps < 0 || config.batch_size < 1) throw ConfigError("bad distillation schedule");
  if (student_config.hidden_dim != teacher.hidden_dim())
    throw ConfigError("student hidden_dim must equal the teacher's output width");
  if (init && !(init->config() == student_config))
    throw ConfigError("initial student does not match the student config");

  ShadowModel shadow{init ? *init : encoder::EncoderModel(student_config, DeriveSeed(config.seed, "init")),
                     "target", kind, {}, std::nullopt, std::nullopt};
  encoder::EncoderModel& student = shadow.encoder;
  const int max_pos = student_config.max_positions;

  // Teacher responses are fixed, so query each known member once.
  struct Example {
    std::vector<int> ids;
    Matrix target;
  };
  const auto examples = nn::ParallelMap<Example>(known_members.size(), [&](std::size_t i) {
    const auto& s = known_members[i];
    Example ex{tokenizer.EncodeInput(s.code, std::nullopt, max_pos),
               teacher.EncodeLast(s.code, std::nullopt)};
    if (static_cast<int>(ex.ids.size()) != ex.target.rows)
      throw ConfigError("teacher and student tokenizations disagree on '" + s.id + "'");
    return ex;
  });

  if (!heldout.empty()) shadow.heldout_initial = MeanKdLoss(teacher, student, tokenizer, heldout, kind);

  nn::AdamW optimizer(student.layout(), {.learning_rate = config.learning_rate,
                                         .weight_decay = config.weight_decay,
                                         .warmup_steps = config.warmup_steps});
  Rng rng(DeriveSeed(config.seed, "batching"));
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  std::vector<float> grads(student.parameters().size());
  const std::size_t batch = std::min<std::size_t>(config.batch_size, examples.size());
  for (int step = 0; step < config.steps; ++step) {
    std::vector<std::size_t> picked;
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        order = Permutation(examples.size(), rng);
        cursor = 0;
      }
      picked.push_back(order[cursor++]);
    }
    std::fill(grads.begin(), grads.end(), 0.0f);
    const float scale = 1.0f / static_cast<float>(batch);
    const double loss = nn::AccumulateGradients(picked.size(), grads, [&](std::size_t i, float* g) {
                          const auto& ex = examples[picked[i]];
                          encoder::EncoderModel::Trace trace;
                          student.ForwardTrace(ex.ids, trace);
                          Matrix d_last;
                          const double l = KdLossGradient(ex.target, trace.last, kind, d_last);
                          for (float& v : d_last.data) v *= scale;
                          student.Backward(trace, d_last.data.data(), g);
                          return l;
                        }) /
                        static_cast<double>(batch);
    if (!std::isfinite(loss)) throw TrainingError("distillation loss became non-finite", step);
    optimizer.Step(student.mutable_parameters(), grads);
    shadow.distill_trace.push_back(loss);
  }

  if (!heldout.empty()) shadow.heldout_final = MeanKdLoss(teacher, student, tokenizer, heldout, kind);
  return shadow;
}

Matrix DirectFeatures(const encoder::Oracle& oracle, const corpus::CodeSnippet& snippet) {
  return oracle.EncodeLast(snippet.code, std::nullopt);
}

TrainedAttack TrainGrayboxDirect(const corpus::SplitBundle& bundle, const encoder::Oracle& oracle,
                                 const InferenceConfig& config) {
  if (oracle.level() != encoder::AccessLevel::kGray)
    throw AccessViolation("direct gray-box modeling takes a gray handle, got " +
                          std::string(encoder::ToString(oracle.level())));
  if (bundle.setting != corpus::Setting::kGraybox)
    throw ConfigError("gray-box training needs a graybox bundle");
  if (bundle.train.empty()) throw ConfigError("gray-box train set is empty");
  return TrainClassifier(
      bundle.train, [&](const corpus::CodeSnippet& s) { return DirectFeatures(oracle, s); },
      oracle.hidden_dim(), config);
}

TrainedAttack TrainGrayboxShadow(const corpus::SplitBundle& bundle, const ShadowModel& shadow,
                                 const encoder::Tokenizer& tokenizer,
                                 const LayerSelection& selection, const InferenceConfig& config) {
  if (bundle.setting != corpus::Setting::kGraybox)
    throw ConfigError("gray-box training needs a graybox bundle");
  if (bundle.train.empty()) throw ConfigError("gray-box train set is empty");
  const encoder::Oracle own(encoder::AccessLevel::kWhite, shadow.encoder, tokenizer);
  selection.CheckAgainst(own.num_layers());
  return TrainClassifier(
      bundle.train,
      [&](const corpus::CodeSnippet& s) { return WhiteboxFeatures(own, s, selection); },
      selection.size() * own.hidden_dim(), config);
}

std::string_view ToString(MetaLearner meta) {
  return meta == MetaLearner::kLogistic ? "logistic" : "gbr";
}

MetaLearner ParseMetaLearner(std::string_view text) {
  if (text == "logistic") return MetaLearner::kLogistic;
  if (text == "gbr") return MetaLearner::kGradientBoost;
  throw ConfigError("unknown meta learner '" + std::string(text) + "'");
}

namespace {

using Tree = std::vector<EnsembleModel::TreeNode>;

double TreePredict(const Tree& tree, std::span<const double> row) {
  int node = 0;
  while (tree[node].feature >= 0)
    node = row[tree[node].feature] <= tree[node].threshold ? tree[node].left : tree[node].right;
  return tree[node].value;
}

// Least-squares regression tree grown to `depth` by exhaustive split search.
int GrowNode(Tree& tree, std::span<const std::vector<double>> x, std::span<const double> target,
             std::vector<int> rows, int depth) {
  double sum = 0.0;
  for (int r : rows) sum += target[r];
  const int id = static_cast<int>(tree.size());
  tree.push_back({-1, 0.0, sum / static_cast<double>(rows.size()), -1, -1});
  if (depth == 0 || rows.size() < 2) return id;

  const int features = static_cast<int>(x[0].size());
  double best_gain = 1e-12;
  int best_feature = -1;
  double best_threshold = 0.0;
  const double n = static_cast<double>(rows.size());
  for (int f = 0; f < features; ++f) {
    std::sort(rows.begin(), rows.end(), [&](int a, int b) {
      if (x[a][f] != x[b][f]) return x[a][f] < x[b][f];
      return a < b;
    });
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      left_sum += target[rows[i]];
      const double lo = x[rows[i]][f];
      const double hi = x[rows[i + 1]][f];
      if (lo == hi) continue;
      const double nl = static_cast<double>(i + 1);
      const double nr = n - nl;
      const double right_sum = sum - left_sum;
      // Reduction in squared error relative to the unsplit node.
      const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - sum * sum / n;
      if (gain > best_gain) {
        best_gain = gain;
        best_feature = f;
        best_threshold = lo + (hi - lo) / 2.0;
      }
    }
  }
  if (best_feature < 0) return id;
  std::vector<int> left, right;
  for (int r : rows) (x[r][best_feature] <= best_threshold ? left : right).push_back(r);
  tree[id].feature = best_feature;
  tree[id].threshold = best_threshold;
  const int l = GrowNode(tree, x, target, std::move(left), depth - 1);
  const int rr = GrowNode(tree, x, target, std::move(right), depth - 1);
  tree[id].left = l;
  tree[id].right = rr;
  return id;
}

}  // namespace

EnsembleModel EnsembleModel::Fit(std::span<const std::vector<double>> base_scores,
                                 std::span<const int> labels, MetaLearner meta,
                                 const MetaConfig& config, std::vector<std::string> base_names) {
  if (base_scores.empty()) throw ConfigError("ensemble fit needs examples");
  if (base_scores.size() != labels.size()) throw ConfigError("base scores and labels differ in length");
  const int m = static_cast<int>(base_scores[0].size());
  if (m < 1) throw ConfigError("ensemble fit needs at least one base attack");
  for (const auto& row : base_scores) {
    if (static_cast<int>(row.size()) != m) throw ConfigError("ragged base score matrix");
    for (double v : row)
      if (!std::isfinite(v)) throw ConfigError("base score is not finite");
  }
  int positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw ConfigError("ensemble labels must be 0 or 1");
    positives += y;
  }
  if (positives == 0 || positives == static_cast<int>(labels.size()))
    throw DegenerateFitError("ensemble labels are all one class");
  if (!base_names.empty() && static_cast<int>(base_names.size()) != m)
    throw ConfigError("base name count does not match the score columns");

  EnsembleModel model;
  model.meta_ = meta;
  model.num_bases_ = m;
  model.base_names_ = std::move(base_names);
  const std::size_t n = labels.size();

  if (meta == MetaLearner::kLogistic) {
    // Newton iterations on the L2-penalised log-likelihood; the bias is not
    // penalised.
    const int p = m + 1;
    std::vector<double> w(p, 0.0);
    for (int iter = 0; iter < 100; ++iter) {
      std::vector<double> grad(p, 0.0);
      std::vector<double> hess(static_cast<std::size_t>(p) * p, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        double z = w[m];
        for (int j = 0; j < m; ++j) z += w[j] * base_scores[i][j];
        const double prob = Sigmoid(z);
        const double r = prob - labels[i];
        const double s = prob * (1.0 - prob);
        for (int a = 0; a < p; ++a) {
          const double xa = a < m ? base_scores[i][a] : 1.0;
          grad[a] += r * xa;
          for (int b = 0; b < p; ++b) hess[a * p + b] += s * xa * (b < m ? base_scores[i][b] : 1.0);
        }
      }
      for (int j = 0; j < m; ++j) {
        grad[j] += config.l2_penalty * w[j];
        hess[j * p + j] += config.l2_penalty;
      }
      hess[m * p + m] += 1e-9;
      // Solve hess * step = grad by Gaussian elimination with pivoting.
      std::vector<double> step = grad;
      std::vector<double> a = hess;
      for (int c = 0; c < p; ++c) {
        int pivot = c;
        for (int r = c + 1; r < p; ++r)
          if (std::abs(a[r * p + c]) > std::abs(a[pivot * p + c])) pivot = r;
        if (std::abs(a[pivot * p + c]) < 1e-300) throw DegenerateFitError("singular logistic Hessian");
        if (pivot != c) {
          for (int k = 0; k < p; ++k) std::swap(a[c * p + k], a[pivot * p + k]);
          std::swap(step[c], step[pivot]);
        }
        for (int r = c + 1; r < p; ++r) {
          const double f = a[r * p + c] / a[c * p + c];
          for (int k = c; k < p; ++k) a[r * p + k] -= f * a[c * p + k];
          step[r] -= f * step[c];
        }
      }
      for (int c = p - 1; c >= 0; --c) {
        for (int k = c + 1; k < p; ++k) step[c] -= a[c * p + k] * step[k];
        step[c] /= a[c * p + c];
      }
      double change = 0.0;
      for (int j = 0; j < p; ++j) {
        w[j] -= step[j];
        change = std::max(change, std::abs(step[j]));
      }
      if (change < 1e-10) break;
    }
    model.weights_.assign(w.begin(), w.begin() + m);
    model.bias_ = w[m];
    return model;
  }

  if (config.rounds < 0 || config.depth < 1) throw ConfigError("bad gradient-boost settings");
  model.shrinkage_ = config.learning_rate;
  model.init_ = static_cast<double>(positives) / static_cast<double>(n);
  std::vector<double> fitted(n, model.init_);
  std::vector<double> residual(n);
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (int round = 0; round < config.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = labels[i] - fitted[i];
    Tree tree;
    GrowNode(tree, base_scores, residual, all, config.depth);
    for (std::size_t i = 0; i < n; ++i) fitted[i] += model.shrinkage_ * TreePredict(tree, base_scores[i]);
    model.trees_.push_back(std::move(tree));
  }
  return model;
}

double EnsembleModel::Predict(std::span<const double> row) const {
  if (static_cast<int>(row.size()) != num_bases_)
    throw ConfigError("ensemble expects " + std::to_string(num_bases_) + " base scores");
  double out = 0.0;
  if (meta_ == MetaLearner::kLogistic) {
    double z = bias_;
    for (int j = 0; j < num_bases_; ++j) z += weights_[j] * row[j];
    out = Sigmoid(z);
  } else {
    out = init_;
    for (const auto& tree : trees_) out += shrinkage_ * TreePredict(tree, row);
  }
  return std::clamp(out, 0.0, 1.0);
}

nlohmann::json EnsembleModel::ToJson() const {
  nlohmann::json j = {{"meta", ToString(meta_)}, {"bases", base_names_}};
  if (meta_ == MetaLearner::kLogistic) {
    j["weights"] = weights_;
    j["bias"] = bias_;
  } else {
    j["init"] = init_;
    j["learning_rate"] = shrinkage_;
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : trees_) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& node : tree)
        nodes.push_back({node.feature, node.threshold, node.value, node.left, node.right});
      trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
  }
  return j;
}

std::vector<int> TwoFoldAssignment(std::span<const int> labels, std::uint64_t seed) {
  std::vector<int> fold(labels.size(), 0);
  Rng rng(DeriveSeed(seed, "folds"));
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    const auto perm = Permutation(idx.size(), rng);
    for (std::size_t k = 0; k < perm.size(); ++k) fold[idx[perm[k]]] = static_cast<int>(k % 2);
  }
  return fold;
}

}  // namespace cmi::attack
