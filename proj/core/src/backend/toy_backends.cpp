#include "logitdiff/backend/toy_backends.hpp"

#include <cmath>

#include "logitdiff/core/error.hpp"
#include "logitdiff/core/hash.hpp"
#include "logitdiff/core/io.hpp"
#include "logitdiff/core/rng.hpp"

namespace logitdiff {
namespace {

std::vector<double> random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, std::uint64_t stream) {
  RngState rng(seed, stream);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
  std::vector<double> m(rows * cols);
  for (double& v : m) v = (2.0 * rng.next_double() - 1.0) * std::sqrt(3.0) * scale;
  return m;
}

void matvec(const std::vector<double>& m, std::size_t rows, std::size_t cols, std::span<const double> x,
            std::span<double> out) {
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    const double* row = m.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) s += row[j] * x[j];
    out[i] = s;
  }
}

// ---------------------------------------------------------------- Markov

class MarkovSession final : public Backend {
 public:
  explicit MarkovSession(const ToyMarkovModel& model, const BackendDescriptor& d) : model_(model), d_(d) {}
  const BackendDescriptor& descriptor() const override { return d_; }

 protected:
  LogitVector do_next_logits(const Sequence& prefix) override {
    return LogitVector(model_.table()[prefix.back()]);
  }

 private:
  const ToyMarkovModel& model_;
  const BackendDescriptor& d_;
};

// ----------------------------------------------------------- Transformer

class TransformerSession final : public Backend {
 public:
  TransformerSession(const ToyTransformerModel& model, const BackendDescriptor& d) : model_(model), d_(d) {}
  const BackendDescriptor& descriptor() const override { return d_; }

 protected:
  LogitVector do_next_logits(const Sequence& prefix) override {
    return LogitVector(model_.forward(prefix.ids(), hooks_).logits);
  }

  ActivationMap do_activations(const Sequence& prefix, std::span<const std::size_t> layers) override {
    auto fwd = model_.forward(prefix.ids(), hooks_);
    ActivationMap out;
    for (std::size_t l : layers) out[l] = fwd.residuals[l];
    return out;
  }

  void do_set_steering(const steering::SteeringSpec& spec) override { hooks_.push_back(spec); }
  void do_clear_steering() override { hooks_.clear(); }

  std::vector<double> do_embed(std::string_view text) override {
    const auto ids = d_.vocabulary->encode(text);
    if (ids.empty()) fail(ErrorCode::invalid_input, "empty sequence");
    const auto fwd = model_.forward(ids, hooks_);
    const ActivationMatrix& last = fwd.residuals.back();
    std::vector<double> pooled(d_.hidden_size, 0.0);
    for (const auto& row : last) {
      for (std::size_t j = 0; j < pooled.size(); ++j) pooled[j] += row[j];
    }
    for (double& v : pooled) v /= static_cast<double>(last.size());
    return pooled;
  }

 private:
  const ToyTransformerModel& model_;
  const BackendDescriptor& d_;
  std::vector<steering::SteeringSpec> hooks_;
};

// ------------------------------------------------------------ Classifier

class MotifSession final : public Backend {
 public:
  MotifSession(std::string motif, const BackendDescriptor& d) : motif_(std::move(motif)), d_(d) {}
  const BackendDescriptor& descriptor() const override { return d_; }

 protected:
  Classification do_classify(std::string_view text) override {
    const bool hit = text.find(motif_) != std::string_view::npos;
    const double score = hit ? 1.0 : 0.0;
    return {score >= d_.classify_threshold, score};
  }

 private:
  std::string motif_;
  const BackendDescriptor& d_;
};

class FoldSession final : public Backend {
 public:
  explicit FoldSession(const BackendDescriptor& d) : d_(d) {}
  const BackendDescriptor& descriptor() const override { return d_; }

 protected:
  FoldConfidence do_fold_confidence(std::string_view text) override {
    FoldConfidence f;
    f.per_residue = ToyFoldModel::per_residue(text);
    double s = 0.0;
    for (double v : f.per_residue) s += v;
    f.mean_plddt = s / static_cast<double>(f.per_residue.size());
    return f;
  }

 private:
  const BackendDescriptor& d_;
};

class PlantedSession final : public Backend {
 public:
  PlantedSession(const PlantedSignalModel& model, const BackendDescriptor& d) : model_(model), d_(d) {}
  const BackendDescriptor& descriptor() const override { return d_; }

 protected:
  ActivationMap do_activations(const Sequence& prefix, std::span<const std::size_t> layers) override {
    ActivationMap out;
    for (std::size_t l : layers) out[l] = model_.layer_activations(prefix, l);
    return out;
  }

 private:
  const PlantedSignalModel& model_;
  const BackendDescriptor& d_;
};

class ScoreTableSession final : public Backend {
 public:
  ScoreTableSession(const ScoreTableModel& model, const BackendDescriptor& d) : model_(model), d_(d) {}
  const BackendDescriptor& descriptor() const override { return d_; }

 protected:
  Classification do_classify(std::string_view text) override { return *model_.lookup(text).classification; }
  FoldConfidence do_fold_confidence(std::string_view text) override {
    const double v = *model_.lookup(text).plddt;
    return {v, {v}};
  }
  std::vector<double> do_embed(std::string_view text) override { return model_.lookup(text).embedding; }

 private:
  const ScoreTableModel& model_;
  const BackendDescriptor& d_;
};

}  // namespace

// ---------------------------------------------------------------- Markov

ToyMarkovModel::ToyMarkovModel(std::string id, Vocabulary vocab, std::vector<std::vector<double>> table)
    : table_(std::move(table)) {
  if (table_.size() != vocab.size()) {
    fail(ErrorCode::invalid_input, "Markov table needs one row per vocabulary token");
  }
  for (const auto& row : table_) {
    if (row.size() != vocab.size()) fail(ErrorCode::invalid_input, "Markov table rows must span the vocabulary");
    for (double v : row) {
      if (!std::isfinite(v)) fail(ErrorCode::invalid_input, "Markov table entries must be finite");
    }
  }
  descriptor_.id = std::move(id);
  descriptor_.capabilities = {Capability::logits};
  descriptor_.vocabulary = std::move(vocab);
  descriptor_.validate();
}

std::unique_ptr<Backend> ToyMarkovModel::open_session() {
  return std::make_unique<MarkovSession>(*this, descriptor_);
}

// ----------------------------------------------------------- Transformer

ToyTransformerModel::ToyTransformerModel(Vocabulary vocab, ToyTransformerConfig config) : config_(std::move(config)) {
  if (config_.layers == 0 || config_.hidden == 0) {
    fail(ErrorCode::invalid_parameter, "toy transformer needs at least one layer and a positive hidden size");
  }
  const std::size_t v = vocab.size();
  const std::size_t d = config_.hidden;
  descriptor_.id = config_.id;
  descriptor_.capabilities = {Capability::logits, Capability::activations, Capability::steering,
                              Capability::embeddings};
  descriptor_.vocabulary = std::move(vocab);
  descriptor_.layer_count = config_.layers;
  descriptor_.hidden_size = d;
  descriptor_.parameters["pooling"] = "mean";
  descriptor_.parameters["embedding_layer"] = std::to_string(config_.layers - 1);
  descriptor_.validate();

  std::uint64_t stream = 0;
  embedding_ = random_matrix(v, d, config_.seed, stream++);
  for (double& e : embedding_) e *= std::sqrt(static_cast<double>(d));  // unit-scale token embeddings
  unembedding_ = random_matrix(v, d, config_.seed, stream++);
  output_bias_ = random_matrix(v, 1, config_.seed, stream++);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    Layer layer;
    layer.mix = random_matrix(d, d, config_.seed, stream++);
    layer.up = random_matrix(2 * d, d, config_.seed, stream++);
    layer.up_bias = random_matrix(2 * d, 1, config_.seed, stream++);
    layer.down = random_matrix(d, 2 * d, config_.seed, stream++);
    layers_.push_back(std::move(layer));
  }
}

std::unique_ptr<Backend> ToyTransformerModel::open_session() {
  return std::make_unique<TransformerSession>(*this, descriptor_);
}

ToyTransformerModel::Forward ToyTransformerModel::forward(std::span<const TokenId> ids,
                                                          std::span<const steering::SteeringSpec> hooks) const {
  const std::size_t d = config_.hidden;
  const std::size_t n = ids.size();
  ActivationMatrix x(n, std::vector<double>(d));
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t j = 0; j < d; ++j) {
      x[p][j] = embedding_[ids[p] * d + j] + 0.1 * std::sin(static_cast<double>((p + 1) * (j + 1)) * 0.37);
    }
  }

  Forward out;
  std::vector<double> running(d), context(d), mixed(d), hidden(2 * d), delta(d);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    std::fill(running.begin(), running.end(), 0.0);
    ActivationMatrix next = x;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t j = 0; j < d; ++j) {
        running[j] += x[p][j];
        context[j] = running[j] / static_cast<double>(p + 1);
      }
      matvec(layer.mix, d, d, context, mixed);
      for (std::size_t j = 0; j < d; ++j) next[p][j] += mixed[j];
      matvec(layer.up, 2 * d, d, next[p], hidden);
      for (std::size_t k = 0; k < 2 * d; ++k) hidden[k] = std::tanh(hidden[k] + layer.up_bias[k]);
      matvec(layer.down, d, 2 * d, hidden, delta);
      for (std::size_t j = 0; j < d; ++j) next[p][j] += delta[j];
    }
    for (const auto& hook : hooks) {
      for (auto& row : next) steering::apply_in_place(hook, l, row);
    }
    x = std::move(next);
    out.residuals.push_back(x);
  }

  const std::size_t v = descriptor_.vocabulary->size();
  out.logits.resize(v);
  matvec(unembedding_, v, d, x.back(), out.logits);
  for (std::size_t i = 0; i < v; ++i) out.logits[i] += output_bias_[i];
  return out;
}

// ------------------------------------------------------------ Classifier

MotifClassifierModel::MotifClassifierModel(std::string motif, std::string id) : motif_(std::move(motif)) {
  if (motif_.empty()) fail(ErrorCode::invalid_parameter, "motif must be nonempty");
  descriptor_.id = std::move(id);
  descriptor_.capabilities = {Capability::classify};
  descriptor_.classify_threshold = 0.5;
  descriptor_.parameters["motif"] = motif_;
  descriptor_.validate();
}

std::unique_ptr<Backend> MotifClassifierModel::open_session() {
  return std::make_unique<MotifSession>(motif_, descriptor_);
}

ToyFoldModel::ToyFoldModel(std::string id) {
  descriptor_.id = std::move(id);
  descriptor_.capabilities = {Capability::fold_confidence};
  descriptor_.validate();
}

std::vector<double> ToyFoldModel::per_residue(std::string_view text) {
  static constexpr std::string_view kOrdered = "ACFILMVWY";
  std::vector<double> out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    double v = kOrdered.find(text[i]) != std::string_view::npos ? 85.0 : 60.0;
    if (i > 0 && text[i] == text[i - 1]) v -= 20.0;
    out.push_back(v);
  }
  return out;
}

std::unique_ptr<Backend> ToyFoldModel::open_session() { return std::make_unique<FoldSession>(descriptor_); }

// ---------------------------------------------------------------- Planted

PlantedSignalModel::PlantedSignalModel(Vocabulary vocab, std::string motif, std::size_t layers, std::size_t hidden,
                                       double strength, std::uint64_t seed)
    : motif_(std::move(motif)), strength_(strength), seed_(seed) {
  descriptor_.id = "toy-planted";
  descriptor_.capabilities = {Capability::activations};
  descriptor_.vocabulary = std::move(vocab);
  descriptor_.layer_count = layers;
  descriptor_.hidden_size = hidden;
  descriptor_.parameters["motif"] = motif_;
  descriptor_.validate();

  RngState rng(seed_, ~std::uint64_t{0});
  direction_.resize(hidden);
  double norm = 0.0;
  for (double& v : direction_) {
    v = 2.0 * rng.next_double() - 1.0;
    norm += v * v;
  }
  for (double& v : direction_) v /= std::sqrt(norm);
}

std::unique_ptr<Backend> PlantedSignalModel::open_session() {
  return std::make_unique<PlantedSession>(*this, descriptor_);
}

ActivationMatrix PlantedSignalModel::layer_activations(const Sequence& seq, std::size_t layer) const {
  const std::size_t d = descriptor_.hidden_size;
  const std::string text = descriptor_.vocabulary->decode(seq.ids());
  const bool planted = layer > 0 && text.find(motif_) != std::string::npos;
  std::string key;
  for (TokenId id : seq.ids()) key += std::to_string(id) + ",";
  const std::uint64_t h = fnv1a64(key);
  ActivationMatrix out(seq.size(), std::vector<double>(d));
  for (std::size_t p = 0; p < seq.size(); ++p) {
    RngState rng(seed_ ^ h, p);
    for (std::size_t j = 0; j < d; ++j) {
      out[p][j] = (2.0 * rng.next_double() - 1.0) * std::sqrt(3.0);
      if (planted) out[p][j] += strength_ * direction_[j];
    }
  }
  return out;
}

// ------------------------------------------------------------ Score table

ScoreTableModel::ScoreTableModel(std::string id, std::unordered_map<std::string, Row> rows, double threshold)
    : rows_(std::move(rows)) {
  descriptor_.id = std::move(id);
  descriptor_.classify_threshold = threshold;
  bool all_class = !rows_.empty(), all_plddt = !rows_.empty(), all_embed = !rows_.empty();
  std::size_t dim = 0;
  for (const auto& [text, row] : rows_) {
    all_class = all_class && row.classification.has_value();
    all_plddt = all_plddt && row.plddt.has_value();
    all_embed = all_embed && !row.embedding.empty();
    if (!row.embedding.empty()) {
      if (dim != 0 && dim != row.embedding.size()) fail(ErrorCode::format, "score table embeddings differ in dimension");
      dim = row.embedding.size();
    }
  }
  if (all_class) descriptor_.capabilities.add(Capability::classify);
  if (all_plddt) descriptor_.capabilities.add(Capability::fold_confidence);
  if (all_embed) {
    descriptor_.capabilities.add(Capability::embeddings);
    descriptor_.parameters["embedding_dim"] = std::to_string(dim);
  }
  descriptor_.validate();
}

std::shared_ptr<ScoreTableModel> ScoreTableModel::from_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t seq_col = t.column("sequence");
  const auto label_col = t.find_column("label");
  const auto score_col = t.find_column("score");
  const auto plddt_col = t.find_column("plddt");
  std::vector<std::size_t> emb_cols;
  for (std::size_t k = 0;; ++k) {
    auto c = t.find_column("e" + std::to_string(k));
    if (!c) break;
    emb_cols.push_back(*c);
  }
  constexpr double threshold = 0.5;
  std::unordered_map<std::string, Row> rows;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    Row row;
    if (score_col) {
      const double s = t.number(i, *score_col);
      if (!(s >= 0.0 && s <= 1.0)) fail(ErrorCode::data, path + ": classifier score outside [0, 1]");
      row.classification = Classification{s >= threshold, s};
    } else if (label_col) {
      const bool l = t.boolean(i, *label_col);
      row.classification = Classification{l, l ? 1.0 : 0.0};
    }
    if (plddt_col) {
      const double p = t.number(i, *plddt_col);
      if (!(p >= 0.0 && p <= 100.0)) fail(ErrorCode::data, path + ": pLDDT outside [0, 100]");
      row.plddt = p;
    }
    for (std::size_t c : emb_cols) row.embedding.push_back(t.number(i, c));
    rows[t.rows[i][seq_col]] = std::move(row);
  }
  return std::make_shared<ScoreTableModel>("scores:" + path, std::move(rows), threshold);
}

std::unique_ptr<Backend> ScoreTableModel::open_session() {
  return std::make_unique<ScoreTableSession>(*this, descriptor_);
}

const ScoreTableModel::Row& ScoreTableModel::lookup(std::string_view text) const {
  auto it = rows_.find(std::string(text));
  if (it == rows_.end()) fail(ErrorCode::data, descriptor_.id + ": no precomputed scores for sequence '" +
                                                   std::string(text) + "'");
  return it->second;
}

}  // namespace logitdiff
