#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "logitdiff/backend/backend.hpp"

namespace logitdiff {

// First-order Markov chain: next-token logits are the table row of the
// prefix's last token. Its sequence distribution is enumerable in closed
// form, which is what the decoding tests lean on.
class ToyMarkovModel final : public BackendProvider {
 public:
  ToyMarkovModel(std::string id, Vocabulary vocab, std::vector<std::vector<double>> table);

  std::unique_ptr<Backend> open_session() override;
  const BackendDescriptor& descriptor() override { return descriptor_; }

  const std::vector<std::vector<double>>& table() const noexcept { return table_; }
  const Vocabulary& vocabulary() const { return *descriptor_.vocabulary; }

 private:
  BackendDescriptor descriptor_;
  std::vector<std::vector<double>> table_;
};

struct ToyTransformerConfig {
  std::string id = "toy-transformer";
  std::size_t layers = 2;
  std::size_t hidden = 16;
  std::uint64_t seed = 7;
};

// Small causal residual network with fixed pseudo-random weights:
//   x0[p]   = E[tok_p] + P[p]
//   layer l: x += A_l * mean_{q<=p} x[q];  x += W2_l * tanh(W1_l * x + b_l)
//   logits  = U * x_L[last] + c
// The residual stream after each layer is exposed as that layer's
// activations and is where steering hooks act (every position).
class ToyTransformerModel final : public BackendProvider {
 public:
  ToyTransformerModel(Vocabulary vocab, ToyTransformerConfig config = {});

  std::unique_ptr<Backend> open_session() override;
  const BackendDescriptor& descriptor() override { return descriptor_; }

  struct Forward {
    std::vector<ActivationMatrix> residuals;  // one per layer
    std::vector<double> logits;
  };
  Forward forward(std::span<const TokenId> ids, std::span<const steering::SteeringSpec> hooks) const;

  const ToyTransformerConfig& config() const noexcept { return config_; }

 private:
  struct Layer {
    std::vector<double> mix;  // hidden x hidden
    std::vector<double> up;   // (2*hidden) x hidden
    std::vector<double> up_bias;
    std::vector<double> down;  // hidden x (2*hidden)
  };

  BackendDescriptor descriptor_;
  ToyTransformerConfig config_;
  std::vector<double> embedding_;  // vocab x hidden
  std::vector<double> unembedding_;  // vocab x hidden
  std::vector<double> output_bias_;
  std::vector<Layer> layers_;
};

// Rule-based classifier: positive (score 1) iff the motif occurs in the text.
class MotifClassifierModel final : public BackendProvider {
 public:
  explicit MotifClassifierModel(std::string motif, std::string id = "toy-motif");

  std::unique_ptr<Backend> open_session() override;
  const BackendDescriptor& descriptor() override { return descriptor_; }
  const std::string& motif() const noexcept { return motif_; }

 private:
  BackendDescriptor descriptor_;
  std::string motif_;
};

// Rule-based structure confidence: each residue scores 85 if in
// "ACFILMVWY" and 60 otherwise, minus 20 when equal to its predecessor.
class ToyFoldModel final : public BackendProvider {
 public:
  explicit ToyFoldModel(std::string id = "toy-fold");

  std::unique_ptr<Backend> open_session() override;
  const BackendDescriptor& descriptor() override { return descriptor_; }

  static std::vector<double> per_residue(std::string_view text);

 private:
  BackendDescriptor descriptor_;
};

// Activations-only backend with a planted linear concept. Layer 0 is
// sequence-keyed noise; every later layer adds `strength` times a fixed unit
// direction at every position when the motif occurs in the sequence.
class PlantedSignalModel final : public BackendProvider {
 public:
  PlantedSignalModel(Vocabulary vocab, std::string motif, std::size_t layers = 2, std::size_t hidden = 8,
                     double strength = 3.0, std::uint64_t seed = 11);

  std::unique_ptr<Backend> open_session() override;
  const BackendDescriptor& descriptor() override { return descriptor_; }

  ActivationMatrix layer_activations(const Sequence& seq, std::size_t layer) const;

 private:
  BackendDescriptor descriptor_;
  std::string motif_;
  double strength_;
  std::uint64_t seed_;
  std::vector<double> direction_;
};

// Precomputed scores keyed by residue text, standing in for external
// classifier / structure / embedding models. Rows may carry any subset of
// label+score, plddt, and embedding columns e0..e{d-1}.
class ScoreTableModel final : public BackendProvider {
 public:
  struct Row {
    std::optional<Classification> classification;
    std::optional<double> plddt;
    std::vector<double> embedding;
  };

  ScoreTableModel(std::string id, std::unordered_map<std::string, Row> rows, double threshold = 0.5);
  static std::shared_ptr<ScoreTableModel> from_csv(const std::string& path);

  std::unique_ptr<Backend> open_session() override;
  const BackendDescriptor& descriptor() override { return descriptor_; }
  const Row& lookup(std::string_view text) const;

 private:
  BackendDescriptor descriptor_;
  std::unordered_map<std::string, Row> rows_;
};

}  // namespace logitdiff
