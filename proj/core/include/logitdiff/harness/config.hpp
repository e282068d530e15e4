#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "logitdiff/steering/steering.hpp"

namespace logitdiff::harness {

inline constexpr int kConfigVersion = 1;

struct BackendAddresses {
  std::string generator;      // B
  std::string concept_model;  // T, required for lda
  std::string reference;      // perplexity model; defaults to generator
  std::string embedder;       // optional
  std::string classifier;
  std::string fold;           // optional
};

enum class InterventionKind { none, lda, steering };

struct Intervention {
  InterventionKind kind = InterventionKind::none;
  double alpha = 0.0;
  std::optional<steering::SteeringSpec> steering;  // vectors loaded, alpha mirrored from above
  std::filesystem::path vectors_path;

  // "baseline", "lda" or the steering mode name.
  std::string condition() const;
  Intervention with_alpha(double a) const;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  std::string name = "experiment";
  std::string group = "default";  // taxon or any experiment label used in reports
  BackendAddresses backends;
  Intervention intervention;
  std::size_t n = 300;
  std::size_t k = 200;
  double tau = 1.0;
  std::size_t max_length = 512;
  std::size_t runs = 3;
  std::uint64_t seed = 0;
  std::vector<double> alphas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::size_t workers = 0;  // 0 = default_workers()
  std::filesystem::path output = "results";
  std::optional<std::filesystem::path> reference_embeddings;  // CSV id,e0,...
  std::optional<std::string> embedding_layer;  // stamped into metadata only

  // Throws ErrorCode::config.
  void validate() const;
};

// Parses the JSON config. Relative paths resolve against base_dir.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// LOGITDIFF_BACKEND_<ROLE> (GENERATOR, CONCEPT, REFERENCE, EMBEDDER,
// CLASSIFIER, FOLD) replaces the matching address when set and nonempty.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
void apply_env_overrides(ExperimentConfig& config, const EnvLookup& lookup);
void apply_env_overrides(ExperimentConfig& config);

std::string config_to_json(const ExperimentConfig& config);

}  // namespace logitdiff::harness
