#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "logitdiff/backend/backend.hpp"
#include "logitdiff/decode/generate.hpp"
#include "logitdiff/harness/config.hpp"
#include "logitdiff/quality/frechet.hpp"

namespace logitdiff::harness {

struct RateSummary {
  double mean = 0.0;
  double sd = 0.0;   // sample sd over runs, 0 for one run
  double sem = 0.0;  // sd / sqrt(runs)
  std::size_t runs = 0;
};

RateSummary summarize_rates(std::span<const double> rates);

struct Backends {
  std::shared_ptr<BackendProvider> generator;
  std::shared_ptr<BackendProvider> concept_model;  // null unless needed
  std::shared_ptr<BackendProvider> reference;      // generator when not configured
  std::shared_ptr<BackendProvider> embedder;       // optional
  std::shared_ptr<BackendProvider> classifier;
  std::shared_ptr<BackendProvider> fold;           // optional
};

// Opens every configured backend and checks declared capabilities up front.
// A missing capability or a vocabulary mismatch is a config error.
Backends open_backends(const ExperimentConfig& config, bool need_concept);

struct RunResult {
  std::uint64_t run = 0;
  std::size_t generated = 0;
  std::size_t failures = 0;
  std::vector<decode::GenerationRecord> retained;  // exactly K, by perplexity
  std::vector<Classification> labels;              // parallel to retained
  double rate = 0.0;                               // percent of retained labelled positive
  std::vector<std::vector<double>> embeddings;     // when an embedder is configured
  std::vector<double> plddt;                       // when a fold scorer is configured
};

struct PipelineResult {
  std::string condition;
  std::optional<double> alpha;
  std::vector<RunResult> runs;
  RateSummary summary;

  std::vector<std::vector<double>> pooled_embeddings() const;
  std::vector<double> pooled_plddt() const;
};

// Per run r: generate N with RngState(seed, stream_for(r, i)), score
// perplexity under the reference model, keep the K lowest, classify each,
// rate = positives / K * 100.
PipelineResult run_pipeline(const ExperimentConfig& config, const Backends& backends,
                            const Intervention& intervention);

// Same pipeline with the concept model as the sole generator.
PipelineResult run_concept_reference(const ExperimentConfig& config, const Backends& backends);

struct AlphaRow {
  double alpha = 0.0;
  bool valid = false;
  std::string error;
  PipelineResult pipeline;
  std::optional<double> delta_fed;
  std::optional<quality::PlddtDelta> plddt;
};

struct AlphaSweepResult {
  PipelineResult baseline;
  std::optional<PipelineResult> concept_reference;
  std::vector<AlphaRow> rows;
  std::optional<double> optimal_alpha;
  std::optional<quality::EmbeddingStats> reference_stats;
};

// Smallest mean rate among valid rows; ties go to the smaller alpha.
std::optional<double> select_optimal_alpha(std::span<const AlphaRow> rows);

// Runs the baseline and concept references, then the configured
// intervention at every alpha in config.alphas. Quality deltas are computed
// against the baseline generations when embeddings / fold scores exist.
AlphaSweepResult alpha_sweep(const ExperimentConfig& config, const Backends& backends);

struct Comparison {
  std::string name_a, name_b;
  PipelineResult a, b;
  double difference_pp = 0.0;  // b.mean - a.mean
};

// config_error unless both configs share classifier, N, K, tau, max length,
// runs and seed.
Comparison elicitation_compare(const ExperimentConfig& config_a, const Backends& backends_a,
                               const ExperimentConfig& config_b, const Backends& backends_b);

// "64.5 pp increase", "3.0 pp decrease", "0.0 pp change".
std::string format_pp_change(double difference_pp);

// Artifact writers; every file is written atomically.
void write_pipeline_artifacts(const std::filesystem::path& dir, const ExperimentConfig& config,
                              const PipelineResult& result, const Vocabulary& vocab);
std::string rates_csv(const std::string& group, std::span<const PipelineResult* const> results);
std::string sweep_table_csv(const std::string& group, const AlphaSweepResult& sweep);
std::string quality_table_csv(const std::string& group, const AlphaSweepResult& sweep);
std::string compare_csv(const Comparison& c);
void write_sweep_artifacts(const std::filesystem::path& dir, const ExperimentConfig& config,
                           const AlphaSweepResult& sweep, const Vocabulary& vocab);

}  // namespace logitdiff::harness
