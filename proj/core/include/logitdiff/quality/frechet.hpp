#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace logitdiff::quality {

// Gaussian summary of an embedding set. sigma is row-major d x d.
struct EmbeddingStats {
  std::vector<double> mu;
  std::vector<double> sigma;
  std::size_t n = 0;

  std::size_t dim() const noexcept { return mu.size(); }
  double at(std::size_t i, std::size_t j) const { return sigma[i * mu.size() + j]; }
  // Shape, finiteness, symmetry within 1e-10 and n >= 2.
  void validate() const;
};

// Sample mean and unbiased covariance, symmetrised as (S + S^T) / 2.
// insufficient_samples when fewer than two rows.
EmbeddingStats fit_stats(std::span<const std::vector<double>> embeddings);

// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2), with both
// square roots taken by symmetric eigendecomposition. Eigenvalues in
// (-1e-6, 0) are clamped to zero; below -1e-6 is a numerical_failure.
double frechet_distance(const EmbeddingStats& a, const EmbeddingStats& b);

// FED(ref, intervention) - FED(ref, baseline); negative means closer to ref.
double delta_fed(const EmbeddingStats& ref, const EmbeddingStats& baseline, const EmbeddingStats& intervention);

struct PlddtDelta {
  double delta = 0.0;
  double sigma = 0.0;  // sqrt(sd_int^2 + sd_base^2)
  double mean_baseline = 0.0, sd_baseline = 0.0;
  double mean_intervention = 0.0, sd_intervention = 0.0;
};

// Per-sequence mean pLDDT values in [0, 100]. Sample sd with divisor n - 1,
// zero for a single value.
PlddtDelta delta_plddt(std::span<const double> baseline, std::span<const double> intervention);

struct QualityReport {
  double fed_baseline = 0.0;
  double fed_intervention = 0.0;
  double delta_fed = 0.0;
  PlddtDelta plddt;
  std::size_t n_reference = 0, n_baseline = 0, n_intervention = 0, dim = 0;
};

QualityReport quality_report(const EmbeddingStats& ref, const EmbeddingStats& baseline,
                             const EmbeddingStats& intervention, std::span<const double> plddt_baseline,
                             std::span<const double> plddt_intervention);

// Embedding table: header "id,e0,e1,...", one row per sequence.
struct EmbeddingTable {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
};

EmbeddingTable read_embeddings(const std::filesystem::path& path);
std::string embeddings_csv(const EmbeddingTable& table);

std::string stats_to_text(const EmbeddingStats& stats);
EmbeddingStats stats_from_text(std::string_view text);

// Fitted statistics on disk, keyed by a hash of the embedding values, so
// repeated sweeps refit the reference set only once.
class StatsCache {
 public:
  explicit StatsCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  EmbeddingStats get_or_fit(std::span<const std::vector<double>> embeddings);
  std::filesystem::path path_for(std::span<const std::vector<double>> embeddings) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace logitdiff::quality
