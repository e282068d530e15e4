#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "logitdiff/backend/backend.hpp"
#include "logitdiff/probing/probe.hpp"
#include "logitdiff/probing/split.hpp"
#include "logitdiff/steering/collect.hpp"

namespace logitdiff::probing {

struct SweepOptions {
  std::size_t splits = 5;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  TrainOptions training;
  steering::Aggregation aggregation = steering::Aggregation::mean;
  std::size_t workers = 0;  // 0 = default_workers()
};

struct SplitResult {
  std::size_t layer = 0;
  std::size_t split = 0;
  bool ok = false;
  std::string error;  // set when !ok
  ProbeMetrics metrics;
  std::size_t iterations = 0;
};

struct LayerSummary {
  std::size_t layer = 0;
  bool valid = false;  // false when every split failed
  std::size_t succeeded = 0;
  double accuracy_mean = 0.0, accuracy_sd = 0.0;
  std::optional<double> auc_mean, auc_sd;  // over splits with a defined AUC
  double f1_mean = 0.0, f1_sd = 0.0;
};

struct SweepResult {
  std::vector<SplitResult> runs;      // layer-major, then split
  std::vector<LayerSummary> layers;
  std::vector<SplitIndices> splits;   // shared by every layer
  std::vector<std::string> groups;    // group key per example
};

// Split s uses RngState(seed, s), so every layer sees the same partitions.
// Sample sd (n - 1); zero when a single split succeeded.
SweepResult layer_sweep(std::span<const std::vector<LabeledExample>> per_layer, std::span<const std::size_t> layers,
                        const SweepOptions& options = {});

// Collects aggregated activations for every layer in one pass, then sweeps.
SweepResult layer_sweep(Backend& session, std::span<const steering::LabeledSequence> dataset,
                        std::span<const std::size_t> layers, const SweepOptions& options = {});

// Versioned per-split table: layer,split,accuracy,auc,f1. Failed splits
// leave the metric cells empty, as does an undefined AUC.
std::string sweep_csv(const SweepResult& result);
// One row per layer with mean and sd of each metric.
std::string sweep_summary_csv(const SweepResult& result);

}  // namespace logitdiff::probing
