#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "logitdiff/backend/backend.hpp"
#include "logitdiff/steering/steering.hpp"

namespace logitdiff::steering {

struct LabeledSequence {
  Sequence sequence;
  std::optional<bool> label;
  std::string group;
};

enum class Aggregation { mean, last, max };

Aggregation aggregation_from_string(std::string_view name);

// Collapses per-position activations to one vector.
Activation aggregate(const ActivationMatrix& positions, Aggregation how);

struct ClassActivations {
  std::vector<Activation> positives;
  std::vector<Activation> negatives;
};

// One aggregated activation per sequence at `layer`, partitioned by label.
// invalid_input for unlabeled sequences.
ClassActivations collect_activations(Backend& session, std::span<const LabeledSequence> dataset, std::size_t layer,
                                     Aggregation how = Aggregation::mean);

// Aggregated activations for several layers in one pass:
// result[layer_index][sequence_index].
std::vector<std::vector<Activation>> collect_layers(Backend& session, std::span<const LabeledSequence> dataset,
                                                    std::span<const std::size_t> layers,
                                                    Aggregation how = Aggregation::mean);

// Difference-in-means vectors for each requested layer.
std::vector<SteeringVector> extract_vectors(Backend& session, std::span<const LabeledSequence> dataset,
                                            std::span<const std::size_t> layers,
                                            Aggregation how = Aggregation::mean);

}  // namespace logitdiff::steering
