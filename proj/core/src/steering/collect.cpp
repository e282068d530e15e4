#include "logitdiff/steering/collect.hpp"

#include <algorithm>

#include "logitdiff/core/error.hpp"

namespace logitdiff::steering {

Aggregation aggregation_from_string(std::string_view name) {
  if (name == "mean") return Aggregation::mean;
  if (name == "last") return Aggregation::last;
  if (name == "max") return Aggregation::max;
  fail(ErrorCode::invalid_parameter, "unknown aggregation '" + std::string(name) + "'");
}

Activation aggregate(const ActivationMatrix& positions, Aggregation how) {
  if (positions.empty()) fail(ErrorCode::invalid_input, "no positions to aggregate");
  switch (how) {
    case Aggregation::last: return positions.back();
    case Aggregation::max: {
      Activation out = positions.front();
      for (const auto& row : positions) {
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::max(out[j], row[j]);
      }
      return out;
    }
    case Aggregation::mean: break;
  }
  Activation out(positions.front().size(), 0.0);
  for (const auto& row : positions) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += row[j];
  }
  for (double& v : out) v /= static_cast<double>(positions.size());
  return out;
}

std::vector<std::vector<Activation>> collect_layers(Backend& session, std::span<const LabeledSequence> dataset,
                                                    std::span<const std::size_t> layers, Aggregation how) {
  std::vector<std::vector<Activation>> out(layers.size());
  for (auto& per_layer : out) per_layer.reserve(dataset.size());
  for (const auto& item : dataset) {
    const ActivationMap acts = session.activations(item.sequence, layers);
    for (std::size_t k = 0; k < layers.size(); ++k) out[k].push_back(aggregate(acts.at(layers[k]), how));
  }
  return out;
}

ClassActivations collect_activations(Backend& session, std::span<const LabeledSequence> dataset, std::size_t layer,
                                     Aggregation how) {
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!dataset[i].label) fail(ErrorCode::invalid_input, "sequence " + std::to_string(i) + " has no label");
  }
  const std::size_t layers[] = {layer};
  auto acts = collect_layers(session, dataset, layers, how);
  ClassActivations out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (*dataset[i].label ? out.positives : out.negatives).push_back(std::move(acts[0][i]));
  }
  return out;
}

std::vector<SteeringVector> extract_vectors(Backend& session, std::span<const LabeledSequence> dataset,
                                            std::span<const std::size_t> layers, Aggregation how) {
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!dataset[i].label) fail(ErrorCode::invalid_input, "sequence " + std::to_string(i) + " has no label");
  }
  const auto acts = collect_layers(session, dataset, layers, how);
  std::vector<SteeringVector> out;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    std::vector<Activation> pos, neg;
    for (std::size_t i = 0; i < dataset.size(); ++i) (*dataset[i].label ? pos : neg).push_back(acts[k][i]);
    out.push_back(diff_in_means(pos, neg, layers[k]));
  }
  return out;
}

}  // namespace logitdiff::steering
