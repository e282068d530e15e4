#include "logitdiff/backend/backend.hpp"

#include <array>
#include <cmath>

#include "logitdiff/core/error.hpp"

namespace logitdiff {
namespace {

constexpr std::array<std::pair<Capability, std::string_view>, 6> kCapNames{{
    {Capability::logits, "logits"},
    {Capability::activations, "activations"},
    {Capability::steering, "steering"},
    {Capability::embeddings, "embeddings"},
    {Capability::classify, "classify"},
    {Capability::fold_confidence, "fold-confidence"},
}};

void require_text(std::string_view text) {
  if (text.empty()) fail(ErrorCode::invalid_input, "empty sequence");
}

}  // namespace

std::string_view to_string(Capability c) noexcept {
  for (const auto& [cap, name] : kCapNames) {
    if (cap == c) return name;
  }
  return "logits";
}

Capability capability_from_string(std::string_view name) {
  for (const auto& [cap, n] : kCapNames) {
    if (n == name) return cap;
  }
  fail(ErrorCode::invalid_input, "unknown capability '" + std::string(name) + "'");
}

std::vector<Capability> CapabilitySet::list() const {
  std::vector<Capability> out;
  for (const auto& [cap, name] : kCapNames) {
    if (has(cap)) out.push_back(cap);
  }
  return out;
}

void BackendDescriptor::validate() const {
  if (id.empty()) fail(ErrorCode::invalid_parameter, "backend id must be nonempty");
  const bool acts = has(Capability::activations);
  if (has(Capability::steering) && !acts) {
    fail(ErrorCode::invalid_parameter, id + ": steering capability requires activations");
  }
  if ((layer_count > 0) != acts) {
    fail(ErrorCode::invalid_parameter, id + ": layer count must be positive exactly when activations are exposed");
  }
  if (acts && hidden_size == 0) fail(ErrorCode::invalid_parameter, id + ": hidden size must be positive");
  if ((has(Capability::logits) || acts) && !vocabulary) {
    fail(ErrorCode::invalid_parameter, id + ": token-level capabilities need a vocabulary");
  }
  if (!(classify_threshold >= 0.0 && classify_threshold <= 1.0)) {
    fail(ErrorCode::invalid_parameter, id + ": classify threshold must lie in [0, 1]");
  }
  if (!(numeric_tolerance >= 0.0)) fail(ErrorCode::invalid_parameter, id + ": negative numeric tolerance");
}

void Backend::require(Capability c) const {
  if (!descriptor().has(c)) {
    fail(ErrorCode::unsupported_capability,
         descriptor().id + " does not provide the '" + std::string(to_string(c)) + "' capability");
  }
}

LogitVector Backend::next_logits(const Sequence& prefix) {
  require(Capability::logits);
  prefix.validate(*descriptor().vocabulary);
  auto logits = do_next_logits(prefix);
  if (logits.size() != descriptor().vocabulary->size()) {
    fail(ErrorCode::backend, descriptor().id + " returned " + std::to_string(logits.size()) +
                                 " logits for a vocabulary of " + std::to_string(descriptor().vocabulary->size()));
  }
  return logits;
}

ActivationMap Backend::activations(const Sequence& prefix, std::span<const std::size_t> layers) {
  require(Capability::activations);
  prefix.validate(*descriptor().vocabulary);
  for (std::size_t l : layers) {
    if (l >= descriptor().layer_count) {
      fail(ErrorCode::invalid_parameter, "layer " + std::to_string(l) + " out of range for " +
                                             std::to_string(descriptor().layer_count) + "-layer backend");
    }
  }
  if (layers.empty()) return {};
  return do_activations(prefix, layers);
}

void Backend::set_steering(const steering::SteeringSpec& spec) {
  require(Capability::steering);
  spec.validate(descriptor().layer_count, descriptor().hidden_size);
  do_set_steering(spec);
}

void Backend::clear_steering() {
  require(Capability::steering);
  do_clear_steering();
}

std::vector<double> Backend::embed(std::string_view text) {
  require(Capability::embeddings);
  require_text(text);
  return do_embed(text);
}

Classification Backend::classify(std::string_view text) {
  require(Capability::classify);
  require_text(text);
  auto c = do_classify(text);
  if (!(c.score >= 0.0 && c.score <= 1.0)) fail(ErrorCode::backend, descriptor().id + ": classifier score outside [0, 1]");
  return c;
}

FoldConfidence Backend::fold_confidence(std::string_view text) {
  require(Capability::fold_confidence);
  require_text(text);
  return do_fold_confidence(text);
}

// Default hooks: reached only when a descriptor advertises a capability the
// implementation does not override.
LogitVector Backend::do_next_logits(const Sequence&) {
  fail(ErrorCode::unsupported_capability, descriptor().id + ": logits not implemented");
}
ActivationMap Backend::do_activations(const Sequence&, std::span<const std::size_t>) {
  fail(ErrorCode::unsupported_capability, descriptor().id + ": activations not implemented");
}
void Backend::do_set_steering(const steering::SteeringSpec&) {
  fail(ErrorCode::unsupported_capability, descriptor().id + ": steering not implemented");
}
void Backend::do_clear_steering() {
  fail(ErrorCode::unsupported_capability, descriptor().id + ": steering not implemented");
}
std::vector<double> Backend::do_embed(std::string_view) {
  fail(ErrorCode::unsupported_capability, descriptor().id + ": embeddings not implemented");
}
Classification Backend::do_classify(std::string_view) {
  fail(ErrorCode::unsupported_capability, descriptor().id + ": classify not implemented");
}
FoldConfidence Backend::do_fold_confidence(std::string_view) {
  fail(ErrorCode::unsupported_capability, descriptor().id + ": fold confidence not implemented");
}

}  // namespace logitdiff
