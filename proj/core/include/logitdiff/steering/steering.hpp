#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace logitdiff::steering {

using Activation = std::vector<double>;

// Difference-in-means direction at one layer, with the class means it came
// from. mu_minus is the concept-negative reference used by affine steering.
struct SteeringVector {
  std::size_t layer = 0;
  std::vector<double> r;
  std::vector<double> mu_plus;
  std::vector<double> mu_minus;
  std::size_t n_plus = 0;
  std::size_t n_minus = 0;

  std::size_t dim() const noexcept { return r.size(); }
  friend bool operator==(const SteeringVector&, const SteeringVector&) = default;
};

enum class Mode { direct_add, direct_ablate, affine };

std::string_view to_string(Mode mode) noexcept;
Mode mode_from_string(std::string_view name);

// Which layers an intervention targets: every layer, one layer, or an
// explicit set.
struct LayerSelection {
  enum class Kind { all, single, explicit_set };
  Kind kind = Kind::all;
  std::vector<std::size_t> layers;  // one entry for single, any for explicit_set

  static LayerSelection all_layers() { return {Kind::all, {}}; }
  static LayerSelection single(std::size_t layer) { return {Kind::single, {layer}}; }
  static LayerSelection of(std::vector<std::size_t> layers) { return {Kind::explicit_set, std::move(layers)}; }

  // Sorted, deduplicated target layers; invalid_parameter if any is out of range.
  std::vector<std::size_t> resolve(std::size_t layer_count) const;

  friend bool operator==(const LayerSelection&, const LayerSelection&) = default;
};

struct SteeringSpec {
  Mode mode = Mode::direct_add;
  double alpha = 0.0;  // ignored by direct_ablate
  LayerSelection layers;
  std::vector<SteeringVector> vectors;  // one per targeted layer, matched by SteeringVector::layer

  const SteeringVector* vector_for(std::size_t layer) const noexcept;
  // Checks layer bounds, per-layer vector presence, dimensions, and the
  // affine reference mean. Throws invalid_parameter.
  void validate(std::size_t layer_count, std::size_t hidden_size) const;

  friend bool operator==(const SteeringSpec&, const SteeringSpec&) = default;
};

// Directions shorter than this times the dimension are rejected.
inline constexpr double kDegenerateNormPerDim = 1e-12;

SteeringVector diff_in_means(std::span<const Activation> positives, std::span<const Activation> negatives,
                             std::size_t layer = 0);

// x + alpha * r
Activation apply_direct_add(std::span<const double> x, std::span<const double> r, double alpha);
// x - r_hat r_hat^T x
Activation apply_ablation(std::span<const double> x, std::span<const double> r);
// x - proj_r(x) + proj_r(mu_minus) + alpha * r
Activation apply_affine(std::span<const double> x, const SteeringVector& sv, double alpha);

// Applies spec's intervention for `layer` to x in place; no-op if the spec
// does not target that layer.
void apply_in_place(const SteeringSpec& spec, std::size_t layer, std::span<double> x);

}  // namespace logitdiff::steering
