#include "logitdiff/steering/steering.hpp"

#include <algorithm>
#include <cmath>

#include "logitdiff/core/error.hpp"

namespace logitdiff::steering {
namespace {

void require_same_dim(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    fail(ErrorCode::invalid_input, std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                                       " vs " + std::to_string(b.size()) + ")");
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Unit vector along r, or degenerate_direction.
std::vector<double> unit(std::span<const double> r) {
  const double norm = std::sqrt(dot(r, r));
  const double floor = kDegenerateNormPerDim * static_cast<double>(std::max<std::size_t>(1, r.size()));
  if (!(norm >= floor)) {
    fail(ErrorCode::degenerate_direction, "steering direction norm " + std::to_string(norm) + " below " +
                                              std::to_string(floor));
  }
  std::vector<double> u(r.begin(), r.end());
  for (double& v : u) v /= norm;
  return u;
}

std::vector<double> mean_of(std::span<const Activation> rows, const char* what) {
  if (rows.empty()) fail(ErrorCode::invalid_input, std::string(what) + " class is empty");
  const std::size_t d = rows.front().size();
  std::vector<double> mu(d, 0.0);
  for (const auto& row : rows) {
    if (row.size() != d) fail(ErrorCode::invalid_input, std::string(what) + ": inconsistent activation dimensions");
    for (std::size_t j = 0; j < d; ++j) mu[j] += row[j];
  }
  for (double& v : mu) v /= static_cast<double>(rows.size());
  return mu;
}

}  // namespace

std::string_view to_string(Mode mode) noexcept {
  switch (mode) {
    case Mode::direct_add: return "direct-add";
    case Mode::direct_ablate: return "direct-ablate";
    case Mode::affine: return "affine";
  }
  return "direct-add";
}

Mode mode_from_string(std::string_view name) {
  if (name == "direct-add") return Mode::direct_add;
  if (name == "direct-ablate") return Mode::direct_ablate;
  if (name == "affine") return Mode::affine;
  fail(ErrorCode::invalid_parameter, "unknown steering mode '" + std::string(name) + "'");
}

std::vector<std::size_t> LayerSelection::resolve(std::size_t layer_count) const {
  std::vector<std::size_t> out;
  if (kind == Kind::all) {
    for (std::size_t l = 0; l < layer_count; ++l) out.push_back(l);
    return out;
  }
  if (kind == Kind::single && layers.size() != 1) {
    fail(ErrorCode::invalid_parameter, "single-layer selection needs exactly one layer");
  }
  out = layers;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  for (std::size_t l : out) {
    if (l >= layer_count) {
      fail(ErrorCode::invalid_parameter, "layer " + std::to_string(l) + " out of range for " +
                                             std::to_string(layer_count) + "-layer backend");
    }
  }
  return out;
}

const SteeringVector* SteeringSpec::vector_for(std::size_t layer) const noexcept {
  for (const auto& v : vectors) {
    if (v.layer == layer) return &v;
  }
  return nullptr;
}

void SteeringSpec::validate(std::size_t layer_count, std::size_t hidden_size) const {
  if (!std::isfinite(alpha)) fail(ErrorCode::invalid_parameter, "steering alpha must be finite");
  for (std::size_t l : layers.resolve(layer_count)) {
    const SteeringVector* v = vector_for(l);
    if (v == nullptr) fail(ErrorCode::invalid_parameter, "no steering vector for layer " + std::to_string(l));
    if (v->r.size() != hidden_size) {
      fail(ErrorCode::invalid_parameter, "steering vector for layer " + std::to_string(l) + " has dimension " +
                                             std::to_string(v->r.size()) + ", hidden size is " +
                                             std::to_string(hidden_size));
    }
    if (mode == Mode::affine && v->mu_minus.size() != hidden_size) {
      fail(ErrorCode::invalid_parameter, "affine steering needs the negative-class mean at layer " +
                                             std::to_string(l));
    }
  }
}

SteeringVector diff_in_means(std::span<const Activation> positives, std::span<const Activation> negatives,
                             std::size_t layer) {
  SteeringVector sv;
  sv.layer = layer;
  sv.mu_plus = mean_of(positives, "positive");
  sv.mu_minus = mean_of(negatives, "negative");
  require_same_dim(sv.mu_plus, sv.mu_minus, "diff_in_means");
  sv.r.resize(sv.mu_plus.size());
  for (std::size_t j = 0; j < sv.r.size(); ++j) sv.r[j] = sv.mu_plus[j] - sv.mu_minus[j];
  sv.n_plus = positives.size();
  sv.n_minus = negatives.size();
  return sv;
}

Activation apply_direct_add(std::span<const double> x, std::span<const double> r, double alpha) {
  require_same_dim(x, r, "direct addition");
  Activation out(x.begin(), x.end());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += alpha * r[j];
  return out;
}

Activation apply_ablation(std::span<const double> x, std::span<const double> r) {
  require_same_dim(x, r, "ablation");
  const auto u = unit(r);
  const double along = dot(u, x);
  Activation out(x.begin(), x.end());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] -= along * u[j];
  return out;
}

Activation apply_affine(std::span<const double> x, const SteeringVector& sv, double alpha) {
  require_same_dim(x, sv.r, "affine steering");
  require_same_dim(x, sv.mu_minus, "affine steering reference");
  const auto u = unit(sv.r);
  const double shift = dot(u, sv.mu_minus) - dot(u, x);
  Activation out(x.begin(), x.end());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += shift * u[j] + alpha * sv.r[j];
  return out;
}

void apply_in_place(const SteeringSpec& spec, std::size_t layer, std::span<double> x) {
  const SteeringVector* v = spec.vector_for(layer);
  if (v == nullptr) return;
  if (spec.layers.kind != LayerSelection::Kind::all &&
      std::find(spec.layers.layers.begin(), spec.layers.layers.end(), layer) == spec.layers.layers.end()) {
    return;
  }
  Activation out;
  switch (spec.mode) {
    case Mode::direct_add: out = apply_direct_add(x, v->r, spec.alpha); break;
    case Mode::direct_ablate: out = apply_ablation(x, v->r); break;
    case Mode::affine: out = apply_affine(x, *v, spec.alpha); break;
  }
  std::copy(out.begin(), out.end(), x.begin());
}

}  // namespace logitdiff::steering
