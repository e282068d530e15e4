#include "logitdiff/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fmt/format.h>

#include "json.hpp"
#include "logitdiff/core/error.hpp"
#include "logitdiff/core/io.hpp"
#include "logitdiff/steering/vector_io.hpp"

namespace logitdiff::harness {
namespace {

using json = nlohmann::json;

[[noreturn]] void config_error(const std::string& message) { fail(ErrorCode::config, message); }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    config_error(fmt::format("config field '{}' has the wrong type", key));
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

steering::LayerSelection parse_layers(const json& j) {
  if (j.is_string() && j.get<std::string>() == "all") return steering::LayerSelection::all_layers();
  if (j.is_number_unsigned()) return steering::LayerSelection::single(j.get<std::size_t>());
  if (j.is_array()) {
    std::vector<std::size_t> layers;
    for (const auto& v : j) {
      if (!v.is_number_unsigned()) config_error("steering layers must be nonnegative integers");
      layers.push_back(v.get<std::size_t>());
    }
    return steering::LayerSelection::of(std::move(layers));
  }
  config_error("steering layers must be \"all\", a layer index, or a list of indices");
}

json layers_to_json(const steering::LayerSelection& s) {
  switch (s.kind) {
    case steering::LayerSelection::Kind::all:
      return "all";
    case steering::LayerSelection::Kind::single:
      return s.layers.front();
    case steering::LayerSelection::Kind::explicit_set:
      return s.layers;
  }
  return "all";
}

Intervention parse_intervention(const json& j, const std::filesystem::path& base) {
  Intervention iv;
  const auto type = get_or<std::string>(j, "type", "none");
  iv.alpha = get_or<double>(j, "alpha", 0.0);
  if (type == "none") {
    iv.kind = InterventionKind::none;
  } else if (type == "lda") {
    iv.kind = InterventionKind::lda;
  } else if (type == "steering") {
    iv.kind = InterventionKind::steering;
    steering::SteeringSpec spec;
    try {
      spec.mode = steering::mode_from_string(get_or<std::string>(j, "mode", "direct-add"));
    } catch (const Error& e) {
      config_error(e.what());
    }
    spec.alpha = iv.alpha;
    spec.layers = j.contains("layers") ? parse_layers(j.at("layers")) : steering::LayerSelection::all_layers();
    const auto vectors = get_or<std::string>(j, "vectors", "");
    if (vectors.empty()) config_error("steering intervention needs a 'vectors' file");
    iv.vectors_path = resolve(base, vectors);
    try {
      spec.vectors = steering::load_vectors(iv.vectors_path);
    } catch (const Error& e) {
      config_error(fmt::format("cannot load steering vectors: {}", e.what()));
    }
    iv.steering = std::move(spec);
  } else {
    config_error(fmt::format("unknown intervention type '{}'", type));
  }
  return iv;
}

}  // namespace

std::string Intervention::condition() const {
  switch (kind) {
    case InterventionKind::none:
      return "baseline";
    case InterventionKind::lda:
      return "lda";
    case InterventionKind::steering:
      return std::string(steering::to_string(steering ? steering->mode : steering::Mode::direct_add));
  }
  return "baseline";
}

Intervention Intervention::with_alpha(double a) const {
  Intervention out = *this;
  out.alpha = a;
  if (out.steering) out.steering->alpha = a;
  return out;
}

void ExperimentConfig::validate() const {
  if (version != kConfigVersion) config_error(fmt::format("unsupported config version {}", version));
  if (backends.generator.empty()) config_error("backends.generator is required");
  if (backends.classifier.empty()) config_error("backends.classifier is required");
  if (intervention.kind == InterventionKind::lda && backends.concept_model.empty()) {
    config_error("lda intervention requires backends.concept");
  }
  if (n == 0) config_error("sampling.n must be positive");
  if (k == 0 || k > n) config_error(fmt::format("sampling.k must be in [1, n]; got k={} n={}", k, n));
  if (!(tau > 0.0) || !std::isfinite(tau)) config_error("sampling.tau must be positive");
  if (max_length == 0) config_error("sampling.max_length must be positive");
  if (runs == 0) config_error("runs must be at least 1");
  if (!std::isfinite(intervention.alpha)) config_error("alpha must be finite");
  if (alphas.empty()) config_error("alphas must be nonempty");
  for (double a : alphas) {
    if (!std::isfinite(a)) config_error("alphas must be finite");
  }
  if (!std::is_sorted(alphas.begin(), alphas.end())) config_error("alphas must be sorted ascending");
  if (group.empty()) config_error("group must be nonempty");
  if (group.find(',') != std::string::npos || name.find(',') != std::string::npos) {
    config_error("name and group must not contain commas");
  }
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) config_error("config must be a JSON object");
  static const std::vector<std::string> known{"version", "name",    "group",   "backends", "intervention",
                                              "sampling", "runs",   "seed",    "alphas",   "workers",
                                              "output",  "quality"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      config_error(fmt::format("unknown config field '{}'", key));
    }
  }

  ExperimentConfig c;
  c.version = get_or<int>(j, "version", 0);
  c.name = get_or<std::string>(j, "name", c.name);
  c.group = get_or<std::string>(j, "group", c.group);
  if (!j.contains("backends") || !j.at("backends").is_object()) config_error("config needs a 'backends' object");
  const auto& b = j.at("backends");
  c.backends.generator = get_or<std::string>(b, "generator", "");
  c.backends.concept_model = get_or<std::string>(b, "concept", "");
  c.backends.reference = get_or<std::string>(b, "reference", "");
  c.backends.embedder = get_or<std::string>(b, "embedder", "");
  c.backends.classifier = get_or<std::string>(b, "classifier", "");
  c.backends.fold = get_or<std::string>(b, "fold", "");
  if (j.contains("intervention")) c.intervention = parse_intervention(j.at("intervention"), base_dir);
  if (j.contains("sampling")) {
    const auto& s = j.at("sampling");
    c.n = get_or<std::size_t>(s, "n", c.n);
    c.k = get_or<std::size_t>(s, "k", c.k);
    c.tau = get_or<double>(s, "tau", c.tau);
    c.max_length = get_or<std::size_t>(s, "max_length", c.max_length);
  }
  c.runs = get_or<std::size_t>(j, "runs", c.runs);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.alphas = get_or<std::vector<double>>(j, "alphas", c.alphas);
  c.workers = get_or<std::size_t>(j, "workers", c.workers);
  c.output = resolve(base_dir, get_or<std::string>(j, "output", c.output.string()));
  if (j.contains("quality")) {
    const auto& q = j.at("quality");
    const auto ref = get_or<std::string>(q, "reference_embeddings", "");
    if (!ref.empty()) c.reference_embeddings = resolve(base_dir, ref);
    const auto layer = get_or<std::string>(q, "embedding_layer", "");
    if (!layer.empty()) c.embedding_layer = layer;
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    config_error(e.what());
  }
  return parse_config(text, path.parent_path());
}

void apply_env_overrides(ExperimentConfig& config, const EnvLookup& lookup) {
  const std::pair<const char*, std::string*> roles[] = {
      {"GENERATOR", &config.backends.generator}, {"CONCEPT", &config.backends.concept_model},
      {"REFERENCE", &config.backends.reference}, {"EMBEDDER", &config.backends.embedder},
      {"CLASSIFIER", &config.backends.classifier}, {"FOLD", &config.backends.fold}};
  for (const auto& [role, field] : roles) {
    const auto value = lookup(std::string("LOGITDIFF_BACKEND_") + role);
    if (value && !value->empty()) *field = *value;
  }
}

void apply_env_overrides(ExperimentConfig& config) {
  apply_env_overrides(config, [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    return v ? std::optional<std::string>(v) : std::nullopt;
  });
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["version"] = c.version;
  j["name"] = c.name;
  j["group"] = c.group;
  j["backends"] = {{"generator", c.backends.generator}, {"concept", c.backends.concept_model},
                   {"reference", c.backends.reference}, {"embedder", c.backends.embedder},
                   {"classifier", c.backends.classifier}, {"fold", c.backends.fold}};
  json iv;
  switch (c.intervention.kind) {
    case InterventionKind::none:
      iv["type"] = "none";
      break;
    case InterventionKind::lda:
      iv["type"] = "lda";
      iv["alpha"] = c.intervention.alpha;
      break;
    case InterventionKind::steering:
      iv["type"] = "steering";
      iv["alpha"] = c.intervention.alpha;
      iv["mode"] = std::string(steering::to_string(c.intervention.steering->mode));
      iv["layers"] = layers_to_json(c.intervention.steering->layers);
      iv["vectors"] = c.intervention.vectors_path.string();
      break;
  }
  j["intervention"] = iv;
  j["sampling"] = {{"n", c.n}, {"k", c.k}, {"tau", c.tau}, {"max_length", c.max_length}};
  j["runs"] = c.runs;
  j["seed"] = c.seed;
  j["alphas"] = c.alphas;
  j["workers"] = c.workers;
  j["output"] = c.output.string();
  json q = json::object();
  if (c.reference_embeddings) q["reference_embeddings"] = c.reference_embeddings->string();
  if (c.embedding_layer) q["embedding_layer"] = *c.embedding_layer;
  j["quality"] = q;
  return j.dump(2) + "\n";
}

}  // namespace logitdiff::harness
