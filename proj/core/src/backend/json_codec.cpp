#include "json_codec.hpp"

#include "logitdiff/core/error.hpp"

namespace logitdiff::detail {
namespace {

json optional_id(const std::optional<TokenId>& id) { return id ? json(*id) : json(nullptr); }

std::optional<TokenId> optional_id_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return unsigned_from<TokenId>(j.at(key));
}

}  // namespace

json vocabulary_to_json(const Vocabulary& v) {
  return json{{"tokens", v.tokens()},
              {"bos", v.bos()},
              {"eos", optional_id(v.eos())},
              {"pad", optional_id(v.pad())}};
}

Vocabulary vocabulary_from_json(const json& j) {
  SpecialTokens specials;
  specials.bos = unsigned_from<TokenId>(j.at("bos"));
  specials.eos = optional_id_from(j, "eos");
  specials.pad = optional_id_from(j, "pad");
  return Vocabulary(j.at("tokens").get<std::vector<std::string>>(), specials);
}

json descriptor_to_json(const BackendDescriptor& d) {
  json caps = json::array();
  for (Capability c : d.capabilities.list()) caps.push_back(std::string(to_string(c)));
  json j{{"id", d.id},
         {"capabilities", caps},
         {"vocabulary", d.vocabulary ? vocabulary_to_json(*d.vocabulary) : json(nullptr)},
         {"layer_count", d.layer_count},
         {"hidden_size", d.hidden_size},
         {"classify_threshold", d.classify_threshold},
         {"numeric_tolerance", d.numeric_tolerance},
         {"parameters", d.parameters}};
  return j;
}

BackendDescriptor descriptor_from_json(const json& j) {
  BackendDescriptor d;
  d.id = j.at("id").get<std::string>();
  for (const auto& c : j.at("capabilities")) d.capabilities.add(capability_from_string(c.get<std::string>()));
  if (j.contains("vocabulary") && !j.at("vocabulary").is_null()) d.vocabulary = vocabulary_from_json(j.at("vocabulary"));
  d.layer_count = j.value("layer_count", std::size_t{0});
  d.hidden_size = j.value("hidden_size", std::size_t{0});
  d.classify_threshold = j.value("classify_threshold", 0.5);
  d.numeric_tolerance = j.value("numeric_tolerance", 0.0);
  if (j.contains("parameters")) d.parameters = j.at("parameters").get<std::map<std::string, std::string>>();
  return d;
}

json steering_vector_to_json(const steering::SteeringVector& v) {
  return json{{"layer", v.layer},     {"r", v.r},         {"mu_plus", v.mu_plus},
              {"mu_minus", v.mu_minus}, {"n_plus", v.n_plus}, {"n_minus", v.n_minus}};
}

steering::SteeringVector steering_vector_from_json(const json& j) {
  steering::SteeringVector v;
  v.layer = unsigned_from<std::size_t>(j.at("layer"));
  v.r = j.at("r").get<std::vector<double>>();
  v.mu_plus = j.value("mu_plus", std::vector<double>{});
  v.mu_minus = j.value("mu_minus", std::vector<double>{});
  v.n_plus = j.value("n_plus", std::size_t{0});
  v.n_minus = j.value("n_minus", std::size_t{0});
  return v;
}

json steering_spec_to_json(const steering::SteeringSpec& s) {
  using Kind = steering::LayerSelection::Kind;
  const char* kind = s.layers.kind == Kind::all ? "all" : s.layers.kind == Kind::single ? "single" : "explicit";
  json vectors = json::array();
  for (const auto& v : s.vectors) vectors.push_back(steering_vector_to_json(v));
  return json{{"mode", std::string(steering::to_string(s.mode))},
              {"alpha", s.alpha},
              {"layers", json{{"kind", kind}, {"layers", s.layers.layers}}},
              {"vectors", vectors}};
}

steering::SteeringSpec steering_spec_from_json(const json& j) {
  using Kind = steering::LayerSelection::Kind;
  steering::SteeringSpec s;
  s.mode = steering::mode_from_string(j.at("mode").get<std::string>());
  s.alpha = j.value("alpha", 0.0);
  const json& layers = j.at("layers");
  const auto kind = layers.at("kind").get<std::string>();
  if (kind == "all") {
    s.layers.kind = Kind::all;
  } else if (kind == "single") {
    s.layers.kind = Kind::single;
  } else if (kind == "explicit") {
    s.layers.kind = Kind::explicit_set;
  } else {
    fail(ErrorCode::format, "unknown layer selection '" + kind + "'");
  }
  if (layers.contains("layers")) s.layers.layers = unsigned_list<std::size_t>(layers.at("layers"));
  for (const auto& v : j.at("vectors")) s.vectors.push_back(steering_vector_from_json(v));
  return s;
}

}  // namespace logitdiff::detail
