#include "logitdiff/backend/registry.hpp"

#include <cmath>
#include <filesystem>

#include "json_codec.hpp"
#include "logitdiff/backend/remote.hpp"
#include "logitdiff/backend/toy_backends.hpp"
#include "logitdiff/core/error.hpp"
#include "logitdiff/core/io.hpp"

namespace logitdiff {
namespace {

constexpr double kNever = -1e4;  // exp underflows to exactly 0 after max-subtraction

std::shared_ptr<BackendProvider> toy_from_json(const std::string& path) {
  detail::json j;
  try {
    j = detail::json::parse(read_text_file(path));
  } catch (const detail::json::exception& e) {
    fail(ErrorCode::config, path + ": " + e.what());
  }
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "markov") {
      return std::make_shared<ToyMarkovModel>(j.value("id", std::string("toy-markov")),
                                              detail::vocabulary_from_json(j.at("vocabulary")),
                                              j.at("table").get<std::vector<std::vector<double>>>());
    }
    if (type == "transformer") {
      ToyTransformerConfig cfg;
      cfg.id = j.value("id", cfg.id);
      cfg.layers = j.value("layers", cfg.layers);
      cfg.hidden = j.value("hidden", cfg.hidden);
      cfg.seed = j.value("seed", cfg.seed);
      const Vocabulary vocab =
          j.contains("vocabulary") ? detail::vocabulary_from_json(j.at("vocabulary")) : toy_protein_vocabulary();
      return std::make_shared<ToyTransformerModel>(vocab, cfg);
    }
    if (type == "motif") {
      return std::make_shared<MotifClassifierModel>(j.at("motif").get<std::string>(),
                                                    j.value("id", std::string("toy-motif")));
    }
    if (type == "fold") return std::make_shared<ToyFoldModel>(j.value("id", std::string("toy-fold")));
    if (type == "planted") {
      const Vocabulary vocab =
          j.contains("vocabulary") ? detail::vocabulary_from_json(j.at("vocabulary")) : toy_protein_vocabulary();
      return std::make_shared<PlantedSignalModel>(vocab, j.value("motif", std::string("WKW")),
                                                  j.value("layers", std::size_t{2}), j.value("hidden", std::size_t{8}),
                                                  j.value("strength", 3.0), j.value("seed", std::uint64_t{11}));
    }
    fail(ErrorCode::config, path + ": unknown toy model type '" + type + "'");
  } catch (const detail::json::exception& e) {
    fail(ErrorCode::config, path + ": " + e.what());
  }
}

}  // namespace

Vocabulary toy_protein_vocabulary() {
  return Vocabulary({"<s>", "</s>", "A", "G", "K", "W"}, SpecialTokens{0, 1, std::nullopt});
}

std::vector<std::vector<double>> toy_markov_base_table() {
  //                     <s>     </s>    A    G    K    W
  return {
      /* <s>  */ {kNever, kNever, 0.0, 0.0, 0.0, -0.5},
      /* </s> */ {kNever, 0.0, 0.0, 0.0, 0.0, 0.0},
      /* A    */ {kNever, -1.0, 0.0, 0.0, 0.0, 0.0},
      /* G    */ {kNever, -1.0, 0.0, 0.0, 0.0, 0.0},
      /* K    */ {kNever, -1.0, 0.0, 0.0, 0.0, 0.0},
      /* W    */ {kNever, -1.0, 0.0, 0.0, 0.0, 0.0},
  };
}

std::vector<std::vector<double>> toy_markov_concept_table() {
  auto t = toy_markov_base_table();
  const double boost = std::log(9.0);
  t[0][5] += boost;  // <s> -> W
  t[5][4] += boost;  // W -> K
  t[4][5] += boost;  // K -> W
  return t;
}

std::shared_ptr<BackendProvider> open_toy_model(const std::string& spec) {
  if (spec == "markov-base") {
    return std::make_shared<ToyMarkovModel>("toy-markov-base", toy_protein_vocabulary(), toy_markov_base_table());
  }
  if (spec == "markov-toxic") {
    return std::make_shared<ToyMarkovModel>("toy-markov-toxic", toy_protein_vocabulary(), toy_markov_concept_table());
  }
  if (spec == "transformer") return std::make_shared<ToyTransformerModel>(toy_protein_vocabulary());
  if (spec == "motif") return std::make_shared<MotifClassifierModel>("WKW");
  if (spec == "fold") return std::make_shared<ToyFoldModel>();
  if (spec == "planted") return std::make_shared<PlantedSignalModel>(toy_protein_vocabulary(), "WKW");
  if (spec.starts_with("scores:")) return ScoreTableModel::from_csv(spec.substr(7));
  if (std::filesystem::exists(spec)) return toy_from_json(spec);
  fail(ErrorCode::config, "unknown toy model '" + spec + "'");
}

std::shared_ptr<BackendProvider> open_backend(const std::string& address) {
  if (address.starts_with("toy:")) return open_toy_model(address.substr(4));
  if (address.starts_with("scores:")) return ScoreTableModel::from_csv(address.substr(7));
  if (address.starts_with("cmd:") || address.starts_with("unix:") || address.starts_with("tcp:")) {
    return std::make_shared<RemoteProvider>(RemoteConnection::open(address));
  }
  fail(ErrorCode::config, "unrecognised backend address '" + address + "'");
}

}  // namespace logitdiff
