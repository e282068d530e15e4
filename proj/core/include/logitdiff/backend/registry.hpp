#pragma once

#include <memory>
#include <string>
#include <vector>

#include "logitdiff/backend/backend.hpp"

namespace logitdiff {

// Six-token alphabet used by the built-in toys: "<s>", "</s>", A, G, K, W.
Vocabulary toy_protein_vocabulary();

// Built-in Markov pair over toy_protein_vocabulary(). The concept table
// raises <s>->W, W->K and K->W by ln 9, enriching the "WKW" motif.
std::vector<std::vector<double>> toy_markov_base_table();
std::vector<std::vector<double>> toy_markov_concept_table();

// Resolves a backend address:
//   toy:<preset>            markov-base, markov-toxic, transformer, motif,
//                           fold, planted
//   toy:<file.json>         toy model described by a JSON file
//   scores:<file.csv>       precomputed classifier / pLDDT / embedding table
//   cmd:<shell command>     child process speaking the protocol on stdio
//   unix:<path>, tcp:<host>:<port>
std::shared_ptr<BackendProvider> open_backend(const std::string& address);

// Same forms as open_backend minus the remote ones; used by serve-toy.
std::shared_ptr<BackendProvider> open_toy_model(const std::string& spec);

}  // namespace logitdiff
