#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "logitdiff/core/sequence.hpp"
#include "logitdiff/core/vocabulary.hpp"

namespace logitdiff {

// FASTA records. Header: ">id|backend|seed|run"; body: token strings of the
// sequence concatenated, marker tokens omitted, wrapped at 60 columns. On
// read, a marker begin token is restored at position 0 and a trailing marker
// end token is not (FASTA carries residues only).
std::string sequence_text(const Sequence& seq, const Vocabulary& vocab);
Sequence sequence_from_text(std::string_view text, const Vocabulary& vocab, Provenance provenance = {});

void write_fasta(std::ostream& out, const std::vector<Sequence>& seqs, const Vocabulary& vocab);
std::vector<Sequence> read_fasta(std::istream& in, const Vocabulary& vocab);

}  // namespace logitdiff
