#include "logitdiff/core/fasta.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "logitdiff/core/error.hpp"

namespace logitdiff {
namespace {

constexpr std::size_t kLineWidth = 60;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::uint64_t parse_u64(const std::string& s, const char* field) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::format, std::string("FASTA header field '") + field + "' is not an integer: " + s);
  }
}

}  // namespace

std::string sequence_text(const Sequence& seq, const Vocabulary& vocab) {
  return vocab.decode(seq.ids());
}

Sequence sequence_from_text(std::string_view text, const Vocabulary& vocab, Provenance provenance) {
  std::vector<TokenId> ids = vocab.encode(text);
  if (vocab.is_marker(vocab.bos())) ids.insert(ids.begin(), vocab.bos());
  Sequence seq(std::move(ids), std::move(provenance));
  seq.validate(vocab);
  return seq;
}

void write_fasta(std::ostream& out, const std::vector<Sequence>& seqs, const Vocabulary& vocab) {
  for (const Sequence& seq : seqs) {
    const Provenance& p = seq.provenance();
    out << '>' << p.id << '|' << p.backend << '|' << p.seed << '|' << p.run << '\n';
    const std::string body = sequence_text(seq, vocab);
    for (std::size_t i = 0; i < body.size(); i += kLineWidth) {
      out << body.substr(i, kLineWidth) << '\n';
    }
    if (body.empty()) out << '\n';
  }
}

std::vector<Sequence> read_fasta(std::istream& in, const Vocabulary& vocab) {
  std::vector<Sequence> out;
  std::string line;
  std::string header;
  std::string body;
  bool have_record = false;
  auto flush = [&] {
    if (!have_record) return;
    const auto fields = split(header, '|');
    if (fields.size() != 4) {
      fail(ErrorCode::format, "FASTA header must be id|backend|seed|run: " + header);
    }
    Provenance p{fields[0], fields[1], parse_u64(fields[2], "seed"), parse_u64(fields[3], "run"),
                 static_cast<std::uint64_t>(out.size())};
    out.push_back(sequence_from_text(body, vocab, std::move(p)));
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '>') {
      flush();
      header = line.substr(1);
      body.clear();
      have_record = true;
    } else {
      if (!have_record) fail(ErrorCode::format, "FASTA sequence data before the first header");
      body += line;
    }
  }
  flush();
  return out;
}

}  // namespace logitdiff
