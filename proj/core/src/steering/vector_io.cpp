#include "logitdiff/steering/vector_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "logitdiff/core/error.hpp"
#include "logitdiff/core/io.hpp"

namespace logitdiff::steering {
namespace {

constexpr const char* kMagic = "logitdiff-steering";
constexpr int kVersion = 1;

void write_row(std::ostream& out, const char* name, const std::vector<double>& v) {
  out << name;
  for (double x : v) out << ' ' << format_exact(x);
  out << '\n';
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string> expect(const std::string& keyword) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      std::istringstream ss(line);
      std::vector<std::string> words;
      for (std::string w; ss >> w;) words.push_back(w);
      if (words.front() != keyword) {
        fail(ErrorCode::format, "steering file line " + std::to_string(line_no_) + ": expected '" + keyword +
                                    "', found '" + words.front() + "'");
      }
      words.erase(words.begin());
      return words;
    }
    fail(ErrorCode::format, "steering file ended while expecting '" + keyword + "'");
  }

  double number(const std::string& s) const {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      fail(ErrorCode::format, "steering file line " + std::to_string(line_no_) + ": bad number '" + s + "'");
    }
    return v;
  }

  std::size_t count(const std::string& s) const {
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      fail(ErrorCode::format, "steering file line " + std::to_string(line_no_) + ": bad integer '" + s + "'");
    }
    return v;
  }

  std::vector<double> row(const std::string& keyword, std::size_t dim) {
    const auto words = expect(keyword);
    if (words.size() != dim) {
      fail(ErrorCode::format, "steering file line " + std::to_string(line_no_) + ": '" + keyword + "' has " +
                                  std::to_string(words.size()) + " values, expected " + std::to_string(dim));
    }
    std::vector<double> v;
    v.reserve(dim);
    for (const auto& w : words) v.push_back(number(w));
    return v;
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

}  // namespace

void write_vectors(std::ostream& out, const std::vector<SteeringVector>& vectors) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "vectors " << vectors.size() << '\n';
  for (const auto& v : vectors) {
    out << "layer " << v.layer << '\n';
    out << "dim " << v.r.size() << '\n';
    out << "counts " << v.n_plus << ' ' << v.n_minus << '\n';
    write_row(out, "r", v.r);
    write_row(out, "mu_plus", v.mu_plus);
    write_row(out, "mu_minus", v.mu_minus);
    out << "end\n";
  }
}

std::vector<SteeringVector> read_vectors(std::istream& in) {
  LineReader reader(in);
  const auto magic = reader.expect(kMagic);
  if (magic.size() != 1 || magic[0] != std::to_string(kVersion)) {
    fail(ErrorCode::format, "unsupported steering file version");
  }
  const auto header = reader.expect("vectors");
  if (header.size() != 1) fail(ErrorCode::format, "malformed 'vectors' line");
  const std::size_t n = reader.count(header[0]);
  std::vector<SteeringVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    SteeringVector v;
    v.layer = reader.count(reader.expect("layer").at(0));
    const std::size_t dim = reader.count(reader.expect("dim").at(0));
    const auto counts = reader.expect("counts");
    if (counts.size() != 2) fail(ErrorCode::format, "malformed 'counts' line");
    v.n_plus = reader.count(counts[0]);
    v.n_minus = reader.count(counts[1]);
    v.r = reader.row("r", dim);
    v.mu_plus = reader.row("mu_plus", dim);
    v.mu_minus = reader.row("mu_minus", dim);
    reader.expect("end");
    out.push_back(std::move(v));
  }
  return out;
}

void save_vectors(const std::filesystem::path& path, const std::vector<SteeringVector>& vectors) {
  std::ostringstream ss;
  write_vectors(ss, vectors);
  write_file_atomic(path, ss.str());
}

std::vector<SteeringVector> load_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::data, "cannot open steering file " + path.string());
  return read_vectors(in);
}

}  // namespace logitdiff::steering
