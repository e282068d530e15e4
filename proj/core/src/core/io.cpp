#include "logitdiff/core/io.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "logitdiff/core/error.hpp"

namespace logitdiff {
namespace {

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string where(const CsvTable& t) {
  return t.source.empty() ? std::string("<csv>") : t.source.string();
}

}  // namespace

std::optional<std::size_t> CsvTable::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t CsvTable::column(std::string_view name) const {
  if (auto c = find_column(name)) return *c;
  fail(ErrorCode::format, where(*this) + ": missing column '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  const std::string& s = rows.at(row).at(col);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::format, where(*this) + ": row " + std::to_string(row + 1) + " column '" + header.at(col) +
                                "' is not a number: '" + s + "'");
  }
  return v;
}

long long CsvTable::integer(std::size_t row, std::size_t col) const {
  const std::string& s = rows.at(row).at(col);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::format, where(*this) + ": row " + std::to_string(row + 1) + " column '" + header.at(col) +
                                "' is not an integer: '" + s + "'");
  }
  return v;
}

bool CsvTable::boolean(std::size_t row, std::size_t col) const {
  const std::string& s = rows.at(row).at(col);
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  fail(ErrorCode::format, where(*this) + ": row " + std::to_string(row + 1) + " column '" + header.at(col) +
                              "' is not a boolean: '" + s + "'");
}

CsvTable parse_csv(std::string_view text, const std::filesystem::path& source) {
  CsvTable table;
  table.source = source;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (!have_header && line.front() == '#') {
      std::string_view body = line.substr(1);
      while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      table.comments.emplace_back(body);
      continue;
    }
    auto fields = split_fields(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != table.header.size()) {
        fail(ErrorCode::format, where(table) + ": row " + std::to_string(table.rows.size() + 1) + " has " +
                                    std::to_string(fields.size()) + " fields, expected " +
                                    std::to_string(table.header.size()));
      }
      table.rows.push_back(std::move(fields));
    }
    if (end == text.size()) break;
  }
  return table;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::data, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_text_file(path), path); }

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::data, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail(ErrorCode::data, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::data, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string format_exact(double value) { return fmt::format("{}", value); }

}  // namespace logitdiff
