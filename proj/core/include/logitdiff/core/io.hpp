#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace logitdiff {

// Minimal CSV: comma separated, no quoting, optional leading "# ..." lines.
struct CsvTable {
  std::filesystem::path source;
  std::vector<std::string> comments;  // leading '#' lines without the '#'
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> find_column(std::string_view name) const;
  std::size_t column(std::string_view name) const;  // throws format error
  double number(std::size_t row, std::size_t col) const;
  long long integer(std::size_t row, std::size_t col) const;
  bool boolean(std::size_t row, std::size_t col) const;
};

CsvTable parse_csv(std::string_view text, const std::filesystem::path& source = {});
CsvTable read_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

// Writes to "<path>.tmp" then renames over path.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Shortest decimal that round-trips the double exactly.
std::string format_exact(double value);

}  // namespace logitdiff
