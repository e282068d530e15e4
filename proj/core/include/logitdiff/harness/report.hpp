#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace logitdiff::harness {

// "+0.03", "−0.30" (U+2212 minus). Values that round to zero print as "+0.00".
std::string format_signed(double value, int decimals = 2);
// "+1.59 ± 21.20"
std::string format_delta_sigma(double delta, double sigma);

struct ReportOutput {
  std::map<std::string, std::string> files;  // file name -> content
};

// Reads whichever of quality.csv, rates.csv, sweep.csv and probe.csv exist
// in `results` (each starting with "# logitdiff <kind> v1") and renders:
//   quality_table.csv / .txt  from quality.csv
//   rate_bars.csv             baseline, concept and lda-at-optimum per group
//   reductions.csv / .txt     baseline mean minus lda mean at the optimum
//   rate_curves.csv           rate vs alpha with reference levels
//   quality_curves.csv        delta FED / delta pLDDT vs alpha
//   probe_layers.csv          per-layer probe metric mean and sd
//   plots.txt                 plain-text description of every plot
// no_data when none of the inputs exist; format error naming the file on a
// schema mismatch.
ReportOutput build_report(const std::filesystem::path& results);

void write_report(const ReportOutput& report, const std::filesystem::path& out_dir);

}  // namespace logitdiff::harness
