#include "logitdiff/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <vector>

#include "logitdiff/core/error.hpp"
#include "logitdiff/core/io.hpp"
#include "logitdiff/harness/pipeline.hpp"

namespace logitdiff::harness {
namespace {

constexpr std::string_view kMinus = "−";

std::optional<CsvTable> load_input(const std::filesystem::path& dir, const std::string& kind,
                                   std::initializer_list<std::string_view> columns) {
  const auto path = dir / (kind + ".csv");
  if (!std::filesystem::exists(path)) return std::nullopt;
  CsvTable t = read_csv(path);
  const std::string expected = fmt::format("logitdiff {} v1", kind);
  if (t.comments.empty() || t.comments.front() != expected) {
    fail(ErrorCode::format, fmt::format("{}: expected first line '# {}'", path.string(), expected));
  }
  for (auto c : columns) {
    if (!t.find_column(c)) fail(ErrorCode::format, fmt::format("{}: missing column '{}'", path.string(), c));
  }
  return t;
}

std::optional<double> optional_number(const CsvTable& t, std::size_t row, std::size_t col) {
  if (t.rows[row][col].empty()) return std::nullopt;
  return t.number(row, col);
}

struct RateGroup {
  std::string group, condition;
  std::optional<double> alpha;
  std::vector<double> rates;
  RateSummary summary;
};

std::vector<RateGroup> group_rates(const CsvTable& t) {
  const auto cg = t.column("group"), cc = t.column("condition"), ca = t.column("alpha"), cr = t.column("rate");
  std::vector<RateGroup> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto alpha = optional_number(t, r, ca);
    const double rate = t.number(r, cr);
    if (!(rate >= 0.0 && rate <= 100.0)) {
      fail(ErrorCode::data, fmt::format("{}: rate {} outside [0, 100] on row {}", t.source.string(), rate, r + 1));
    }
    auto it = std::find_if(out.begin(), out.end(), [&](const RateGroup& g) {
      return g.group == t.rows[r][cg] && g.condition == t.rows[r][cc] && g.alpha == alpha;
    });
    if (it == out.end()) {
      out.push_back({t.rows[r][cg], t.rows[r][cc], alpha, {}, {}});
      it = std::prev(out.end());
    }
    it->rates.push_back(rate);
  }
  for (auto& g : out) g.summary = summarize_rates(g.rates);
  return out;
}

std::vector<std::string> groups_in_order(const std::vector<RateGroup>& rows) {
  std::vector<std::string> groups;
  for (const auto& r : rows) {
    if (std::find(groups.begin(), groups.end(), r.group) == groups.end()) groups.push_back(r.group);
  }
  return groups;
}

const RateGroup* find_reference(const std::vector<RateGroup>& rows, const std::string& group, const std::string& cond) {
  for (const auto& r : rows) {
    if (r.group == group && r.condition == cond && !r.alpha) return &r;
  }
  return nullptr;
}

// Argmin of the mean rate over alpha rows of one condition; ties to smaller alpha.
const RateGroup* optimum(const std::vector<RateGroup>& rows, const std::string& group, const std::string& cond) {
  const RateGroup* best = nullptr;
  for (const auto& r : rows) {
    if (r.group != group || r.condition != cond || !r.alpha) continue;
    if (best == nullptr || r.summary.mean < best->summary.mean ||
        (r.summary.mean == best->summary.mean && *r.alpha < *best->alpha)) {
      best = &r;
    }
  }
  return best;
}

std::string fixed(double v, int decimals = 4) { return fmt::format("{:.{}f}", v, decimals); }
std::string alpha_cell(const std::optional<double>& a) { return a ? format_exact(*a) : std::string{}; }

std::string bar_row(const RateGroup& g) {
  return fmt::format("{},{},{},{},{},{},{}\n", g.group, g.condition, alpha_cell(g.alpha), fixed(g.summary.mean),
                     fixed(g.summary.sem), fixed(g.summary.sd), g.summary.runs);
}

void render_rates(const CsvTable& t, ReportOutput& out, std::string& plots) {
  const auto rows = group_rates(t);
  std::string bars = "group,condition,alpha,mean,sem,sd,runs\n";
  std::string reductions = "group,optimal_alpha,baseline_mean,lda_mean,reduction_pp\n";
  std::string reductions_txt;
  std::string curves = "group,condition,alpha,mean,sem,baseline_level,concept_level\n";
  for (const auto& group : groups_in_order(rows)) {
    const RateGroup* base = find_reference(rows, group, "baseline");
    const RateGroup* concept_row = find_reference(rows, group, "concept");
    const RateGroup* lda = optimum(rows, group, "lda");
    if (base) bars += bar_row(*base);
    if (concept_row) bars += bar_row(*concept_row);
    if (lda) bars += bar_row(*lda);
    if (base && lda) {
      const double reduction = base->summary.mean - lda->summary.mean;
      reductions += fmt::format("{},{},{},{},{}\n", group, format_exact(*lda->alpha), fixed(base->summary.mean, 2),
                                fixed(lda->summary.mean, 2), fixed(reduction, 2));
      reductions_txt += fmt::format("{}: {} pp reduction at alpha {}\n", group, fixed(reduction, 2),
                                    format_exact(*lda->alpha));
    }
    for (const auto& r : rows) {
      if (r.group != group || !r.alpha) continue;
      curves += fmt::format("{},{},{},{},{},{},{}\n", r.group, r.condition, format_exact(*r.alpha),
                            fixed(r.summary.mean), fixed(r.summary.sem), base ? fixed(base->summary.mean) : "",
                            concept_row ? fixed(concept_row->summary.mean) : "");
    }
  }
  out.files["rate_bars.csv"] = bars;
  out.files["reductions.csv"] = reductions;
  out.files["reductions.txt"] = reductions_txt;
  out.files["rate_curves.csv"] = curves;
  plots +=
      "plot rate_bars\n  file rate_bars.csv\n  type bar\n  x group\n  series condition\n  y mean\n"
      "  error sem\n  error_label mean +/- s.e.m. across runs\n  ylabel toxicity rate (%)\nend\n"
      "plot rate_curves\n  file rate_curves.csv\n  type line\n  facet group\n  series condition\n  x alpha\n"
      "  y mean\n  error sem\n  hline baseline_level dashed gray\n  hline concept_level dashed red\n"
      "  ylabel toxicity rate (%)\nend\n";
}

void render_quality(const CsvTable& t, ReportOutput& out, std::string& plots) {
  const auto cg = t.column("group"), cf = t.column("delta_fed"), cp = t.column("delta_plddt"),
             cs = t.column("sigma_delta_plddt");
  std::string csv = "group,delta_fed,delta_plddt\n";
  std::string txt = fmt::format("{:<14}{}\n", "group", "dFED / dpLDDT");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string fed = format_signed(t.number(r, cf));
    const std::string plddt = format_delta_sigma(t.number(r, cp), t.number(r, cs));
    csv += fmt::format("{},{},{}\n", t.rows[r][cg], fed, plddt);
    txt += fmt::format("{:<14}{} / {}\n", t.rows[r][cg], fed, plddt);
  }
  out.files["quality_table.csv"] = csv;
  out.files["quality_table.txt"] = txt;
  plots += "table quality_table\n  file quality_table.csv\n  columns group delta_fed delta_plddt\n  error sigma_delta_plddt (+/- 1 sd)\nend\n";
}

void render_sweep(const CsvTable& t, ReportOutput& out, std::string& plots) {
  const auto cg = t.column("group"), cc = t.column("condition"), ca = t.column("alpha"), cv = t.column("valid"),
             cf = t.column("delta_fed"), cp = t.column("delta_plddt"), cs = t.column("sigma_delta_plddt");
  std::string csv = "group,condition,alpha,delta_fed,delta_plddt,sigma_delta_plddt\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (!t.boolean(r, cv)) continue;
    const auto fed = optional_number(t, r, cf);
    const auto dp = optional_number(t, r, cp);
    const auto sigma = optional_number(t, r, cs);
    csv += fmt::format("{},{},{},{},{},{}\n", t.rows[r][cg], t.rows[r][cc], format_exact(t.number(r, ca)),
                       fed ? fixed(*fed) : "", dp ? fixed(*dp) : "", sigma ? fixed(*sigma) : "");
  }
  out.files["quality_curves.csv"] = csv;
  plots +=
      "plot quality_curves\n  file quality_curves.csv\n  type line\n  facet condition\n  series group\n  x alpha\n"
      "  y delta_fed\n  y2 delta_plddt\n  error2 sigma_delta_plddt\nend\n";
}

void render_probe(const CsvTable& t, ReportOutput& out, std::string& plots) {
  const auto cl = t.column("layer");
  const std::string metrics[] = {"accuracy", "auc", "f1"};
  std::vector<long long> layers;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto layer = t.integer(r, cl);
    if (std::find(layers.begin(), layers.end(), layer) == layers.end()) layers.push_back(layer);
  }
  std::sort(layers.begin(), layers.end());
  std::string csv = "layer,metric,mean,sd,n\n";
  for (long long layer : layers) {
    for (const auto& m : metrics) {
      const auto cm = t.column(m);
      std::vector<double> xs;
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.integer(r, cl) != layer) continue;
        if (auto v = optional_number(t, r, cm)) xs.push_back(*v);
      }
      if (xs.empty()) {
        csv += fmt::format("{},{},,,0\n", layer, m);
        continue;
      }
      const auto s = summarize_rates(xs);
      csv += fmt::format("{},{},{},{},{}\n", layer, m, fixed(s.mean), fixed(s.sd), xs.size());
    }
  }
  out.files["probe_layers.csv"] = csv;
  plots +=
      "plot probe_layers\n  file probe_layers.csv\n  type line\n  series metric\n  x layer\n  y mean\n"
      "  error sd\n  error_label +/- 1 sd across splits\nend\n";
}

}  // namespace

std::string format_signed(double value, int decimals) {
  std::string magnitude = fmt::format("{:.{}f}", std::abs(value), decimals);
  const bool zero = std::all_of(magnitude.begin(), magnitude.end(), [](char c) { return c == '0' || c == '.'; });
  if (value < 0.0 && !zero) return std::string(kMinus) + magnitude;
  return "+" + magnitude;
}

std::string format_delta_sigma(double delta, double sigma) {
  return fmt::format("{} ± {:.2f}", format_signed(delta), sigma);
}

ReportOutput build_report(const std::filesystem::path& results) {
  if (!std::filesystem::is_directory(results)) {
    fail(ErrorCode::no_data, fmt::format("results directory '{}' does not exist", results.string()));
  }
  const auto quality = load_input(results, "quality", {"group", "delta_fed", "delta_plddt", "sigma_delta_plddt"});
  const auto rates = load_input(results, "rates", {"group", "condition", "alpha", "run", "rate"});
  const auto sweep = load_input(results, "sweep",
                                {"group", "condition", "alpha", "valid", "delta_fed", "delta_plddt", "sigma_delta_plddt"});
  const auto probe = load_input(results, "probe", {"layer", "split", "accuracy", "auc", "f1"});
  if (!quality && !rates && !sweep && !probe) {
    fail(ErrorCode::no_data,
         fmt::format("no quality.csv, rates.csv, sweep.csv or probe.csv in '{}'", results.string()));
  }
  const auto empty = [](const std::optional<CsvTable>& t) { return t && t->rows.empty(); };
  for (const auto* t : {&quality, &rates, &sweep, &probe}) {
    if (empty(*t)) fail(ErrorCode::no_data, fmt::format("{} has no rows", (*t)->source.string()));
  }

  ReportOutput out;
  std::string plots = "# logitdiff plots v1\n";
  if (quality) render_quality(*quality, out, plots);
  if (rates) render_rates(*rates, out, plots);
  if (sweep) render_sweep(*sweep, out, plots);
  if (probe) render_probe(*probe, out, plots);
  out.files["plots.txt"] = plots;
  return out;
}

void write_report(const ReportOutput& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto& [name, content] : report.files) write_file_atomic(out_dir / name, content);
}

}  // namespace logitdiff::harness
