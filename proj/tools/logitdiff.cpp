// logitdiff command-line driver.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "logitdiff/backend/registry.hpp"
#include "logitdiff/backend/server.hpp"
#include "logitdiff/core/error.hpp"
#include "logitdiff/core/fasta.hpp"
#include "logitdiff/core/io.hpp"
#include "logitdiff/core/parallel.hpp"
#include "logitdiff/decode/generate.hpp"
#include "logitdiff/harness/config.hpp"
#include "logitdiff/harness/pipeline.hpp"
#include "logitdiff/harness/report.hpp"
#include "logitdiff/probing/sweep.hpp"
#include "logitdiff/quality/frechet.hpp"
#include "logitdiff/steering/vector_io.hpp"

namespace fs = std::filesystem;
using namespace logitdiff;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;
constexpr int kExitData = 4;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::config:
    case ErrorCode::invalid_parameter:
      return kExitConfig;
    case ErrorCode::connection:
    case ErrorCode::backend:
    case ErrorCode::unsupported_capability:
      return kExitBackend;
    default:
      return kExitData;
  }
}

harness::ExperimentConfig load_experiment(const std::string& path, const std::string& out) {
  auto config = harness::load_config(path);
  harness::apply_env_overrides(config);
  if (!out.empty()) config.output = out;
  config.validate();
  return config;
}

void print_summary(const harness::PipelineResult& r) {
  const std::string alpha = r.alpha ? fmt::format(" alpha={}", format_exact(*r.alpha)) : "";
  fmt::print("{}{}: rate {:.2f}% (sem {:.4f}, sd {:.4f}, runs {})\n", r.condition, alpha, r.summary.mean,
             r.summary.sem, r.summary.sd, r.summary.runs);
}

struct GenerateArgs {
  std::string config, backend_b, backend_t, reference, out, scores;
  double alpha = 0.0, tau = 1.0;
  std::size_t n = 300, k = 200, max_length = 512, runs = 1, workers = 0;
  std::uint64_t seed = 0;
};

int run_generate(const GenerateArgs& a) {
  if (!a.config.empty()) {
    const auto config = load_experiment(a.config, a.out);
    const auto backends = harness::open_backends(config, false);
    const auto result = harness::run_pipeline(config, backends, config.intervention);
    harness::write_pipeline_artifacts(config.output, config, result, *backends.generator->descriptor().vocabulary);
    print_summary(result);
    return kExitOk;
  }
  if (a.backend_b.empty()) fail(ErrorCode::config, "generate needs --config or --backend");
  if (a.k > a.n) fail(ErrorCode::config, "--k must not exceed --n");
  auto baseline = open_backend(a.backend_b);
  std::shared_ptr<BackendProvider> concept_provider;
  if (!a.backend_t.empty()) concept_provider = open_backend(a.backend_t);
  std::shared_ptr<BackendProvider> reference = a.reference.empty() ? baseline : open_backend(a.reference);
  const Vocabulary& vocab = *baseline->descriptor().vocabulary;

  const fs::path fasta_path = a.out.empty() ? fs::path("generated.fasta") : fs::path(a.out);
  const fs::path scores_path = a.scores.empty() ? fs::path(fasta_path).replace_extension(".csv") : fs::path(a.scores);
  if (fasta_path.has_parent_path()) fs::create_directories(fasta_path.parent_path());
  if (scores_path.has_parent_path()) fs::create_directories(scores_path.parent_path());
  std::string scores = "# logitdiff candidates v1\nid,perplexity,retained,run_index\n";
  std::vector<Sequence> all_retained;
  for (std::size_t r = 0; r < a.runs; ++r) {
    decode::GenerationConfig g;
    g.baseline = baseline.get();
    g.concept_model = concept_provider.get();
    g.alpha = a.alpha;
    g.reference = reference.get();
    g.sampling = {a.tau, a.max_length};
    g.seed = a.seed;
    g.run = r;
    g.count = a.n;
    g.workers = a.workers ? a.workers : default_workers();
    auto batch = decode::generate(g);
    const auto retained = decode::filter_lowest_perplexity(batch.records, a.k);
    std::vector<bool> kept(a.n, false);
    for (const auto& rec : retained) {
      kept[rec.index] = true;
      all_retained.push_back(rec.sequence);
    }
    for (const auto& rec : batch.records) {
      scores += fmt::format("{},{},{},{}\n", rec.sequence.provenance().id, format_exact(rec.perplexity),
                            kept[rec.index] ? "true" : "false", rec.run);
    }
    fmt::print("run {}: {} generated, {} failed, {} retained\n", r, batch.records.size(), batch.failures,
               retained.size());
  }
  std::ostringstream fasta;
  write_fasta(fasta, all_retained, vocab);
  write_file_atomic(fasta_path, fasta.str());
  write_file_atomic(scores_path, scores);
  return kExitOk;
}

int run_sweep(const std::string& config_path, const std::string& out) {
  const auto config = load_experiment(config_path, out);
  const auto backends = harness::open_backends(config, !config.backends.concept_model.empty());
  const auto sweep = harness::alpha_sweep(config, backends);
  harness::write_sweep_artifacts(config.output, config, sweep, *backends.generator->descriptor().vocabulary);
  print_summary(sweep.baseline);
  if (sweep.concept_reference) print_summary(*sweep.concept_reference);
  for (const auto& row : sweep.rows) {
    if (row.valid) {
      print_summary(row.pipeline);
    } else {
      fmt::print("alpha={}: invalid ({})\n", format_exact(row.alpha), row.error);
    }
  }
  if (sweep.optimal_alpha) {
    fmt::print("optimal alpha: {}\n", format_exact(*sweep.optimal_alpha));
  } else {
    fmt::print("optimal alpha: none (every row failed)\n");
  }
  return kExitOk;
}

int run_compare(const std::string& path_a, const std::string& path_b, const std::string& out) {
  const auto config_a = load_experiment(path_a, "");
  const auto config_b = load_experiment(path_b, "");
  const auto backends_a = harness::open_backends(config_a, false);
  const auto backends_b = harness::open_backends(config_b, false);
  const auto c = harness::elicitation_compare(config_a, backends_a, config_b, backends_b);
  fmt::print("{}: {:.1f}% +/- {:.1f} (1 sd)\n", c.name_a, c.a.summary.mean, c.a.summary.sd);
  fmt::print("{}: {:.1f}% +/- {:.1f} (1 sd)\n", c.name_b, c.b.summary.mean, c.b.summary.sd);
  fmt::print("{} vs {}: {}\n", c.name_b, c.name_a, harness::format_pp_change(c.difference_pp));
  if (!out.empty()) {
    fs::create_directories(out);
    write_file_atomic(fs::path(out) / "compare.csv", harness::compare_csv(c));
  }
  return kExitOk;
}

struct ProbeArgs {
  std::string backend, data, out = "probe", vectors_out, aggregation = "mean";
  std::vector<std::size_t> layers;
  std::size_t splits = 5, workers = 0, max_iterations = 500;
  std::uint64_t seed = 0;
  double fraction = 0.8, l2 = 1e-2;
};

int run_probe(const ProbeArgs& a) {
  auto provider = open_backend(a.backend);
  const auto& d = provider->descriptor();
  if (!d.has(Capability::activations)) {
    fail(ErrorCode::config, fmt::format("backend '{}' lacks the activations capability", d.id));
  }
  const CsvTable csv = read_csv(a.data);
  const auto cs = csv.column("sequence"), cl = csv.column("label"), cg = csv.column("group");
  std::vector<steering::LabeledSequence> dataset;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    dataset.push_back({sequence_from_text(csv.rows[r][cs], *d.vocabulary), csv.boolean(r, cl), csv.rows[r][cg]});
  }
  if (dataset.empty()) fail(ErrorCode::no_data, fmt::format("{} has no rows", a.data));
  std::vector<std::size_t> layers = a.layers;
  if (layers.empty()) {
    for (std::size_t l = 0; l < d.layer_count; ++l) layers.push_back(l);
  }
  probing::SweepOptions options;
  options.splits = a.splits;
  options.seed = a.seed;
  options.train_fraction = a.fraction;
  options.training.l2 = a.l2;
  options.training.max_iterations = a.max_iterations;
  options.aggregation = steering::aggregation_from_string(a.aggregation);
  options.workers = a.workers;
  auto session = provider->open_session();
  const auto result = probing::layer_sweep(*session, dataset, layers, options);

  fs::create_directories(a.out);
  write_file_atomic(fs::path(a.out) / "probe.csv", probing::sweep_csv(result));
  write_file_atomic(fs::path(a.out) / "probe_summary.csv", probing::sweep_summary_csv(result));
  for (const auto& s : result.layers) {
    if (!s.valid) {
      fmt::print("layer {}: invalid (every split failed)\n", s.layer);
      continue;
    }
    fmt::print("layer {}: accuracy {:.3f} +/- {:.3f}, auc {}, f1 {:.3f} +/- {:.3f}\n", s.layer, s.accuracy_mean,
               s.accuracy_sd, s.auc_mean ? fmt::format("{:.3f} +/- {:.3f}", *s.auc_mean, *s.auc_sd) : "undefined",
               s.f1_mean, s.f1_sd);
  }
  if (!a.vectors_out.empty()) {
    const auto vectors = steering::extract_vectors(*session, dataset, layers, options.aggregation);
    steering::save_vectors(a.vectors_out, vectors);
    fmt::print("wrote {} steering vectors to {}\n", vectors.size(), a.vectors_out);
  }
  return kExitOk;
}

std::vector<double> read_plddt(const std::string& path) {
  const CsvTable csv = read_csv(path);
  const auto c = csv.column("plddt");
  std::vector<double> out;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) out.push_back(csv.number(r, c));
  return out;
}

struct QualityArgs {
  std::string reference, baseline, intervention, plddt_baseline, plddt_intervention, group = "default", out,
      cache;
  std::optional<double> alpha;
};

int run_quality(const QualityArgs& a) {
  const auto ref = quality::read_embeddings(a.reference);
  const auto base = quality::read_embeddings(a.baseline);
  const auto inter = quality::read_embeddings(a.intervention);
  const quality::EmbeddingStats ref_stats =
      a.cache.empty() ? quality::fit_stats(ref.rows) : quality::StatsCache(a.cache).get_or_fit(ref.rows);
  const auto base_stats = quality::fit_stats(base.rows);
  const auto int_stats = quality::fit_stats(inter.rows);
  const double fed_base = quality::frechet_distance(ref_stats, base_stats);
  const double fed_int = quality::frechet_distance(ref_stats, int_stats);
  fmt::print("reference n={} dim={}\n", ref_stats.n, ref_stats.dim());
  fmt::print("FED baseline {} intervention {} delta {}\n", format_exact(fed_base), format_exact(fed_int),
             harness::format_signed(fed_int - fed_base));
  std::optional<quality::PlddtDelta> plddt;
  if (!a.plddt_baseline.empty() || !a.plddt_intervention.empty()) {
    if (a.plddt_baseline.empty() || a.plddt_intervention.empty()) {
      fail(ErrorCode::config, "pass both --plddt-baseline and --plddt-intervention");
    }
    plddt = quality::delta_plddt(read_plddt(a.plddt_baseline), read_plddt(a.plddt_intervention));
    fmt::print("pLDDT baseline {:.2f} +/- {:.2f}, intervention {:.2f} +/- {:.2f}, delta {}\n", plddt->mean_baseline,
               plddt->sd_baseline, plddt->mean_intervention, plddt->sd_intervention,
               harness::format_delta_sigma(plddt->delta, plddt->sigma));
  }
  if (!a.out.empty()) {
    if (!plddt) fail(ErrorCode::config, "--out needs pLDDT inputs to write a complete quality.csv");
    fs::create_directories(a.out);
    std::string csv = "# logitdiff quality v1\ngroup,alpha,delta_fed,delta_plddt,sigma_delta_plddt\n";
    csv += fmt::format("{},{},{},{},{}\n", a.group, a.alpha ? format_exact(*a.alpha) : "", format_exact(fed_int - fed_base),
                       format_exact(plddt->delta), format_exact(plddt->sigma));
    write_file_atomic(fs::path(a.out) / "quality.csv", csv);
  }
  return kExitOk;
}

int run_report(const std::string& results, const std::string& out) {
  const auto report = harness::build_report(results);
  const fs::path dir = out.empty() ? fs::path(results) / "report" : fs::path(out);
  harness::write_report(report, dir);
  for (const auto& [name, content] : report.files) fmt::print("wrote {}\n", (dir / name).string());
  if (auto it = report.files.find("quality_table.txt"); it != report.files.end()) fmt::print("{}", it->second);
  if (auto it = report.files.find("reductions.txt"); it != report.files.end()) fmt::print("{}", it->second);
  return kExitOk;
}

int run_serve(const std::string& model, const std::string& listen) {
  auto provider = open_toy_model(model);
  protocol::Server server(provider);
  if (listen != "stdio") std::fprintf(stderr, "serving %s on %s\n", provider->descriptor().id.c_str(), listen.c_str());
  server.listen(listen);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Logit-diff amplification, activation steering, probing and quality metrics"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Sample sequences (optionally with LDA) and keep the K lowest-perplexity");
  generate->add_option("--config", gen.config, "Experiment config; runs the full scoring pipeline");
  generate->add_option("--backend,--backend-b", gen.backend_b, "Generator B address");
  generate->add_option("--backend-t", gen.backend_t, "Concept model T address (enables LDA)");
  generate->add_option("--reference", gen.reference, "Perplexity model address (default: B)");
  generate->add_option("--alpha", gen.alpha, "LDA strength");
  generate->add_option("--tau", gen.tau, "Sampling temperature");
  generate->add_option("--n", gen.n, "Sequences per run");
  generate->add_option("--k", gen.k, "Sequences retained per run");
  generate->add_option("--runs", gen.runs, "Independent runs");
  generate->add_option("--seed", gen.seed, "Base seed");
  generate->add_option("--max-length", gen.max_length, "Generated token cap");
  generate->add_option("--workers", gen.workers, "Worker threads (0 = hardware concurrency)");
  generate->add_option("--out", gen.out, "Retained sequences FASTA (with --config: output directory)");
  generate->add_option("--scores", gen.scores, "Per-sequence CSV (default: --out with .csv)");

  std::string sweep_config, sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Alpha sweep with baseline and concept reference rows");
  sweep->add_option("--config", sweep_config, "Experiment config")->required();
  sweep->add_option("--out", sweep_out, "Output directory (overrides the config)");

  std::string compare_a, compare_b, compare_out;
  auto* compare = app.add_subcommand("compare", "Compare the toxicity rate of two pipeline configs");
  compare->add_option("--config-a", compare_a, "Reference config")->required();
  compare->add_option("--config-b", compare_b, "Compared config")->required();
  compare->add_option("--out", compare_out, "Directory for compare.csv");

  ProbeArgs pr;
  auto* probe = app.add_subcommand("probe", "Layer-wise linear probes over group-exclusive splits");
  probe->add_option("--backend", pr.backend, "Backend with activations")->required();
  probe->add_option("--data", pr.data, "CSV with columns sequence,label,group")->required();
  probe->add_option("--layers", pr.layers, "Layers to probe (default: all)");
  probe->add_option("--splits", pr.splits, "Random splits");
  probe->add_option("--seed", pr.seed, "Split seed");
  probe->add_option("--fraction", pr.fraction, "Train fraction");
  probe->add_option("--l2", pr.l2, "L2 strength");
  probe->add_option("--max-iterations", pr.max_iterations, "Newton iteration cap");
  probe->add_option("--aggregation", pr.aggregation, "mean, last or max over positions");
  probe->add_option("--workers", pr.workers, "Worker threads");
  probe->add_option("--vectors-out", pr.vectors_out, "Also write difference-in-means steering vectors");
  probe->add_option("--out", pr.out, "Output directory");

  QualityArgs q;
  auto* qual = app.add_subcommand("quality", "Frechet embedding distance and pLDDT deltas");
  qual->add_option("--reference", q.reference, "Reference embeddings CSV (id,e0,...)")->required();
  qual->add_option("--baseline", q.baseline, "Baseline generation embeddings CSV")->required();
  qual->add_option("--intervention", q.intervention, "Intervention generation embeddings CSV")->required();
  qual->add_option("--plddt-baseline", q.plddt_baseline, "Baseline pLDDT CSV (id,plddt)");
  qual->add_option("--plddt-intervention", q.plddt_intervention, "Intervention pLDDT CSV (id,plddt)");
  qual->add_option("--group", q.group, "Group label for quality.csv");
  qual->add_option("--alpha", q.alpha, "Intervention strength recorded in quality.csv");
  qual->add_option("--cache", q.cache, "Directory for cached reference statistics");
  qual->add_option("--out", q.out, "Directory for quality.csv");

  std::string report_results, report_out;
  auto* rep = app.add_subcommand("report", "Render tables and plot data from result CSVs");
  rep->add_option("--results", report_results, "Directory with quality/rates/sweep/probe CSVs")->required();
  rep->add_option("--out", report_out, "Output directory (default: <results>/report)");

  std::string serve_model = "markov-base", serve_listen = "stdio";
  auto* serve = app.add_subcommand("serve-toy", "Serve a built-in toy backend over the wire protocol");
  serve->add_option("--model", serve_model, "Preset or JSON model file");
  serve->add_option("--listen", serve_listen, "stdio, unix:<path> or tcp:<host>:<port>");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*sweep) return run_sweep(sweep_config, sweep_out);
    if (*compare) return run_compare(compare_a, compare_b, compare_out);
    if (*probe) return run_probe(pr);
    if (*qual) return run_quality(q);
    if (*rep) return run_report(report_results, report_out);
    if (*serve) return run_serve(serve_model, serve_listen);
  } catch (const Error& e) {
    std::cerr << "logitdiff: " << to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "logitdiff: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
