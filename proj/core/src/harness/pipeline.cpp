#include "logitdiff/harness/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <mutex>
#include <sstream>

#include "logitdiff/backend/registry.hpp"
#include "logitdiff/core/error.hpp"
#include "logitdiff/core/fasta.hpp"
#include "logitdiff/core/io.hpp"
#include "logitdiff/core/parallel.hpp"

namespace logitdiff::harness {
namespace {

std::shared_ptr<BackendProvider> open_role(const std::string& address, const char* role,
                                           std::initializer_list<Capability> needed) {
  std::shared_ptr<BackendProvider> p;
  try {
    p = open_backend(address);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config) fail(ErrorCode::config, fmt::format("{} backend: {}", role, e.what()));
    throw;
  }
  const BackendDescriptor& d = p->descriptor();
  for (Capability c : needed) {
    if (!d.has(c)) {
      fail(ErrorCode::config,
           fmt::format("{} backend '{}' ({}) lacks the {} capability", role, d.id, address, to_string(c)));
    }
  }
  return p;
}

std::size_t worker_count(const ExperimentConfig& c) { return c.workers ? c.workers : default_workers(); }

const Vocabulary& generator_vocabulary(const Backends& b) { return *b.generator->descriptor().vocabulary; }

std::string alpha_text(const std::optional<double>& a) { return a ? format_exact(*a) : std::string{}; }

std::string condition_dir(const PipelineResult& r) {
  return r.alpha ? fmt::format("{}-a{}", r.condition, format_exact(*r.alpha)) : r.condition;
}

// Labels, embeddings and fold scores for the retained sequences of one run,
// with one session per worker on each scoring backend.
void score_retained(const Backends& backends, std::size_t workers, const Vocabulary& vocab, RunResult& run) {
  const std::size_t k = run.retained.size();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, k));
  struct Sessions {
    std::unique_ptr<Backend> classifier, embedder, fold;
  };
  std::vector<Sessions> sessions(workers);
  std::mutex open_mutex;
  run.labels.assign(k, {});
  if (backends.embedder) run.embeddings.assign(k, {});
  if (backends.fold) run.plddt.assign(k, 0.0);
  parallel_for(k, workers, [&](std::size_t w, std::size_t i) {
    Sessions& s = sessions[w];
    if (!s.classifier) {
      std::lock_guard lock(open_mutex);
      s.classifier = backends.classifier->open_session();
      if (backends.embedder) s.embedder = backends.embedder->open_session();
      if (backends.fold) s.fold = backends.fold->open_session();
    }
    const std::string text = sequence_text(run.retained[i].sequence, vocab);
    run.labels[i] = s.classifier->classify(text);
    if (s.embedder) run.embeddings[i] = s.embedder->embed(text);
    if (s.fold) run.plddt[i] = s.fold->fold_confidence(text).mean_plddt;
  });
  const auto positives = std::count_if(run.labels.begin(), run.labels.end(), [](const Classification& c) { return c.label; });
  run.rate = 100.0 * static_cast<double>(positives) / static_cast<double>(k);
}

PipelineResult run_with(const ExperimentConfig& config, const Backends& backends, BackendProvider* generator,
                        const Intervention& intervention, std::string condition, std::optional<double> alpha) {
  PipelineResult result;
  result.condition = std::move(condition);
  result.alpha = alpha;
  const Vocabulary& vocab = generator_vocabulary(backends);
  std::vector<double> rates;
  for (std::size_t r = 0; r < config.runs; ++r) {
    decode::GenerationConfig g;
    g.baseline = generator;
    g.reference = backends.reference.get();
    if (intervention.kind == InterventionKind::lda) {
      g.concept_model = backends.concept_model.get();
      g.alpha = intervention.alpha;
    }
    if (intervention.kind == InterventionKind::steering) g.steering = intervention.steering;
    g.sampling = {config.tau, config.max_length};
    g.seed = config.seed;
    g.run = r;
    g.count = config.n;
    g.workers = worker_count(config);
    decode::GenerationBatch batch = decode::generate(g);
    if (batch.records.size() < config.k) {
      fail(ErrorCode::backend, fmt::format("run {}: only {} of {} generations succeeded, {} needed", r,
                                           batch.records.size(), config.n, config.k));
    }
    RunResult run;
    run.run = r;
    run.generated = batch.records.size();
    run.failures = batch.failures;
    run.retained = decode::filter_lowest_perplexity(std::move(batch.records), config.k);
    score_retained(backends, worker_count(config), vocab, run);
    rates.push_back(run.rate);
    result.runs.push_back(std::move(run));
  }
  result.summary = summarize_rates(rates);
  return result;
}

}  // namespace

RateSummary summarize_rates(std::span<const double> rates) {
  if (rates.empty()) fail(ErrorCode::no_data, "no rates to summarise");
  RateSummary s;
  s.runs = rates.size();
  double sum = 0.0;
  for (double r : rates) sum += r;
  s.mean = sum / static_cast<double>(rates.size());
  if (rates.size() > 1) {
    double ss = 0.0;
    for (double r : rates) ss += (r - s.mean) * (r - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(rates.size() - 1));
  }
  s.sem = s.sd / std::sqrt(static_cast<double>(rates.size()));
  return s;
}

Backends open_backends(const ExperimentConfig& config, bool need_concept) {
  Backends b;
  b.generator = open_role(config.backends.generator, "generator", {Capability::logits});
  if (config.intervention.kind == InterventionKind::steering) {
    const auto& d = b.generator->descriptor();
    if (!d.has(Capability::steering)) {
      fail(ErrorCode::config, fmt::format("generator backend '{}' lacks the steering capability", d.id));
    }
    try {
      config.intervention.steering->validate(d.layer_count, d.hidden_size);
    } catch (const Error& e) {
      fail(ErrorCode::config, fmt::format("steering spec does not fit the generator: {}", e.what()));
    }
  }
  if (need_concept || config.intervention.kind == InterventionKind::lda) {
    if (config.backends.concept_model.empty()) fail(ErrorCode::config, "backends.concept is required");
    b.concept_model = open_role(config.backends.concept_model, "concept", {Capability::logits});
    if (b.concept_model->descriptor().vocabulary != b.generator->descriptor().vocabulary) {
      fail(ErrorCode::config, "generator and concept backends use different vocabularies");
    }
  }
  b.reference = config.backends.reference.empty()
                    ? b.generator
                    : open_role(config.backends.reference, "reference", {Capability::logits});
  if (b.reference->descriptor().vocabulary != b.generator->descriptor().vocabulary) {
    fail(ErrorCode::config, "generator and reference backends use different vocabularies");
  }
  b.classifier = open_role(config.backends.classifier, "classifier", {Capability::classify});
  if (!config.backends.embedder.empty()) {
    b.embedder = open_role(config.backends.embedder, "embedder", {Capability::embeddings});
  }
  if (!config.backends.fold.empty()) {
    b.fold = open_role(config.backends.fold, "fold", {Capability::fold_confidence});
  }
  return b;
}

std::vector<std::vector<double>> PipelineResult::pooled_embeddings() const {
  std::vector<std::vector<double>> out;
  for (const auto& r : runs) out.insert(out.end(), r.embeddings.begin(), r.embeddings.end());
  return out;
}

std::vector<double> PipelineResult::pooled_plddt() const {
  std::vector<double> out;
  for (const auto& r : runs) out.insert(out.end(), r.plddt.begin(), r.plddt.end());
  return out;
}

PipelineResult run_pipeline(const ExperimentConfig& config, const Backends& backends,
                            const Intervention& intervention) {
  config.validate();
  std::optional<double> alpha;
  if (intervention.kind != InterventionKind::none) alpha = intervention.alpha;
  return run_with(config, backends, backends.generator.get(), intervention, intervention.condition(), alpha);
}

PipelineResult run_concept_reference(const ExperimentConfig& config, const Backends& backends) {
  if (!backends.concept_model) fail(ErrorCode::config, "the concept reference needs a concept backend");
  return run_with(config, backends, backends.concept_model.get(), Intervention{}, "concept", std::nullopt);
}

std::optional<double> select_optimal_alpha(std::span<const AlphaRow> rows) {
  const AlphaRow* best = nullptr;
  for (const auto& row : rows) {
    if (!row.valid) continue;
    if (best == nullptr || row.pipeline.summary.mean < best->pipeline.summary.mean ||
        (row.pipeline.summary.mean == best->pipeline.summary.mean && row.alpha < best->alpha)) {
      best = &row;
    }
  }
  return best ? std::optional<double>(best->alpha) : std::nullopt;
}

AlphaSweepResult alpha_sweep(const ExperimentConfig& config, const Backends& backends) {
  config.validate();
  if (config.intervention.kind == InterventionKind::none) {
    fail(ErrorCode::config, "an alpha sweep needs an lda or steering intervention");
  }
  AlphaSweepResult sweep;
  sweep.baseline = run_pipeline(config, backends, Intervention{});
  if (backends.concept_model) sweep.concept_reference = run_concept_reference(config, backends);

  const bool with_fed = backends.embedder && config.reference_embeddings;
  std::optional<quality::EmbeddingStats> base_stats;
  if (with_fed) {
    const auto ref = quality::read_embeddings(*config.reference_embeddings);
    quality::StatsCache cache(config.output / "cache");
    sweep.reference_stats = cache.get_or_fit(ref.rows);
    base_stats = quality::fit_stats(sweep.baseline.pooled_embeddings());
  }

  for (double a : config.alphas) {
    AlphaRow row;
    row.alpha = a;
    try {
      row.pipeline = run_pipeline(config, backends, config.intervention.with_alpha(a));
      if (with_fed) {
        const auto stats = quality::fit_stats(row.pipeline.pooled_embeddings());
        row.delta_fed = quality::delta_fed(*sweep.reference_stats, *base_stats, stats);
      }
      if (backends.fold) row.plddt = quality::delta_plddt(sweep.baseline.pooled_plddt(), row.pipeline.pooled_plddt());
      row.valid = true;
    } catch (const Error& e) {
      row.error = fmt::format("{}: {}", to_string(e.code()), e.what());
      row.pipeline.condition = config.intervention.condition();
      row.pipeline.alpha = a;
    }
    sweep.rows.push_back(std::move(row));
  }
  sweep.optimal_alpha = select_optimal_alpha(sweep.rows);
  return sweep;
}

Comparison elicitation_compare(const ExperimentConfig& config_a, const Backends& backends_a,
                               const ExperimentConfig& config_b, const Backends& backends_b) {
  const auto mismatch = [](const char* what) {
    fail(ErrorCode::config, fmt::format("compared configs differ in {}", what));
  };
  if (config_a.backends.classifier != config_b.backends.classifier) mismatch("classifier");
  if (config_a.n != config_b.n || config_a.k != config_b.k) mismatch("N or K");
  if (config_a.tau != config_b.tau) mismatch("tau");
  if (config_a.max_length != config_b.max_length) mismatch("max_length");
  if (config_a.runs != config_b.runs) mismatch("runs");
  if (config_a.seed != config_b.seed) mismatch("seed");
  Comparison c;
  c.name_a = config_a.name;
  c.name_b = config_b.name;
  c.a = run_pipeline(config_a, backends_a, config_a.intervention);
  c.b = run_pipeline(config_b, backends_b, config_b.intervention);
  c.difference_pp = c.b.summary.mean - c.a.summary.mean;
  return c;
}

std::string format_pp_change(double difference_pp) {
  const std::string magnitude = fmt::format("{:.1f}", std::abs(difference_pp));
  if (magnitude == "0.0") return "0.0 pp change";
  return fmt::format("{} pp {}", magnitude, difference_pp > 0 ? "increase" : "decrease");
}

void write_pipeline_artifacts(const std::filesystem::path& dir, const ExperimentConfig& config,
                              const PipelineResult& result, const Vocabulary& vocab) {
  const auto sub = dir / condition_dir(result);
  std::filesystem::create_directories(sub);
  std::string scores = "# logitdiff generations v1\nrun,index,id,perplexity,label,score\n";
  for (const auto& run : result.runs) {
    std::vector<Sequence> seqs;
    for (std::size_t i = 0; i < run.retained.size(); ++i) {
      const auto& rec = run.retained[i];
      seqs.push_back(rec.sequence);
      scores += fmt::format("{},{},{},{},{},{}\n", rec.run, rec.index, rec.sequence.provenance().id,
                            format_exact(rec.perplexity), run.labels[i].label ? 1 : 0,
                            format_exact(run.labels[i].score));
    }
    std::ostringstream fasta;
    write_fasta(fasta, seqs, vocab);
    write_file_atomic(sub / fmt::format("run{}.fasta", run.run), fasta.str());
    if (!run.embeddings.empty()) {
      quality::EmbeddingTable table;
      for (std::size_t i = 0; i < run.retained.size(); ++i) {
        table.ids.push_back(run.retained[i].sequence.provenance().id);
        table.rows.push_back(run.embeddings[i]);
      }
      write_file_atomic(sub / fmt::format("run{}_embeddings.csv", run.run), quality::embeddings_csv(table));
    }
    if (!run.plddt.empty()) {
      std::string plddt = "id,plddt\n";
      for (std::size_t i = 0; i < run.retained.size(); ++i) {
        plddt += fmt::format("{},{}\n", run.retained[i].sequence.provenance().id, format_exact(run.plddt[i]));
      }
      write_file_atomic(sub / fmt::format("run{}_plddt.csv", run.run), plddt);
    }
  }
  write_file_atomic(sub / "scores.csv", scores);
  const PipelineResult* one[] = {&result};
  write_file_atomic(sub / "rates.csv", rates_csv(config.group, one));
}

std::string rates_csv(const std::string& group, std::span<const PipelineResult* const> results) {
  std::string out = "# logitdiff rates v1\ngroup,condition,alpha,run,rate\n";
  for (const PipelineResult* r : results) {
    for (const auto& run : r->runs) {
      out += fmt::format("{},{},{},{},{}\n", group, r->condition, alpha_text(r->alpha), run.run, format_exact(run.rate));
    }
  }
  return out;
}

std::string sweep_table_csv(const std::string& group, const AlphaSweepResult& sweep) {
  std::string out =
      "# logitdiff sweep v1\ngroup,condition,alpha,valid,rate_mean,rate_sem,delta_fed,delta_plddt,sigma_delta_plddt\n";
  for (const auto& row : sweep.rows) {
    if (!row.valid) {
      out += fmt::format("{},{},{},0,,,,,\n", group, row.pipeline.condition, format_exact(row.alpha));
      continue;
    }
    out += fmt::format("{},{},{},1,{},{},{},{},{}\n", group, row.pipeline.condition, format_exact(row.alpha),
                       format_exact(row.pipeline.summary.mean), format_exact(row.pipeline.summary.sem),
                       alpha_text(row.delta_fed), row.plddt ? format_exact(row.plddt->delta) : "",
                       row.plddt ? format_exact(row.plddt->sigma) : "");
  }
  return out;
}

std::string quality_table_csv(const std::string& group, const AlphaSweepResult& sweep) {
  std::string out = "# logitdiff quality v1\ngroup,alpha,delta_fed,delta_plddt,sigma_delta_plddt\n";
  if (!sweep.optimal_alpha) return out;
  for (const auto& row : sweep.rows) {
    if (!row.valid || row.alpha != *sweep.optimal_alpha || !row.delta_fed || !row.plddt) continue;
    out += fmt::format("{},{},{},{},{}\n", group, format_exact(row.alpha), format_exact(*row.delta_fed),
                       format_exact(row.plddt->delta), format_exact(row.plddt->sigma));
  }
  return out;
}

std::string compare_csv(const Comparison& c) {
  std::string out = "# logitdiff compare v1\nname,condition,rate_mean,rate_sd,runs\n";
  for (const auto* side : {&c.a, &c.b}) {
    const std::string& name = side == &c.a ? c.name_a : c.name_b;
    out += fmt::format("{},{},{},{},{}\n", name, side->condition, format_exact(side->summary.mean),
                       format_exact(side->summary.sd), side->summary.runs);
  }
  return out;
}

void write_sweep_artifacts(const std::filesystem::path& dir, const ExperimentConfig& config,
                           const AlphaSweepResult& sweep, const Vocabulary& vocab) {
  std::filesystem::create_directories(dir);
  std::vector<const PipelineResult*> all{&sweep.baseline};
  write_pipeline_artifacts(dir, config, sweep.baseline, vocab);
  if (sweep.concept_reference) {
    all.push_back(&*sweep.concept_reference);
    write_pipeline_artifacts(dir, config, *sweep.concept_reference, vocab);
  }
  for (const auto& row : sweep.rows) {
    if (!row.valid) continue;
    all.push_back(&row.pipeline);
    write_pipeline_artifacts(dir, config, row.pipeline, vocab);
  }
  write_file_atomic(dir / "rates.csv", rates_csv(config.group, all));
  write_file_atomic(dir / "sweep.csv", sweep_table_csv(config.group, sweep));
  const bool has_quality = std::any_of(sweep.rows.begin(), sweep.rows.end(),
                                       [](const AlphaRow& r) { return r.delta_fed && r.plddt; });
  if (has_quality) write_file_atomic(dir / "quality.csv", quality_table_csv(config.group, sweep));
  std::string summary = "key,value\n";
  summary += fmt::format("optimal_alpha,{}\n", alpha_text(sweep.optimal_alpha));
  if (sweep.reference_stats) {
    summary += fmt::format("reference_n,{}\nembedding_dim,{}\n", sweep.reference_stats->n, sweep.reference_stats->dim());
  }
  if (config.embedding_layer) summary += fmt::format("embedding_layer,{}\n", *config.embedding_layer);
  write_file_atomic(dir / "summary.csv", summary);
  write_file_atomic(dir / "config.json", config_to_json(config));
}

}  // namespace logitdiff::harness
