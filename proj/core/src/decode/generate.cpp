#include "logitdiff/decode/generate.hpp"

#include <algorithm>
#include <memory>
#include <mutex>

#include "logitdiff/core/error.hpp"
#include "logitdiff/core/parallel.hpp"
#include "logitdiff/core/sampling.hpp"
#include "logitdiff/decode/lda.hpp"

namespace logitdiff::decode {
namespace {

const Vocabulary& vocabulary_of(const Backend& b) {
  if (!b.descriptor().vocabulary) {
    fail(ErrorCode::unsupported_capability, b.descriptor().id + " has no vocabulary");
  }
  return *b.descriptor().vocabulary;
}

struct WorkerSessions {
  std::unique_ptr<Backend> baseline;
  std::unique_ptr<Backend> concept_session;
  std::unique_ptr<Backend> reference;
};

}  // namespace

Sequence sample_sequence(Backend& baseline, Backend* concept_session, double alpha, const SamplingConfig& sampling,
                         RngState& rng) {
  const Vocabulary& vocab = vocabulary_of(baseline);
  if (concept_session != nullptr && !(vocabulary_of(*concept_session) == vocab)) {
    fail(ErrorCode::invalid_parameter, "baseline and concept models must share one vocabulary");
  }
  if (!(sampling.tau > 0.0)) fail(ErrorCode::invalid_parameter, "temperature must be positive");
  Sequence seq({vocab.bos()});
  for (std::size_t step = 0; step < sampling.max_length; ++step) {
    LogitVector logits = baseline.next_logits(seq);
    if (concept_session != nullptr) logits = lda_combine(logits, concept_session->next_logits(seq), alpha);
    const auto probs = softmax(logits, sampling.tau);
    const TokenId next = sample_token(probs, rng);
    seq.push_back(next);
    if (vocab.eos() && next == *vocab.eos()) break;
  }
  return seq;
}

std::vector<double> score_log_probs(Backend& reference, const Sequence& seq) {
  std::vector<double> out;
  out.reserve(seq.generated_length());
  std::vector<TokenId> prefix{seq.ids().front()};
  for (std::size_t t = 1; t < seq.size(); ++t) {
    const auto lp = log_softmax(reference.next_logits(Sequence(prefix)), 1.0);
    out.push_back(lp.at(seq.ids()[t]));
    prefix.push_back(seq.ids()[t]);
  }
  return out;
}

GenerationBatch generate(const GenerationConfig& config) {
  if (config.baseline == nullptr) fail(ErrorCode::config, "generation needs a baseline model");
  if (config.count == 0) fail(ErrorCode::invalid_parameter, "generation count must be at least 1");
  BackendProvider* reference = config.reference != nullptr ? config.reference : config.baseline;

  std::vector<std::optional<GenerationRecord>> slots(config.count);
  std::vector<std::string> errors(config.count);
  std::vector<std::optional<ErrorCode>> codes(config.count);
  const std::size_t workers = std::clamp<std::size_t>(config.workers, 1, config.count);
  std::vector<WorkerSessions> sessions(workers);
  std::mutex open_mutex;

  parallel_for(config.count, workers, [&](std::size_t w, std::size_t i) {
    try {
      WorkerSessions& s = sessions[w];
      if (!s.baseline) {
        std::lock_guard lock(open_mutex);
        s.baseline = config.baseline->open_session();
        if (config.steering) s.baseline->set_steering(*config.steering);
        if (config.concept_model != nullptr) s.concept_session = config.concept_model->open_session();
        s.reference = reference == config.baseline && !config.steering ? nullptr : reference->open_session();
      }
      RngState rng(config.seed, stream_for(config.run, i));
      Sequence seq = sample_sequence(*s.baseline, s.concept_session.get(), config.alpha, config.sampling, rng);
      Provenance& p = seq.provenance();
      p.id = "r" + std::to_string(config.run) + "-s" + std::to_string(i);
      p.backend = s.baseline->descriptor().id;
      p.seed = config.seed;
      p.run = config.run;
      p.index = i;
      GenerationRecord rec;
      rec.reference_log_probs = score_log_probs(s.reference ? *s.reference : *s.baseline, seq);
      rec.perplexity = perplexity_from_log_probs(rec.reference_log_probs);
      rec.sequence = std::move(seq);
      rec.run = config.run;
      rec.index = i;
      slots[i] = std::move(rec);
    } catch (const Error& e) {
      errors[i] = e.what();
      codes[i] = e.code();
    }
  });

  GenerationBatch batch;
  std::optional<ErrorCode> first_code;
  for (std::size_t i = 0; i < config.count; ++i) {
    if (slots[i]) {
      batch.records.push_back(std::move(*slots[i]));
    } else {
      ++batch.failures;
      batch.failure_messages.push_back("sequence " + std::to_string(i) + ": " + errors[i]);
      if (!first_code) first_code = codes[i];
    }
  }
  if (static_cast<double>(batch.failures) > config.max_failure_fraction * static_cast<double>(config.count)) {
    fail(first_code.value_or(ErrorCode::backend),
         std::to_string(batch.failures) + " of " + std::to_string(config.count) +
             " generations failed; first: " + batch.failure_messages.front());
  }
  return batch;
}

std::vector<GenerationRecord> filter_lowest_perplexity(std::vector<GenerationRecord> records, std::size_t k) {
  if (k > records.size()) {
    fail(ErrorCode::invalid_parameter, "cannot retain " + std::to_string(k) + " of " +
                                           std::to_string(records.size()) + " records");
  }
  std::sort(records.begin(), records.end(), [](const GenerationRecord& a, const GenerationRecord& b) {
    if (a.perplexity != b.perplexity) return a.perplexity < b.perplexity;
    if (a.sequence.ids() != b.sequence.ids()) return a.sequence.ids() < b.sequence.ids();
    if (a.run != b.run) return a.run < b.run;
    return a.index < b.index;
  });
  records.resize(k);
  return records;
}

}  // namespace logitdiff::decode
