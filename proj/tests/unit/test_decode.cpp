#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "enumeration.hpp"
#include "flaky.hpp"
#include "logitdiff/backend/registry.hpp"
#include "logitdiff/backend/toy_backends.hpp"
#include "logitdiff/core/sampling.hpp"
#include "logitdiff/decode/generate.hpp"
#include "logitdiff/decode/lda.hpp"
#include "test_helpers.hpp"

using namespace logitdiff;
using namespace logitdiff::decode;
using logitdiff::testing::expect_code;

namespace {

std::vector<double> random_logits(std::mt19937_64& gen, std::size_t n) {
  std::normal_distribution<double> d(0, 5);
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

// Two-token alphabet {a, b} with a non-marker begin token "a" and no end
// token: B uniform, T favouring b by ln 9.
std::shared_ptr<ToyMarkovModel> ab_model(bool concept_model) {
  Vocabulary v({"a", "b"}, SpecialTokens{0, std::nullopt, std::nullopt});
  const double t = concept_model ? std::log(9.0) : 0.0;
  return std::make_shared<ToyMarkovModel>(concept_model ? "ab-t" : "ab-b", v,
                                          std::vector<std::vector<double>>{{0.0, t}, {0.0, t}});
}

}  // namespace

TEST(LdaCombine, Examples) {
  EXPECT_EQ(lda_combine(LogitVector({1, 0}), LogitVector({0, 1}), 1.0), LogitVector({2, -1}));
  std::mt19937_64 gen(1);
  for (int i = 0; i < 200; ++i) {
    const LogitVector b(random_logits(gen, 7)), t(random_logits(gen, 7));
    EXPECT_EQ(lda_combine(b, t, 0.0), b);
    EXPECT_EQ(lda_combine(b, b, std::uniform_real_distribution<double>(-3, 3)(gen)), b);
  }
}

TEST(LdaCombine, Errors) {
  expect_code([] { lda_combine(LogitVector({1, 0}), LogitVector({0}), 1.0); }, ErrorCode::invalid_input);
  expect_code([] { lda_combine(LogitVector({1, NAN}), LogitVector({0, 0}), 1.0); }, ErrorCode::invalid_input);
}

TEST(LdaCombine, ArgmaxInvariantUnderCommonShift) {
  std::mt19937_64 gen(2);
  for (int i = 0; i < 500; ++i) {
    auto b = random_logits(gen, 9), t = random_logits(gen, 9);
    const double alpha = std::uniform_real_distribution<double>(0, 2)(gen);
    const double c = std::uniform_real_distribution<double>(-50, 50)(gen);
    const auto r = lda_combine(LogitVector(b), LogitVector(t), alpha).vector();
    for (auto& x : b) x += c;
    for (auto& x : t) x += c;
    const auto s = lda_combine(LogitVector(b), LogitVector(t), alpha).vector();
    EXPECT_EQ(std::max_element(r.begin(), r.end()) - r.begin(), std::max_element(s.begin(), s.end()) - s.begin());
  }
}

TEST(LdaCombine, AffineInAlpha) {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 500; ++i) {
    const LogitVector b(random_logits(gen, 6)), t(random_logits(gen, 6));
    const double a1 = std::uniform_real_distribution<double>(0, 2)(gen);
    const double a2 = std::uniform_real_distribution<double>(0, 2)(gen);
    const auto r1 = lda_combine(b, t, a1), r2 = lda_combine(b, t, a2), mid = lda_combine(b, t, (a1 + a2) / 2);
    for (std::size_t k = 0; k < b.size(); ++k) EXPECT_NEAR(mid[k], (r1[k] + r2[k]) / 2, 1e-12 * (1 + std::abs(mid[k])));
  }
}

TEST(SampleSequence, LdaAtZeroMatchesPlainSamplingBitExactly) {
  auto base = open_backend("toy:markov-base");
  auto toxic = open_backend("toy:markov-toxic");
  auto b1 = base->open_session(), b2 = base->open_session(), t = toxic->open_session();
  for (std::uint64_t s = 0; s < 200; ++s) {
    RngState r1(5, s), r2(5, s);
    const auto plain = sample_sequence(*b1, nullptr, 0.0, {1.0, 30}, r1);
    const auto lda = sample_sequence(*b2, t.get(), 0.0, {1.0, 30}, r2);
    EXPECT_EQ(plain, lda);
    EXPECT_EQ(r1.draws(), r2.draws());
  }
}

TEST(SampleSequence, CapWithoutEndToken) {
  auto b = ab_model(false);
  auto s = b->open_session();
  for (std::uint64_t i = 0; i < 100; ++i) {
    RngState rng(0, i);
    EXPECT_EQ(sample_sequence(*s, nullptr, 0.0, {1.0, 5}, rng).generated_length(), 5u);
  }
}

TEST(SampleSequence, StopsAtEndToken) {
  auto base = open_backend("toy:markov-base");
  auto s = base->open_session();
  std::size_t ended = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    RngState rng(1, i);
    const auto seq = sample_sequence(*s, nullptr, 0.0, {1.0, 200}, rng);
    seq.validate(*base->descriptor().vocabulary);
    ended += seq.back() == 1 ? 1 : 0;
  }
  EXPECT_EQ(ended, 200u);
}

TEST(SampleSequence, VocabularyMismatchIsInvalidParameter) {
  auto base = open_backend("toy:markov-base");
  auto other = ab_model(true);
  auto b = base->open_session(), t = other->open_session();
  RngState rng(0, 0);
  expect_code([&] { sample_sequence(*b, t.get(), 1.0, {}, rng); }, ErrorCode::invalid_parameter);
}

// B uniform over {a, b}, T adds ln 9 to b, alpha = 1: the combined logits are
// [0, -ln 9], so b has probability exactly 1/10 at every step.
TEST(SampleSequence, TwoTokenLdaFrequency) {
  auto b = ab_model(false), t = ab_model(true);
  const auto step = logitdiff::testing::oracle_step(b->table(), &t->table(), 1.0, 1.0, 0);
  ASSERT_NEAR(static_cast<double>(step[1]), 0.1, 1e-15);

  auto bs = b->open_session(), ts = t->open_session();
  RngState rng(2024, 0);
  std::size_t hits = 0;
  const std::size_t steps = 100000;
  const auto seq = sample_sequence(*bs, ts.get(), 1.0, {1.0, steps}, rng);
  for (std::size_t i = 1; i < seq.size(); ++i) hits += seq.ids()[i] == 1 ? 1 : 0;
  const double sigma = std::sqrt(0.1 * 0.9 / steps);
  EXPECT_NEAR(static_cast<double>(hits) / steps, 0.1, 3 * sigma);
}

TEST(Generate, DeterministicAcrossWorkerCounts) {
  auto base = open_backend("toy:markov-base");
  auto toxic = open_backend("toy:markov-toxic");
  GenerationConfig cfg;
  cfg.baseline = base.get();
  cfg.concept_model = toxic.get();
  cfg.alpha = 0.7;
  cfg.sampling = {0.9, 12};
  cfg.seed = 31;
  cfg.run = 2;
  cfg.count = 64;
  cfg.workers = 1;
  const auto one = generate(cfg);
  for (std::size_t w : {2u, 3u, 8u}) {
    cfg.workers = w;
    const auto many = generate(cfg);
    ASSERT_EQ(many.records.size(), one.records.size());
    for (std::size_t i = 0; i < one.records.size(); ++i) {
      EXPECT_EQ(many.records[i].sequence, one.records[i].sequence);
      EXPECT_EQ(many.records[i].perplexity, one.records[i].perplexity);
      EXPECT_EQ(many.records[i].index, i);
    }
  }
}

TEST(Generate, RecordsUseTheDocumentedStream) {
  auto base = open_backend("toy:markov-base");
  GenerationConfig cfg;
  cfg.baseline = base.get();
  cfg.sampling = {1.0, 20};
  cfg.seed = 9;
  cfg.run = 3;
  cfg.count = 5;
  const auto batch = generate(cfg);
  auto s = base->open_session();
  for (std::size_t i = 0; i < 5; ++i) {
    RngState rng(9, (std::uint64_t{3} << 32) | i);
    EXPECT_EQ(batch.records[i].sequence, sample_sequence(*s, nullptr, 0.0, cfg.sampling, rng));
    EXPECT_EQ(batch.records[i].sequence.provenance().id, "r3-s" + std::to_string(i));
  }
}

TEST(Generate, PerplexityIsUnderTheReferenceModel) {
  auto base = open_backend("toy:markov-base");
  auto toxic = open_backend("toy:markov-toxic");
  GenerationConfig cfg;
  cfg.baseline = base.get();
  cfg.reference = toxic.get();
  cfg.sampling = {1.0, 10};
  cfg.count = 20;
  const auto batch = generate(cfg);
  const auto table = toy_markov_concept_table();
  for (const auto& rec : batch.records) {
    ASSERT_EQ(rec.reference_log_probs.size(), rec.sequence.generated_length());
    double sum = 0.0;
    for (std::size_t t = 1; t < rec.sequence.size(); ++t) {
      const auto p = softmax(LogitVector(table[rec.sequence.ids()[t - 1]]), 1.0);
      sum += std::log(p[rec.sequence.ids()[t]]);
    }
    EXPECT_NEAR(rec.perplexity, std::exp(-sum / static_cast<double>(rec.sequence.generated_length())), 1e-12);
    EXPECT_GE(rec.perplexity, 1.0);
  }
}

TEST(Generate, FailuresAreCountedAndExcluded) {
  // Only prefixes starting W, W fail: probability under B is about 0.04, so
  // the 10% budget holds.
  auto flaky = std::make_shared<logitdiff::testing::FlakyProvider>(
      open_backend("toy:markov-base"),
      [](const Sequence& s) { return s.size() == 3 && s.ids()[1] == 5 && s.ids()[2] == 5; });
  GenerationConfig cfg;
  cfg.baseline = flaky.get();
  cfg.sampling = {1.0, 8};
  cfg.count = 400;
  cfg.workers = 2;
  const auto batch = generate(cfg);
  EXPECT_GT(batch.failures, 0u);
  EXPECT_EQ(batch.records.size() + batch.failures, 400u);
  EXPECT_EQ(batch.failure_messages.size(), batch.failures);
  for (const auto& r : batch.records) {
    EXPECT_FALSE(r.sequence.size() >= 3 && r.sequence.ids()[1] == 5 && r.sequence.ids()[2] == 5);
  }
}

TEST(Generate, TooManyFailuresRaiseTheBackendError) {
  auto flaky = std::make_shared<logitdiff::testing::FlakyProvider>(
      open_backend("toy:markov-base"), [](const Sequence& s) { return s.size() == 2; });
  GenerationConfig cfg;
  cfg.baseline = flaky.get();
  cfg.count = 50;
  expect_code([&] { generate(cfg); }, ErrorCode::backend);
}

TEST(Generate, ConfigErrors) {
  GenerationConfig cfg;
  expect_code([&] { generate(cfg); }, ErrorCode::config);
  auto base = open_backend("toy:markov-base");
  cfg.baseline = base.get();
  cfg.count = 0;
  expect_code([&] { generate(cfg); }, ErrorCode::invalid_parameter);
}

namespace {

GenerationRecord record(double ppl, std::vector<TokenId> ids, std::uint64_t run, std::uint64_t index) {
  GenerationRecord r;
  r.perplexity = ppl;
  r.sequence = Sequence(std::move(ids));
  r.run = run;
  r.index = index;
  return r;
}

}  // namespace

TEST(FilterLowestPerplexity, Examples) {
  const std::vector<GenerationRecord> recs{record(5, {0, 2}, 0, 0), record(2, {0, 3}, 0, 1), record(9, {0, 4}, 0, 2)};
  const auto kept = filter_lowest_perplexity(recs, 2);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].perplexity, 2);
  EXPECT_EQ(kept[1].perplexity, 5);
  EXPECT_EQ(filter_lowest_perplexity(recs, 3).size(), 3u);
  expect_code([&] { filter_lowest_perplexity(recs, 4); }, ErrorCode::invalid_parameter);

  const std::vector<GenerationRecord> ties{record(3, {0, 4, 2}, 0, 0), record(3, {0, 2, 5}, 1, 1),
                                           record(3, {0, 2, 5}, 0, 2), record(3, {0, 3}, 0, 3)};
  const auto first = filter_lowest_perplexity(ties, 1);
  EXPECT_EQ(first[0].sequence.ids(), (std::vector<TokenId>{0, 2, 5}));
  EXPECT_EQ(first[0].run, 0u);
}

TEST(FilterLowestPerplexity, IndependentOfInputOrder) {
  std::mt19937_64 gen(4);
  std::vector<GenerationRecord> recs;
  for (std::uint64_t i = 0; i < 60; ++i) {
    recs.push_back(record(1.0 + static_cast<double>(gen() % 5), {0, static_cast<TokenId>(2 + gen() % 4)}, gen() % 3, i));
  }
  const auto ref = filter_lowest_perplexity(recs, 25);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(recs.begin(), recs.end(), gen);
    const auto again = filter_lowest_perplexity(recs, 25);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      EXPECT_EQ(again[i].index, ref[i].index);
      EXPECT_EQ(again[i].run, ref[i].run);
    }
  }
}

// Exact motif probability (all sequences up to length 6) never increases
// along the alpha grid on the built-in Markov pair.
TEST(Enumeration, MotifProbabilityMonotoneInAlpha) {
  const auto b = toy_markov_base_table(), t = toy_markov_concept_table();
  const auto vocab = toy_protein_vocabulary();
  long double previous = 2.0L;
  for (double alpha : {0.0, 0.25, 0.5, 1.0}) {
    const auto seqs = logitdiff::testing::enumerate_lda(b, &t, alpha, 1.0, 0, 1, 6);
    long double total = 0.0L;
    for (const auto& s : seqs) total += s.probability;
    EXPECT_NEAR(static_cast<double>(total), 1.0, 1e-12);
    const long double p = logitdiff::testing::motif_probability(seqs, vocab, "WKW");
    EXPECT_LE(p, previous) << "alpha " << alpha;
    previous = p;
  }
}

// Monte-Carlo sequence frequencies match exhaustive enumeration.
TEST(Enumeration, SamplerMatchesExactDistribution) {
  auto base = open_backend("toy:markov-base");
  auto toxic = open_backend("toy:markov-toxic");
  const double alpha = 0.5, tau = 0.8;
  const std::size_t max_length = 3;
  const auto concept_table = toy_markov_concept_table();
  const auto exact =
      logitdiff::testing::enumerate_lda(toy_markov_base_table(), &concept_table, alpha, tau, 0, 1, max_length);
  std::map<std::vector<TokenId>, double> expected;
  for (const auto& s : exact) expected[s.ids] = static_cast<double>(s.probability);

  GenerationConfig cfg;
  cfg.baseline = base.get();
  cfg.concept_model = toxic.get();
  cfg.alpha = alpha;
  cfg.sampling = {tau, max_length};
  cfg.count = 40000;
  cfg.seed = 77;
  const auto batch = generate(cfg);
  std::map<std::vector<TokenId>, double> counts;
  for (const auto& r : batch.records) counts[r.sequence.ids()] += 1;
  double chi2 = 0.0;
  std::size_t cells = 0;
  const double n = static_cast<double>(cfg.count);
  for (const auto& [ids, p] : expected) {
    if (p * n < 5) continue;
    const double c = counts.count(ids) ? counts[ids] : 0.0;
    chi2 += (c - p * n) * (c - p * n) / (p * n);
    ++cells;
  }
  for (const auto& [ids, c] : counts) EXPECT_TRUE(expected.count(ids)) << "unreachable sequence sampled";
  ASSERT_GT(cells, 20u);
  // Wilson-Hilferty 0.9999 quantile of chi-square with cells - 1 dof.
  const double k = static_cast<double>(cells - 1);
  const double q = k * std::pow(1 - 2 / (9 * k) + 3.719 * std::sqrt(2 / (9 * k)), 3);
  EXPECT_LT(chi2, q);
}
