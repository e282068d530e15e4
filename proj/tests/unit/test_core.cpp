#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <algorithm>
#include <bit>
#include <numeric>
#include <random>
#include <sstream>

#include "logitdiff/core/error.hpp"
#include "logitdiff/core/fasta.hpp"
#include "logitdiff/core/io.hpp"
#include "logitdiff/core/rng.hpp"
#include "logitdiff/core/sampling.hpp"
#include "logitdiff/core/vocabulary.hpp"
#include "test_helpers.hpp"

using namespace logitdiff;
using logitdiff::testing::expect_code;

namespace {

Vocabulary protein_vocab() { return Vocabulary({"<s>", "</s>", "A", "G", "K", "W"}, {0, 1, std::nullopt}); }

}  // namespace

TEST(Vocabulary, RoundTripsIndexAndToken) {
  const auto v = protein_vocab();
  for (TokenId i = 0; i < v.size(); ++i) EXPECT_EQ(v.find(v.token(i)), i);
  EXPECT_FALSE(v.find("Z").has_value());
}

TEST(Vocabulary, RejectsDuplicatesTinyTablesAndBadSpecials) {
  expect_code([] { Vocabulary({"A", "A"}, {0}); }, ErrorCode::invalid_input);
  expect_code([] { Vocabulary({"A"}, {0}); }, ErrorCode::invalid_input);
  expect_code([] { Vocabulary({"A", "B"}, {2}); }, ErrorCode::invalid_input);
  expect_code([] { Vocabulary({"A", "B"}, {0, 5}); }, ErrorCode::invalid_input);
}

TEST(Vocabulary, EncodeDecodeSkipsMarkers) {
  const auto v = protein_vocab();
  EXPECT_EQ(v.decode(std::vector<TokenId>{0, 2, 5, 4, 1}), "AWK");
  EXPECT_EQ(v.encode("AWK"), (std::vector<TokenId>{2, 5, 4}));
  expect_code([&] { v.encode("AZ"); }, ErrorCode::invalid_input);
}

TEST(Sequence, ValidateChecksRangeAndEndPlacement) {
  const auto v = protein_vocab();
  Sequence({0, 2, 3, 1}).validate(v);
  expect_code([&] { Sequence({0, 6}).validate(v); }, ErrorCode::invalid_input);
  expect_code([&] { Sequence({0, 1, 2}).validate(v); }, ErrorCode::invalid_input);
  expect_code([&] { Sequence().validate(v); }, ErrorCode::invalid_input);
}

// Known-answer blocks, cross-checked against numpy.random.Philox.
TEST(Rng, PhiloxKnownAnswers) {
  using B = RngState::Block;
  EXPECT_EQ(RngState::philox4x64_10({0, 0, 0, 0}, {0, 0}),
            (B{0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL, 0xd7e772cee186176bULL, 0x7e68b68aec7ba23bULL}));
  EXPECT_EQ(RngState::philox4x64_10({1, 0, 0, 0}, {1234, 7}),
            (B{0xe708c74f606173d3ULL, 0x10c7f0971cb49ab1ULL, 0xfc185a23b7c50880ULL, 0xcf5d1645d5df7a02ULL}));
  EXPECT_EQ(RngState::philox4x64_10({1, 0, 0, 0}, {0, 0}),
            (B{0x2f4ba6408e4d89bULL, 0x3dd62b0b9ca8c5b2ULL, 0x1c8667a55d902e79ULL, 0x907d7a052fd5b4dcULL}));
}

TEST(Rng, StreamConsumesBlocksInOrder) {
  RngState rng(1234, 7);
  const auto b0 = RngState::philox4x64_10({0, 0, 0, 0}, {1234, 7});
  const auto b1 = RngState::philox4x64_10({1, 0, 0, 0}, {1234, 7});
  for (auto w : b0) EXPECT_EQ(rng.next_u64(), w);
  for (auto w : b1) EXPECT_EQ(rng.next_u64(), w);
  EXPECT_EQ(rng.draws(), 8u);
}

TEST(Rng, NextDoubleUsesTop53Bits) {
  RngState rng(0, 0);
  const double expected = static_cast<double>(0x16554d9eca36314cULL >> 11) * 0x1.0p-53;
  EXPECT_EQ(rng.next_double(), expected);
}

TEST(Rng, IdenticalSeedAndStreamAreIdenticalDistinctStreamsDiffer) {
  RngState a(99, 3), b(99, 3), c(99, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, NextBelowStaysInRange) {
  RngState rng(5, 5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto x = rng.next_below(7);
    ASSERT_LT(x, 7u);
    ++counts[x];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 5 * std::sqrt(10000.0 * 6 / 7));
}

TEST(Softmax, SpecExamples) {
  auto p = softmax(LogitVector({0, 0, 0}), 1.0);
  for (double x : p) EXPECT_NEAR(x, 1.0 / 3.0, 1e-15);

  p = softmax(LogitVector({10, 0, 0}), 1.0);
  const double e10 = std::exp(10.0);
  EXPECT_NEAR(p[0], e10 / (e10 + 2), 1e-15);
  EXPECT_NEAR(p[1], 1 / (e10 + 2), 1e-15);
  EXPECT_NEAR(p[2], 1 / (e10 + 2), 1e-15);

  p = softmax(LogitVector({1, 2}), 0.5);
  const double e2 = std::exp(2.0), e4 = std::exp(4.0);
  EXPECT_NEAR(p[0], e2 / (e2 + e4), 1e-15);
  EXPECT_NEAR(p[1], e4 / (e2 + e4), 1e-15);
}

TEST(Softmax, Errors) {
  expect_code([] { softmax(LogitVector({1, 2}), 0.0); }, ErrorCode::invalid_parameter);
  expect_code([] { softmax(LogitVector({1, 2}), -1.0); }, ErrorCode::invalid_parameter);
  expect_code([] { softmax(LogitVector({1, INFINITY}), 1.0); }, ErrorCode::invalid_input);
  expect_code([] { softmax(LogitVector({NAN, 0}), 1.0); }, ErrorCode::invalid_input);
}

TEST(Softmax, Properties) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> n(0, 20);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> l(1 + trial % 12);
    for (auto& x : l) x = n(gen);
    const double tau = std::exp(std::normal_distribution<double>(0, 1)(gen));
    const auto p = softmax(LogitVector(l), tau);
    double sum = 0.0;
    for (double x : p) {
      EXPECT_GE(x, 0.0);
      sum += x;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);

    // Shift invariance.
    std::vector<double> shifted = l;
    for (auto& x : shifted) x += 123.25;
    const auto q = softmax(LogitVector(shifted), tau);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-12);

    // softmax(l, tau) == softmax(l / tau, 1) exactly.
    std::vector<double> scaled = l;
    for (auto& x : scaled) x /= tau;
    EXPECT_EQ(p, softmax(LogitVector(scaled), 1.0));
  }
}

TEST(Softmax, NoOverflowOnHugeFiniteLogits) {
  const auto p = softmax(LogitVector({1e308, -1e308, 1e308}), 1.0);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.0);
}

TEST(Softmax, LowTemperatureConcentratesOnArgmax) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> l(5);
    for (auto& x : l) x = std::uniform_real_distribution<double>(-5, 5)(gen);
    const auto top = std::max_element(l.begin(), l.end()) - l.begin();
    for (std::size_t i = 0; i < l.size(); ++i) {
      if (static_cast<long>(i) != top) l[i] = std::min(l[i], l[top] - 1.0);
    }
    EXPECT_GT(softmax(LogitVector(l), 1e-4)[top], 1 - 1e-9);
  }
}

TEST(SampleToken, PointMassAndDocumentedDraw) {
  RngState rng(42, 0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_token(std::vector<double>{1, 0, 0}, rng), 0u);

  // RngState(0, 0) draws u = first Philox word / 2^64 (top 53 bits), about
  // 0.087, which lands in the first half of [0.5, 0.5].
  RngState fixed(0, 0);
  const double u = static_cast<double>(0x16554d9eca36314cULL >> 11) * 0x1.0p-53;
  ASSERT_LT(u, 0.5);
  EXPECT_EQ(sample_token(std::vector<double>{0.5, 0.5}, fixed), 0u);
}

TEST(SampleToken, ReproducibleForIdenticalState) {
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  RngState a(7, 9), b(7, 9);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_token(p, a), sample_token(p, b));
}

TEST(SampleToken, FrequenciesMatchUniform) {
  RngState rng(2024, 1);
  const std::vector<double> p(4, 0.25);
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[sample_token(p, rng)];
  double chi2 = 0.0;
  for (int c : counts) {
    EXPECT_NEAR(static_cast<double>(c) / n, 0.25, 0.01);
    chi2 += (c - n / 4.0) * (c - n / 4.0) / (n / 4.0);
  }
  // 3 degrees of freedom; 16.27 is the 0.999 quantile.
  EXPECT_LT(chi2, 16.27);
}

TEST(SampleToken, NeverReturnsZeroProbability) {
  RngState rng(1, 1);
  for (int i = 0; i < 10000; ++i) EXPECT_NE(sample_token(std::vector<double>{0.5, 0.0, 0.5}, rng), 1u);
}

TEST(SampleToken, Errors) {
  RngState rng(0, 0);
  expect_code([&] { sample_token(std::vector<double>{}, rng); }, ErrorCode::invalid_input);
  expect_code([&] { sample_token(std::vector<double>{0.5, 0.4}, rng); }, ErrorCode::invalid_input);
  expect_code([&] { sample_token(std::vector<double>{1.5, -0.5}, rng); }, ErrorCode::invalid_input);
}

TEST(Perplexity, SpecExamples) {
  EXPECT_DOUBLE_EQ(perplexity(std::vector<double>(7, 0.5)), 2.0);
  EXPECT_DOUBLE_EQ(perplexity(std::vector<double>(3, 1.0)), 1.0);
  // -log2 p = 1, 2, 3 bits; mean 2 bits.
  EXPECT_NEAR(perplexity(std::vector<double>{0.5, 0.25, 0.125}), 4.0, 1e-12);
}

TEST(Perplexity, UniformModelGivesVocabularySize) {
  for (int v = 2; v < 30; ++v) {
    EXPECT_NEAR(perplexity(std::vector<double>(11, 1.0 / v)), v, 1e-12 * v);
  }
}

TEST(Perplexity, Errors) {
  expect_code([] { perplexity(std::vector<double>{}); }, ErrorCode::invalid_input);
  expect_code([] { perplexity(std::vector<double>{0.5, 0.0}); }, ErrorCode::invalid_input);
  expect_code([] { perplexity(std::vector<double>{-0.1}); }, ErrorCode::invalid_input);
}

TEST(Fasta, RoundTripWithProvenanceAndWrapping) {
  const auto v = protein_vocab();
  std::vector<TokenId> long_ids{0};
  for (int i = 0; i < 130; ++i) long_ids.push_back(2 + i % 4);
  Sequence a(long_ids, {"r0-s1", "toy", 42, 0, 1});
  Sequence b({0, 5, 4, 5}, {"r2-s0", "toy", 42, 2, 0});
  std::ostringstream out;
  write_fasta(out, {a, b}, v);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), ">r0-s1|toy|42|0");
  std::istringstream line_check(text);
  std::string line;
  while (std::getline(line_check, line)) EXPECT_LE(line.size(), 60u);

  std::istringstream in(text);
  const auto back = read_fasta(in, v);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], a);
  EXPECT_EQ(back[1], b);
  EXPECT_EQ(back[1].provenance().run, 2u);
  EXPECT_EQ(back[1].provenance().backend, "toy");
}

TEST(Fasta, MalformedHeaderIsFormatError) {
  std::istringstream in(">only-id\nAG\n");
  expect_code([&] { read_fasta(in, protein_vocab()); }, ErrorCode::format);
}

TEST(Csv, ParsesCommentsHeaderAndTypedCells) {
  const auto t = parse_csv("# logitdiff rates v1\na,b,c\n1,true,x\n2.5,0,y\n");
  ASSERT_EQ(t.comments.size(), 1u);
  EXPECT_EQ(t.comments[0], "logitdiff rates v1");
  EXPECT_EQ(t.number(1, t.column("a")), 2.5);
  EXPECT_TRUE(t.boolean(0, t.column("b")));
  EXPECT_FALSE(t.boolean(1, t.column("b")));
  expect_code([&] { t.column("zzz"); }, ErrorCode::format);
  expect_code([&] { t.number(0, t.column("c")); }, ErrorCode::format);
  expect_code([] { parse_csv("a,b\n1\n"); }, ErrorCode::format);
}

TEST(FormatExact, RoundTripsDoubles) {
  std::mt19937_64 gen(8);
  for (int i = 0; i < 10000; ++i) {
    const double v = std::bit_cast<double>(gen());
    if (!std::isfinite(v)) continue;
    EXPECT_EQ(std::strtod(format_exact(v).c_str(), nullptr), v);
  }
}

TEST(Errors, CodeNamesRoundTrip) {
  for (int c = 0; c <= static_cast<int>(ErrorCode::no_data); ++c) {
    const auto code = static_cast<ErrorCode>(c);
    EXPECT_EQ(error_code_from_string(to_string(code)), code);
  }
}
