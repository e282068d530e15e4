#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "logitdiff/backend/protocol.hpp"
#include "logitdiff/backend/registry.hpp"
#include "logitdiff/core/sampling.hpp"
#include "logitdiff/decode/generate.hpp"
#include "logitdiff/decode/lda.hpp"
#include "logitdiff/probing/probe.hpp"
#include "logitdiff/quality/frechet.hpp"
#include "logitdiff/steering/steering.hpp"

using namespace logitdiff;

namespace {

std::vector<double> gaussian(std::mt19937_64& gen, std::size_t n) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

void BM_LdaCombineAndSample(benchmark::State& state) {
  std::mt19937_64 gen(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const LogitVector b(gaussian(gen, n)), t(gaussian(gen, n));
  RngState rng(1, 0);
  for (auto _ : state) {
    const auto z = decode::lda_combine(b, t, 0.5);
    const auto p = softmax(z, 1.0);
    benchmark::DoNotOptimize(sample_token(p, rng));
  }
}
BENCHMARK(BM_LdaCombineAndSample)->Arg(32)->Arg(1024)->Arg(51200);

void BM_FrameRoundTrip(benchmark::State& state) {
  std::mt19937_64 gen(2);
  protocol::Message m;
  m.id = 7;
  m.session = 1;
  m.payload = protocol::LogitsReply{gaussian(gen, static_cast<std::size_t>(state.range(0)))};
  for (auto _ : state) {
    const auto body = protocol::encode_body(m);
    benchmark::DoNotOptimize(protocol::decode_body(body));
  }
}
BENCHMARK(BM_FrameRoundTrip)->Arg(32)->Arg(1024);

void BM_GenerateToyMarkov(benchmark::State& state) {
  auto base = open_backend("toy:markov-base");
  auto toxic = open_backend("toy:markov-toxic");
  decode::GenerationConfig cfg;
  cfg.baseline = base.get();
  cfg.concept_model = toxic.get();
  cfg.alpha = 0.5;
  cfg.sampling.max_length = 40;
  cfg.count = 100;
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode::generate(cfg));
    ++cfg.seed;
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.count));
}
BENCHMARK(BM_GenerateToyMarkov)->Unit(benchmark::kMillisecond);

void BM_Ablation(benchmark::State& state) {
  std::mt19937_64 gen(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = gaussian(gen, n), r = gaussian(gen, n);
  for (auto _ : state) benchmark::DoNotOptimize(steering::apply_ablation(x, r));
}
BENCHMARK(BM_Ablation)->Arg(16)->Arg(1280);

void BM_FrechetDistance(benchmark::State& state) {
  std::mt19937_64 gen(4);
  const auto d = static_cast<std::size_t>(state.range(0));
  std::vector<std::vector<double>> a, b;
  for (std::size_t i = 0; i < 2 * d; ++i) {
    a.push_back(gaussian(gen, d));
    b.push_back(gaussian(gen, d));
  }
  const auto sa = quality::fit_stats(a), sb = quality::fit_stats(b);
  for (auto _ : state) benchmark::DoNotOptimize(quality::frechet_distance(sa, sb));
}
BENCHMARK(BM_FrechetDistance)->Arg(8)->Arg(64)->Arg(320)->Unit(benchmark::kMicrosecond);

void BM_TrainProbe(benchmark::State& state) {
  std::mt19937_64 gen(5);
  const auto d = static_cast<std::size_t>(state.range(0));
  std::vector<probing::LabeledExample> data;
  for (int i = 0; i < 400; ++i) {
    auto x = gaussian(gen, d);
    x[0] += i % 2 ? 1.0 : -1.0;
    data.push_back({x, i % 2 == 1, "g" + std::to_string(i % 40)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(probing::train_probe(data));
}
BENCHMARK(BM_TrainProbe)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
