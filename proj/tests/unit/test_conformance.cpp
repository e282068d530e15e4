#include <gtest/gtest.h>

#include "conformance.hpp"
#include "logitdiff/backend/registry.hpp"
#include "loopback.hpp"

using namespace logitdiff;
using namespace logitdiff::testing;

namespace {

ConformanceOptions quick() {
  ConformanceOptions o;
  o.prefixes = 8;
  o.framing_messages = 500;
  return o;
}

class InProcess : public ::testing::TestWithParam<const char*> {};

}  // namespace

TEST_P(InProcess, PassesConformance) {
  auto provider = open_backend(std::string("toy:") + GetParam());
  const auto results = run_conformance(*provider, quick());
  EXPECT_TRUE(all_passed(results)) << describe_failures(results);
  EXPECT_GT(results.size(), 5u);
}

TEST_P(InProcess, PassesConformanceOverLoopback) {
  Loopback loop(open_backend(std::string("toy:") + GetParam()));
  const auto results = run_conformance(loop.provider(), quick());
  EXPECT_TRUE(all_passed(results)) << describe_failures(results);
}

INSTANTIATE_TEST_SUITE_P(Toys, InProcess,
                         ::testing::Values("markov-base", "markov-toxic", "transformer", "motif", "fold", "planted"),
                         [](const auto& info) {
                           std::string n = info.param;
                           for (char& c : n) {
                             if (c == '-') c = '_';
                           }
                           return n;
                         });

#ifdef LOGITDIFF_CLI_PATH
TEST(ChildProcess, TransformerOverStdioPassesConformance) {
  auto provider = open_backend(std::string("cmd:") + LOGITDIFF_CLI_PATH + " serve-toy --model transformer --listen stdio");
  const auto results = run_conformance(*provider, quick());
  EXPECT_TRUE(all_passed(results)) << describe_failures(results);
}

TEST(ChildProcess, MarkovOverStdioPassesConformance) {
  auto provider = open_backend(std::string("cmd:") + LOGITDIFF_CLI_PATH + " serve-toy --model markov-toxic");
  const auto results = run_conformance(*provider, quick());
  EXPECT_TRUE(all_passed(results)) << describe_failures(results);
}
#endif
