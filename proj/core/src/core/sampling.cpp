#include "logitdiff/core/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "logitdiff/core/error.hpp"

namespace logitdiff {
namespace {

std::vector<double> scaled(const LogitVector& logits, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    fail(ErrorCode::invalid_parameter, "temperature must be positive and finite");
  }
  if (logits.size() == 0) fail(ErrorCode::invalid_input, "empty logit vector");
  std::vector<double> z(logits.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!std::isfinite(logits[i])) {
      fail(ErrorCode::invalid_input, "non-finite logit at index " + std::to_string(i));
    }
    z[i] = logits[i] / tau;
  }
  return z;
}

}  // namespace

std::vector<double> softmax(const LogitVector& logits, double tau) {
  std::vector<double> z = scaled(logits, tau);
  const double peak = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : z) v /= total;
  return z;
}

std::vector<double> log_softmax(const LogitVector& logits, double tau) {
  std::vector<double> z = scaled(logits, tau);
  const double peak = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double v : z) total += std::exp(v - peak);
  const double log_norm = peak + std::log(total);
  for (double& v : z) v -= log_norm;
  return z;
}

TokenId sample_token(std::span<const double> probs, RngState& rng) {
  if (probs.empty()) fail(ErrorCode::invalid_input, "empty probability vector");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      fail(ErrorCode::invalid_input, "probabilities must be finite and nonnegative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    fail(ErrorCode::invalid_input, "probabilities do not sum to 1");
  }
  const double u = rng.next_double();
  double running = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    running += probs[i];
    last_positive = i;
    if (u < running) return static_cast<TokenId>(i);
  }
  // u landed in the rounding gap above the final partial sum.
  return static_cast<TokenId>(last_positive);
}

double perplexity_from_log_probs(std::span<const double> log_probs) {
  if (log_probs.empty()) fail(ErrorCode::invalid_input, "perplexity needs at least one scored position");
  double sum = 0.0;
  for (double lp : log_probs) {
    if (!std::isfinite(lp) || lp > 0.0) {
      fail(ErrorCode::invalid_input, "log-probabilities must be finite and <= 0");
    }
    sum += lp;
  }
  return std::exp(-sum / static_cast<double>(log_probs.size()));
}

double perplexity(std::span<const double> stepwise_probs) {
  if (stepwise_probs.empty()) fail(ErrorCode::invalid_input, "perplexity needs at least one scored position");
  std::vector<double> logs;
  logs.reserve(stepwise_probs.size());
  for (double p : stepwise_probs) {
    if (!(p > 0.0) || p > 1.0) fail(ErrorCode::invalid_input, "step probabilities must lie in (0, 1]");
    logs.push_back(std::log(p));
  }
  return perplexity_from_log_probs(logs);
}

}  // namespace logitdiff
