#pragma once

#include <optional>
#include <span>
#include <vector>

#include "logitdiff/probing/split.hpp"

namespace logitdiff::probing {

struct TrainOptions {
  double l2 = 1e-2;
  std::size_t max_iterations = 500;
  double gradient_tolerance = 1e-8;
};

struct ProbeModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::size_t layer = 0;
  std::size_t iterations = 0;
  double l2 = 0.0;
  bool converged = false;
  // Training loss before the first step and after every accepted step.
  std::vector<double> loss_history;

  double score(std::span<const double> features) const;  // sigmoid(w.x + b)
};

// Mean logistic loss plus (l2 / 2) * ||w||^2 with an unpenalised bias.
double probe_loss(std::span<const LabeledExample> data, std::span<const double> weights, double bias, double l2);

// Damped Newton iterations: each step solves the regularised Hessian system
// and backtracks (halving) until the loss does not increase, so loss_history
// is non-increasing. Stops when the gradient norm drops below the tolerance.
// degenerate_labels if the training set holds a single class.
ProbeModel train_probe(std::span<const LabeledExample> train, const TrainOptions& options = {}, std::size_t layer = 0);

struct ProbeMetrics {
  double accuracy = 0.0;
  std::optional<double> auc;  // undefined when the test set holds one class
  double f1 = 0.0;
};

// Accuracy at score >= 0.5, rank-statistic AUC with ties counted one half,
// F1 = 2PR / (P + R) and 0 when P + R = 0.
ProbeMetrics classification_metrics(std::span<const double> scores, const std::vector<bool>& labels);
ProbeMetrics probe_metrics(const ProbeModel& model, std::span<const LabeledExample> test);

}  // namespace logitdiff::probing
