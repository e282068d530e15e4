#include "logitdiff/probing/probe.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "logitdiff/core/error.hpp"

namespace logitdiff::probing {
namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::size_t feature_dim(std::span<const LabeledExample> data) {
  const std::size_t d = data.front().features.size();
  for (const auto& ex : data) {
    if (ex.features.size() != d) fail(ErrorCode::invalid_input, "feature dimensions differ within the dataset");
  }
  return d;
}

}  // namespace

double ProbeModel::score(std::span<const double> features) const {
  if (features.size() != weights.size()) fail(ErrorCode::invalid_input, "feature dimension does not match the probe");
  double z = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * features[j];
  return sigmoid(z);
}

double probe_loss(std::span<const LabeledExample> data, std::span<const double> weights, double bias, double l2) {
  double total = 0.0;
  for (const auto& ex : data) {
    double z = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * ex.features[j];
    // -log sigmoid(z) for positives, -log(1 - sigmoid(z)) for negatives
    total += ex.label ? softplus(-z) : softplus(z);
  }
  double penalty = 0.0;
  for (double w : weights) penalty += w * w;
  return total / static_cast<double>(data.size()) + 0.5 * l2 * penalty;
}

ProbeModel train_probe(std::span<const LabeledExample> train, const TrainOptions& options, std::size_t layer) {
  if (train.empty()) fail(ErrorCode::invalid_input, "empty training set");
  if (!(options.l2 >= 0.0)) fail(ErrorCode::invalid_parameter, "l2 strength must be nonnegative");
  const std::size_t n_pos = static_cast<std::size_t>(
      std::count_if(train.begin(), train.end(), [](const LabeledExample& e) { return e.label; }));
  if (n_pos == 0 || n_pos == train.size()) {
    fail(ErrorCode::degenerate_labels, "training set must contain both classes");
  }
  const std::size_t d = feature_dim(train);
  const std::size_t n = train.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::MatrixXd x(n, d + 1);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(i, j) = train[i].features[j];
    x(i, d) = 1.0;
    y(i) = train[i].label ? 1.0 : 0.0;
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd penalty_mask = Eigen::VectorXd::Ones(d + 1);
  penalty_mask(d) = 0.0;

  auto loss_at = [&](const Eigen::VectorXd& t) {
    const Eigen::VectorXd z = x * t;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += y(i) > 0.5 ? softplus(-z(i)) : softplus(z(i));
    return total * inv_n + 0.5 * options.l2 * t.head(d).squaredNorm();
  };

  ProbeModel model;
  model.layer = layer;
  model.l2 = options.l2;
  double loss = loss_at(theta);
  model.loss_history.push_back(loss);

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    const Eigen::VectorXd z = x * theta;
    Eigen::VectorXd p(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      p(i) = sigmoid(z(i));
      w(i) = p(i) * (1.0 - p(i));
    }
    const Eigen::VectorXd grad =
        x.transpose() * (p - y) * inv_n + options.l2 * penalty_mask.cwiseProduct(theta);
    if (grad.norm() < options.gradient_tolerance) {
      model.converged = true;
      break;
    }
    Eigen::MatrixXd hessian = x.transpose() * w.asDiagonal() * x * inv_n;
    hessian.diagonal() += options.l2 * penalty_mask;
    hessian.diagonal().array() += 1e-12;  // keeps the bias direction solvable when all weights vanish
    const Eigen::VectorXd step = hessian.ldlt().solve(grad);

    double scale = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings, scale *= 0.5) {
      const Eigen::VectorXd candidate = theta - scale * step;
      const double candidate_loss = loss_at(candidate);
      if (candidate_loss <= loss) {
        theta = candidate;
        loss = candidate_loss;
        accepted = true;
        break;
      }
    }
    model.iterations = iter + 1;
    if (!accepted) {
      // No descent left at machine precision; treat as converged.
      model.converged = true;
      break;
    }
    model.loss_history.push_back(loss);
  }

  model.weights.assign(theta.data(), theta.data() + d);
  model.bias = theta(d);
  return model;
}

ProbeMetrics classification_metrics(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.empty()) fail(ErrorCode::invalid_input, "empty test set");
  if (scores.size() != labels.size()) fail(ErrorCode::invalid_input, "scores and labels differ in length");
  const std::size_t n = scores.size();
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0, n_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool predicted = scores[i] >= 0.5;
    if (predicted == labels[i]) ++correct;
    if (predicted && labels[i]) ++tp;
    if (predicted && !labels[i]) ++fp;
    if (!predicted && labels[i]) ++fn;
    if (labels[i]) ++n_pos;
  }
  ProbeMetrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  const double precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;

  const std::size_t n_neg = n - n_pos;
  if (n_pos > 0 && n_neg > 0) {
    // Mann-Whitney U from midranks.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double positive_rank_sum = 0.0;
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
      const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) {
        if (labels[order[k]]) positive_rank_sum += midrank;
      }
      i = j + 1;
    }
    const double np = static_cast<double>(n_pos);
    const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
    m.auc = u / (np * static_cast<double>(n_neg));
  }
  return m;
}

ProbeMetrics probe_metrics(const ProbeModel& model, std::span<const LabeledExample> test) {
  std::vector<double> scores;
  std::vector<bool> labels;
  scores.reserve(test.size());
  for (const auto& ex : test) {
    scores.push_back(model.score(ex.features));
    labels.push_back(ex.label);
  }
  return classification_metrics(scores, labels);
}

}  // namespace logitdiff::probing
