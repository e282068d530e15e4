#include "logitdiff/probing/sweep.hpp"

#include <cmath>
#include <tuple>
#include <fmt/format.h>

#include "logitdiff/core/error.hpp"
#include "logitdiff/core/parallel.hpp"

namespace logitdiff::probing {
namespace {

std::pair<double, double> mean_sd(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

std::vector<LabeledExample> select(const std::vector<LabeledExample>& data, const std::vector<std::size_t>& idx) {
  std::vector<LabeledExample> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(data[i]);
  return out;
}

std::string format_optional(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string{}; }

}  // namespace

SweepResult layer_sweep(std::span<const std::vector<LabeledExample>> per_layer, std::span<const std::size_t> layers,
                        const SweepOptions& options) {
  if (options.splits == 0) fail(ErrorCode::invalid_parameter, "splits must be positive");
  if (per_layer.size() != layers.size() || layers.empty()) {
    fail(ErrorCode::invalid_input, "one dataset per layer is required");
  }
  const auto& reference = per_layer.front();
  if (reference.empty()) fail(ErrorCode::invalid_input, "empty probing dataset");
  for (const auto& data : per_layer) {
    if (data.size() != reference.size()) fail(ErrorCode::invalid_input, "layer datasets differ in size");
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].group.empty()) fail(ErrorCode::invalid_input, "empty group key");
      if (data[i].group != reference[i].group || data[i].label != reference[i].label) {
        fail(ErrorCode::invalid_input, "layer datasets disagree on labels or groups");
      }
    }
  }

  SweepResult result;
  for (const auto& ex : reference) result.groups.push_back(ex.group);
  std::vector<bool> labels;
  for (const auto& ex : reference) labels.push_back(ex.label);
  for (std::size_t s = 0; s < options.splits; ++s) {
    RngState rng(options.seed, s);
    result.splits.push_back(group_exclusive_split(result.groups, labels, options.train_fraction, rng));
  }

  const std::size_t tasks = layers.size() * options.splits;
  result.runs.resize(tasks);
  parallel_for(tasks, options.workers ? options.workers : default_workers(), [&](std::size_t, std::size_t t) {
    const std::size_t li = t / options.splits;
    const std::size_t s = t % options.splits;
    SplitResult& run = result.runs[t];
    run.layer = layers[li];
    run.split = s;
    try {
      const auto train = select(per_layer[li], result.splits[s].train);
      const auto test = select(per_layer[li], result.splits[s].test);
      const ProbeModel model = train_probe(train, options.training, layers[li]);
      run.metrics = probe_metrics(model, test);
      run.iterations = model.iterations;
      run.ok = true;
    } catch (const Error& e) {
      run.error = fmt::format("{}: {}", to_string(e.code()), e.what());
    }
  });

  for (std::size_t li = 0; li < layers.size(); ++li) {
    LayerSummary summary;
    summary.layer = layers[li];
    std::vector<double> acc, auc, f1;
    for (std::size_t s = 0; s < options.splits; ++s) {
      const auto& run = result.runs[li * options.splits + s];
      if (!run.ok) continue;
      acc.push_back(run.metrics.accuracy);
      f1.push_back(run.metrics.f1);
      if (run.metrics.auc) auc.push_back(*run.metrics.auc);
    }
    summary.succeeded = acc.size();
    summary.valid = !acc.empty();
    if (summary.valid) {
      std::tie(summary.accuracy_mean, summary.accuracy_sd) = mean_sd(acc);
      std::tie(summary.f1_mean, summary.f1_sd) = mean_sd(f1);
      if (!auc.empty()) {
        const auto [m, sd] = mean_sd(auc);
        summary.auc_mean = m;
        summary.auc_sd = sd;
      }
    }
    result.layers.push_back(summary);
  }
  return result;
}

SweepResult layer_sweep(Backend& session, std::span<const steering::LabeledSequence> dataset,
                        std::span<const std::size_t> layers, const SweepOptions& options) {
  const auto activations = steering::collect_layers(session, dataset, layers, options.aggregation);
  std::vector<std::vector<LabeledExample>> per_layer(layers.size());
  for (std::size_t li = 0; li < layers.size(); ++li) {
    per_layer[li].reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (!dataset[i].label) fail(ErrorCode::invalid_input, "probing requires labeled sequences");
      per_layer[li].push_back({activations[li][i], *dataset[i].label, dataset[i].group});
    }
  }
  return layer_sweep(per_layer, layers, options);
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = "# logitdiff probe v1\nlayer,split,accuracy,auc,f1\n";
  for (const auto& run : result.runs) {
    if (!run.ok) {
      out += fmt::format("{},{},,,\n", run.layer, run.split);
      continue;
    }
    out += fmt::format("{},{},{},{},{}\n", run.layer, run.split, run.metrics.accuracy, format_optional(run.metrics.auc),
                       run.metrics.f1);
  }
  return out;
}

std::string sweep_summary_csv(const SweepResult& result) {
  std::string out = "layer,valid,splits_ok,accuracy_mean,accuracy_sd,auc_mean,auc_sd,f1_mean,f1_sd\n";
  for (const auto& s : result.layers) {
    if (!s.valid) {
      out += fmt::format("{},0,0,,,,,,\n", s.layer);
      continue;
    }
    out += fmt::format("{},1,{},{},{},{},{},{},{}\n", s.layer, s.succeeded, s.accuracy_mean, s.accuracy_sd,
                       format_optional(s.auc_mean), format_optional(s.auc_sd), s.f1_mean, s.f1_sd);
  }
  return out;
}

}  // namespace logitdiff::probing
