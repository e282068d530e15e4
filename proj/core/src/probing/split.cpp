#include "logitdiff/probing/split.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "logitdiff/core/error.hpp"

namespace logitdiff::probing {

SplitIndices group_exclusive_split(const std::vector<std::string>& groups, const std::vector<bool>& labels,
                                   double train_fraction, RngState& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    fail(ErrorCode::invalid_parameter, "train fraction must lie strictly between 0 and 1");
  }
  if (groups.size() != labels.size()) fail(ErrorCode::invalid_input, "groups and labels differ in length");

  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].empty()) fail(ErrorCode::invalid_input, "example " + std::to_string(i) + " has an empty group key");
    members[groups[i]].push_back(i);
  }
  if (members.size() < 2) fail(ErrorCode::cannot_split, "need at least two distinct groups to split");

  struct Group {
    std::vector<std::size_t> rows;
    std::size_t positives = 0;
  };
  std::vector<Group> order;
  order.reserve(members.size());
  for (auto& [key, rows] : members) {
    Group g{std::move(rows), 0};
    for (std::size_t r : g.rows) g.positives += labels[r] ? 1 : 0;
    order.push_back(std::move(g));
  }
  deterministic_shuffle(order.begin(), order.end(), rng);

  const std::size_t n = groups.size();
  const std::size_t total_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  const double pos_ratio = static_cast<double>(total_pos) / static_cast<double>(n);

  // reach[s] = positive count of the kept subset summing to s, or -1.
  // took[g][s] = whether group g was added to reach s at stage g.
  constexpr long kUnreached = -1;
  std::vector<long> reach(n + 1, kUnreached);
  reach[0] = 0;
  std::vector<std::vector<char>> took(order.size(), std::vector<char>(n + 1, 0));
  for (std::size_t g = 0; g < order.size(); ++g) {
    const std::size_t size = order[g].rows.size();
    const long pos = static_cast<long>(order[g].positives);
    for (std::size_t s = n; s >= size && s > 0; --s) {
      if (reach[s - size] == kUnreached) continue;
      const long candidate = reach[s - size] + pos;
      const double target = pos_ratio * static_cast<double>(s);
      if (reach[s] == kUnreached ||
          std::abs(static_cast<double>(candidate) - target) < std::abs(static_cast<double>(reach[s]) - target)) {
        reach[s] = candidate;
        took[g][s] = 1;
      }
    }
  }

  const double target_size = train_fraction * static_cast<double>(n);
  std::size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t s = 1; s < n; ++s) {
    if (reach[s] == kUnreached) continue;
    const double gap = std::abs(static_cast<double>(s) - target_size);
    if (gap < best_gap) {
      best_gap = gap;
      best = s;
    }
  }

  std::vector<char> in_train(order.size(), 0);
  std::size_t s = best;
  for (std::size_t g = order.size(); g-- > 0 && s > 0;) {
    if (took[g][s]) {
      in_train[g] = 1;
      s -= order[g].rows.size();
    }
  }

  SplitIndices out;
  for (std::size_t g = 0; g < order.size(); ++g) {
    auto& dest = in_train[g] ? out.train : out.test;
    dest.insert(dest.end(), order[g].rows.begin(), order[g].rows.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

SplitIndices group_exclusive_split(const std::vector<LabeledExample>& data, double train_fraction, RngState& rng) {
  std::vector<std::string> groups;
  std::vector<bool> labels;
  groups.reserve(data.size());
  labels.reserve(data.size());
  for (const auto& ex : data) {
    groups.push_back(ex.group);
    labels.push_back(ex.label);
  }
  return group_exclusive_split(groups, labels, train_fraction, rng);
}

}  // namespace logitdiff::probing
