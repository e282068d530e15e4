#pragma once

#include <string>
#include <vector>

#include "logitdiff/core/rng.hpp"

namespace logitdiff::probing {

struct LabeledExample {
  std::vector<double> features;
  bool label = false;
  std::string group;
};

struct SplitIndices {
  std::vector<std::size_t> train;  // indices into the input, ascending
  std::vector<std::size_t> test;
};

// Assigns whole groups to train or test. Groups are shuffled with rng, then
// a subset-sum table over group sizes picks the achievable train size
// closest to fraction * n (ties toward the smaller size); among subsets
// reaching a size, the one whose positive count is closest to the overall
// class ratio is kept, greedily in shuffled group order. Both partitions are
// always nonempty. cannot_split with fewer than two groups.
SplitIndices group_exclusive_split(const std::vector<std::string>& groups, const std::vector<bool>& labels,
                                   double train_fraction, RngState& rng);

SplitIndices group_exclusive_split(const std::vector<LabeledExample>& data, double train_fraction, RngState& rng);

}  // namespace logitdiff::probing
