#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "logitdiff/steering/steering.hpp"

namespace logitdiff::steering {

// Versioned plain-text steering vector file:
//
//   logitdiff-steering 1
//   vectors <count>
//   layer <l>
//   dim <d>
//   counts <n_plus> <n_minus>
//   r <d decimals>
//   mu_plus <d decimals>
//   mu_minus <d decimals>
//   end
//   ... (one block per vector)
//
// Decimals are shortest exact round-trip representations.
void write_vectors(std::ostream& out, const std::vector<SteeringVector>& vectors);
std::vector<SteeringVector> read_vectors(std::istream& in);

void save_vectors(const std::filesystem::path& path, const std::vector<SteeringVector>& vectors);
std::vector<SteeringVector> load_vectors(const std::filesystem::path& path);

}  // namespace logitdiff::steering
