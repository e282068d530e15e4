#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace logitdiff {

// Next-token scores over a fixed vocabulary.
class LogitVector {
 public:
  LogitVector() = default;
  explicit LogitVector(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }

  friend bool operator==(const LogitVector&, const LogitVector&) = default;

 private:
  std::vector<double> values_;
};

}  // namespace logitdiff
