#include "logitdiff/decode/lda.hpp"

#include <cmath>
#include <string>

#include "logitdiff/core/error.hpp"

namespace logitdiff::decode {

LogitVector lda_combine(const LogitVector& baseline, const LogitVector& concept_logits, double alpha) {
  if (baseline.size() != concept_logits.size()) {
    fail(ErrorCode::invalid_input, "logit vectors differ in length (" + std::to_string(baseline.size()) + " vs " +
                                       std::to_string(concept_logits.size()) + ")");
  }
  if (!std::isfinite(alpha)) fail(ErrorCode::invalid_parameter, "alpha must be finite");
  std::vector<double> out(baseline.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = baseline[i] + alpha * (baseline[i] - concept_logits[i]);
  }
  return LogitVector(std::move(out));
}

}  // namespace logitdiff::decode
