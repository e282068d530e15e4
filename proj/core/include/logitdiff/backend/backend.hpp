#pragma once

#include <map>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "logitdiff/backend/descriptor.hpp"
#include "logitdiff/core/logits.hpp"
#include "logitdiff/core/sequence.hpp"
#include "logitdiff/steering/steering.hpp"

namespace logitdiff {

using ActivationMatrix = std::vector<std::vector<double>>;  // [position][hidden]
using ActivationMap = std::map<std::size_t, ActivationMatrix>;

struct Classification {
  bool label = false;
  double score = 0.0;
  friend bool operator==(const Classification&, const Classification&) = default;
};

struct FoldConfidence {
  double mean_plddt = 0.0;
  std::vector<double> per_residue;
  friend bool operator==(const FoldConfidence&, const FoldConfidence&) = default;
};

// One session on a model backend. Public calls check capabilities and
// arguments, then dispatch to the do_* hooks, so every implementation (in
// process or remote) reports the same error codes. Sessions are not
// thread-safe; open one per concurrent stream.
//
// Steering is stacked: each set_steering() appends an intervention that is
// applied, in installation order, after the targeted layer; clear_steering()
// removes all of them.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendDescriptor& descriptor() const = 0;

  LogitVector next_logits(const Sequence& prefix);
  ActivationMap activations(const Sequence& prefix, std::span<const std::size_t> layers);
  void set_steering(const steering::SteeringSpec& spec);
  void clear_steering();
  std::vector<double> embed(std::string_view text);
  Classification classify(std::string_view text);
  FoldConfidence fold_confidence(std::string_view text);

 protected:
  virtual LogitVector do_next_logits(const Sequence& prefix);
  virtual ActivationMap do_activations(const Sequence& prefix, std::span<const std::size_t> layers);
  virtual void do_set_steering(const steering::SteeringSpec& spec);
  virtual void do_clear_steering();
  virtual std::vector<double> do_embed(std::string_view text);
  virtual Classification do_classify(std::string_view text);
  virtual FoldConfidence do_fold_confidence(std::string_view text);

 private:
  void require(Capability c) const;
};

// A model that can open independent sessions. Sessions borrow the provider,
// which must outlive them.
class BackendProvider {
 public:
  virtual ~BackendProvider() = default;
  virtual std::unique_ptr<Backend> open_session() = 0;
  virtual const BackendDescriptor& descriptor() = 0;
};

}  // namespace logitdiff
