#include "conformance.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include "logitdiff/backend/protocol.hpp"
#include "logitdiff/core/error.hpp"
#include "random_messages.hpp"

namespace logitdiff::testing {
namespace {

// Runs fn and reports whether it threw Error with the expected code.
bool throws_code(const std::function<void()>& fn, ErrorCode expected, std::string& detail) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.code() == expected) return true;
    detail = "got " + std::string(to_string(e.code())) + ": " + e.what();
    return false;
  }
  detail = "no error raised";
  return false;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

class Suite {
 public:
  Suite(BackendProvider& provider, const ConformanceOptions& options)
      : provider_(provider), options_(options), gen_(options.seed), d_(provider.descriptor()) {
    tol_ = d_.numeric_tolerance;
  }

  std::vector<CheckResult> run() {
    check("descriptor.valid", [&](std::string& detail) {
      try {
        d_.validate();
        return true;
      } catch (const Error& e) {
        detail = e.what();
        return false;
      }
    });
    unsupported_checks();
    if (d_.has(Capability::logits)) logits_checks();
    if (d_.has(Capability::activations)) activation_checks();
    if (d_.has(Capability::steering)) steering_checks();
    if (d_.has(Capability::embeddings)) embedding_checks();
    if (d_.has(Capability::classify)) classify_checks();
    if (d_.has(Capability::fold_confidence)) fold_checks();
    results_.push_back(framing_round_trip(options_.seed, options_.framing_messages));
    return results_;
  }

 private:
  void check(const std::string& name, const std::function<bool(std::string&)>& fn) {
    CheckResult r{name, false, {}};
    try {
      r.ok = fn(r.detail);
    } catch (const std::exception& e) {
      r.detail = std::string("unexpected exception: ") + e.what();
    }
    results_.push_back(std::move(r));
  }

  bool close(std::span<const double> a, std::span<const double> b) {
    return tol_ == 0.0 ? std::equal(a.begin(), a.end(), b.begin(), b.end()) : max_abs_diff(a, b) <= tol_;
  }

  Sequence random_prefix() {
    const Vocabulary& v = *d_.vocabulary;
    std::vector<TokenId> ids{v.bos()};
    const std::size_t len = std::uniform_int_distribution<std::size_t>(0, 7)(gen_);
    while (ids.size() <= len) {
      const auto t = static_cast<TokenId>(std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(gen_));
      if (v.eos() && t == *v.eos()) continue;
      ids.push_back(t);
    }
    return Sequence(ids);
  }

  // Residue text the backend can read: drawn from its vocabulary when it has
  // one, otherwise from the amino-acid alphabet.
  std::string random_text() {
    if (d_.vocabulary) {
      for (;;) {
        const std::string s = d_.vocabulary->decode(random_prefix().ids());
        if (!s.empty()) return s;
      }
    }
    static const std::string alphabet = "ACDEFGHIKLMNPQRSTVWY";
    std::string s(1 + std::uniform_int_distribution<std::size_t>(0, 11)(gen_), 'A');
    for (auto& c : s) c = alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(gen_)];
    return s;
  }

  std::vector<double> random_vector(std::size_t d, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    std::vector<double> v(d);
    for (auto& x : v) x = n(gen_);
    return v;
  }

  steering::SteeringVector random_steering_vector(std::size_t layer) {
    steering::SteeringVector v;
    v.layer = layer;
    v.mu_plus = random_vector(d_.hidden_size);
    v.mu_minus = random_vector(d_.hidden_size);
    v.r.resize(d_.hidden_size);
    for (std::size_t i = 0; i < d_.hidden_size; ++i) v.r[i] = v.mu_plus[i] - v.mu_minus[i];
    v.n_plus = v.n_minus = 1;
    return v;
  }

  void unsupported_checks() {
    const std::pair<Capability, std::function<void(Backend&)>> calls[] = {
        {Capability::logits, [](Backend& s) { s.next_logits(Sequence({0})); }},
        {Capability::activations,
         [](Backend& s) {
           const std::size_t layer = 0;
           s.activations(Sequence({0}), std::span(&layer, 1));
         }},
        {Capability::steering, [](Backend& s) { s.clear_steering(); }},
        {Capability::embeddings, [](Backend& s) { s.embed("A"); }},
        {Capability::classify, [](Backend& s) { s.classify("A"); }},
        {Capability::fold_confidence, [](Backend& s) { s.fold_confidence("A"); }},
    };
    for (const auto& [cap, call] : calls) {
      if (d_.has(cap)) continue;
      check("errors.unsupported." + std::string(to_string(cap)), [&](std::string& detail) {
        auto session = provider_.open_session();
        return throws_code([&] { call(*session); }, ErrorCode::unsupported_capability, detail);
      });
    }
  }

  void logits_checks() {
    const Vocabulary& v = *d_.vocabulary;
    std::vector<Sequence> prefixes;
    for (std::size_t i = 0; i < options_.prefixes; ++i) prefixes.push_back(random_prefix());

    check("logits.shape", [&](std::string& detail) {
      auto s = provider_.open_session();
      for (const auto& p : prefixes) {
        const auto l = s->next_logits(p);
        if (l.size() != v.size()) {
          detail = "length " + std::to_string(l.size()) + " for vocabulary " + std::to_string(v.size());
          return false;
        }
      }
      return true;
    });
    check("logits.determinism", [&](std::string& detail) {
      auto s1 = provider_.open_session();
      auto s2 = provider_.open_session();
      for (const auto& p : prefixes) {
        const auto a = s1->next_logits(p);
        const auto b = s1->next_logits(p);
        const auto c = s2->next_logits(p);
        if (!close(a.values(), b.values()) || !close(a.values(), c.values())) {
          detail = "repeat differs by " + std::to_string(max_abs_diff(a.values(), b.values()));
          return false;
        }
      }
      return true;
    });
    check("errors.token_out_of_range", [&](std::string& detail) {
      auto s = provider_.open_session();
      return throws_code([&] { s->next_logits(Sequence({v.bos(), static_cast<TokenId>(v.size())})); },
                         ErrorCode::invalid_input, detail);
    });
    check("errors.empty_prefix", [&](std::string& detail) {
      auto s = provider_.open_session();
      return throws_code([&] { s->next_logits(Sequence()); }, ErrorCode::invalid_input, detail);
    });
  }

  void activation_checks() {
    const std::size_t layers = d_.layer_count;
    check("activations.shape", [&](std::string& detail) {
      auto s = provider_.open_session();
      std::vector<std::size_t> all(layers);
      std::iota(all.begin(), all.end(), 0);
      for (std::size_t i = 0; i < options_.prefixes; ++i) {
        const auto p = random_prefix();
        const auto acts = s->activations(p, all);
        if (acts.size() != layers) {
          detail = "expected " + std::to_string(layers) + " layers";
          return false;
        }
        for (const auto& [l, m] : acts) {
          if (m.size() != p.size()) {
            detail = "layer " + std::to_string(l) + " has " + std::to_string(m.size()) + " positions";
            return false;
          }
          for (const auto& row : m) {
            if (row.size() != d_.hidden_size) {
              detail = "row width " + std::to_string(row.size());
              return false;
            }
          }
        }
      }
      return true;
    });
    check("activations.empty_request", [&](std::string& detail) {
      auto s = provider_.open_session();
      const auto acts = s->activations(random_prefix(), {});
      if (!acts.empty()) detail = "non-empty map for empty layer set";
      return acts.empty();
    });
    check("activations.determinism", [&](std::string& detail) {
      auto s = provider_.open_session();
      const std::size_t last = layers - 1;
      const auto p = random_prefix();
      const auto a = s->activations(p, std::span(&last, 1)).at(last);
      const auto b = s->activations(p, std::span(&last, 1)).at(last);
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (!close(a[i], b[i])) {
          detail = "position " + std::to_string(i) + " differs";
          return false;
        }
      }
      return true;
    });
    check("errors.layer_out_of_range", [&](std::string& detail) {
      auto s = provider_.open_session();
      const std::size_t bad = layers;
      return throws_code([&] { s->activations(random_prefix(), std::span(&bad, 1)); }, ErrorCode::invalid_parameter,
                         detail);
    });
  }

  steering::SteeringSpec direct_add_all(double alpha, const std::vector<steering::SteeringVector>& vectors) {
    steering::SteeringSpec spec;
    spec.mode = steering::Mode::direct_add;
    spec.alpha = alpha;
    spec.layers = steering::LayerSelection::all_layers();
    spec.vectors = vectors;
    return spec;
  }

  void steering_checks() {
    std::vector<steering::SteeringVector> vectors;
    for (std::size_t l = 0; l < d_.layer_count; ++l) vectors.push_back(random_steering_vector(l));
    std::vector<Sequence> prefixes;
    for (std::size_t i = 0; i < 6; ++i) prefixes.push_back(random_prefix());

    check("steering.zero_identity", [&](std::string& detail) {
      auto s = provider_.open_session();
      std::vector<steering::SteeringVector> zeros = vectors;
      for (auto& v : zeros) std::fill(v.r.begin(), v.r.end(), 0.0);
      std::vector<LogitVector> before;
      for (const auto& p : prefixes) before.push_back(s->next_logits(p));
      s->set_steering(direct_add_all(0.0, zeros));
      for (std::size_t i = 0; i < prefixes.size(); ++i) {
        if (!close(before[i].values(), s->next_logits(prefixes[i]).values())) {
          detail = "alpha=0 zero-vector spec changed the logits";
          return false;
        }
      }
      return true;
    });
    check("steering.install_clear_restores", [&](std::string& detail) {
      auto s = provider_.open_session();
      std::vector<LogitVector> before;
      for (const auto& p : prefixes) before.push_back(s->next_logits(p));
      s->set_steering(direct_add_all(2.0, vectors));
      bool changed = false;
      for (std::size_t i = 0; i < prefixes.size(); ++i) {
        changed |= !close(before[i].values(), s->next_logits(prefixes[i]).values());
      }
      s->clear_steering();
      for (std::size_t i = 0; i < prefixes.size(); ++i) {
        if (!close(before[i].values(), s->next_logits(prefixes[i]).values())) {
          detail = "clear_steering did not restore baseline logits";
          return false;
        }
      }
      if (!changed) detail = "steering had no effect on the logits";
      return changed;
    });
    check("steering.plus_minus_alpha", [&](std::string& detail) {
      auto s = provider_.open_session();
      std::vector<LogitVector> before;
      for (const auto& p : prefixes) before.push_back(s->next_logits(p));
      s->set_steering(direct_add_all(0.75, vectors));
      s->set_steering(direct_add_all(-0.75, vectors));
      const double bound = std::max(1e-9, tol_);
      for (std::size_t i = 0; i < prefixes.size(); ++i) {
        const double diff = max_abs_diff(before[i].values(), s->next_logits(prefixes[i]).values());
        if (diff > bound) {
          detail = "alpha then -alpha differs from baseline by " + std::to_string(diff);
          return false;
        }
      }
      return true;
    });
    check("steering.per_session", [&](std::string& detail) {
      auto s1 = provider_.open_session();
      auto s2 = provider_.open_session();
      const auto before = s2->next_logits(prefixes[0]);
      s1->set_steering(direct_add_all(2.0, vectors));
      if (!close(before.values(), s2->next_logits(prefixes[0]).values())) {
        detail = "steering leaked into another session";
        return false;
      }
      return true;
    });
    check("errors.steering_layer_out_of_range", [&](std::string& detail) {
      auto s = provider_.open_session();
      auto spec = direct_add_all(1.0, {random_steering_vector(99)});
      spec.layers = steering::LayerSelection::single(99);
      return throws_code([&] { s->set_steering(spec); }, ErrorCode::invalid_parameter, detail);
    });
    check("errors.steering_dimension_mismatch", [&](std::string& detail) {
      auto s = provider_.open_session();
      auto v = random_steering_vector(0);
      v.r.push_back(1.0);
      auto spec = direct_add_all(1.0, {v});
      spec.layers = steering::LayerSelection::single(0);
      return throws_code([&] { s->set_steering(spec); }, ErrorCode::invalid_parameter, detail);
    });
  }

  void embedding_checks() {
    check("embed.determinism", [&](std::string& detail) {
      auto s = provider_.open_session();
      std::size_t dim = 0;
      for (std::size_t i = 0; i < options_.prefixes; ++i) {
        const auto text = random_text();
        const auto a = s->embed(text);
        const auto b = s->embed(text);
        if (!close(a, b)) {
          detail = "embedding of '" + text + "' not reproducible";
          return false;
        }
        if (dim == 0) dim = a.size();
        if (a.empty() || a.size() != dim) {
          detail = "embedding dimension varies";
          return false;
        }
      }
      return true;
    });
    check("errors.embed_empty", [&](std::string& detail) {
      auto s = provider_.open_session();
      return throws_code([&] { s->embed(""); }, ErrorCode::invalid_input, detail);
    });
  }

  void classify_checks() {
    check("classify.threshold_consistency", [&](std::string& detail) {
      auto s = provider_.open_session();
      for (int i = 0; i < 1000; ++i) {
        const auto text = random_text();
        const auto c = s->classify(text);
        if (!(c.score >= 0.0 && c.score <= 1.0) || c.label != (c.score >= d_.classify_threshold)) {
          detail = "'" + text + "' label/score inconsistent";
          return false;
        }
        if (!(s->classify(text) == c)) {
          detail = "classification of '" + text + "' not reproducible";
          return false;
        }
      }
      return true;
    });
  }

  void fold_checks() {
    check("fold.mean_of_residues", [&](std::string& detail) {
      auto s = provider_.open_session();
      for (std::size_t i = 0; i < options_.prefixes; ++i) {
        const auto text = random_text();
        const auto f = s->fold_confidence(text);
        if (f.per_residue.empty()) {
          detail = "no per-residue values";
          return false;
        }
        double sum = 0.0;
        for (double x : f.per_residue) {
          if (!(x >= 0.0 && x <= 100.0)) {
            detail = "per-residue value outside [0, 100]";
            return false;
          }
          sum += x;
        }
        if (std::abs(sum / static_cast<double>(f.per_residue.size()) - f.mean_plddt) > 1e-9) {
          detail = "mean differs from the per-residue average";
          return false;
        }
      }
      return true;
    });
    check("errors.fold_empty", [&](std::string& detail) {
      auto s = provider_.open_session();
      return throws_code([&] { s->fold_confidence(""); }, ErrorCode::invalid_input, detail);
    });
  }

  BackendProvider& provider_;
  ConformanceOptions options_;
  std::mt19937_64 gen_;
  BackendDescriptor d_;
  double tol_ = 0.0;
  std::vector<CheckResult> results_;
};

}  // namespace

CheckResult framing_round_trip(std::uint64_t seed, std::size_t count) {
  CheckResult r{"framing.round_trip", true, {}};
  MessageFactory factory(seed);
  std::vector<protocol::Message> messages;
  std::string stream;
  try {
    for (std::size_t i = 0; i < count; ++i) {
      auto m = factory.message();
      const std::string body = protocol::encode_body(m);
      const auto back = protocol::decode_body(body);
      if (!(back == m) || protocol::encode_body(back) != body) {
        r.ok = false;
        r.detail = "message " + std::to_string(i) + " (" + std::string(m.kind()) + ") did not round-trip";
        return r;
      }
      stream += protocol::encode_frame(m);
      messages.push_back(std::move(m));
    }
    protocol::FrameDecoder decoder;
    std::size_t pos = 0, next = 0;
    while (pos < stream.size()) {
      const std::size_t chunk = std::min(stream.size() - pos, 1 + factory.pick(300));
      decoder.feed(std::string_view(stream).substr(pos, chunk));
      pos += chunk;
      while (auto body = decoder.next_body()) {
        if (next >= messages.size() || !(protocol::decode_body(*body) == messages[next])) {
          r.ok = false;
          r.detail = "frame " + std::to_string(next) + " mismatched after chunked decoding";
          return r;
        }
        ++next;
      }
    }
    if (next != messages.size() || decoder.buffered() != 0) {
      r.ok = false;
      r.detail = "decoded " + std::to_string(next) + " of " + std::to_string(messages.size()) + " frames";
    }
  } catch (const std::exception& e) {
    r.ok = false;
    r.detail = std::string("exception: ") + e.what();
  }
  if (r.ok) r.detail = std::to_string(count) + " messages";
  return r;
}

std::vector<CheckResult> run_conformance(BackendProvider& provider, const ConformanceOptions& options) {
  return Suite(provider, options).run();
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.ok; });
}

std::string describe_failures(const std::vector<CheckResult>& results) {
  std::ostringstream out;
  for (const auto& r : results) {
    if (!r.ok) out << r.name << ": " << r.detail << "\n";
  }
  return out.str();
}

}  // namespace logitdiff::testing
