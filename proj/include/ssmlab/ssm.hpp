#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ssmlab/ring.hpp"
#include "ssmlab/token.hpp"

namespace ssmlab {

// Per-step rule inputs. `length` is the stream length when the run knows
// it up front; chain-of-thought runs leave it unset because the stream is
// extended while it is being processed.
struct StepContext {
  int layer = 1;            // 1-based
  uint64_t time = 1;        // 1-based
  std::optional<uint64_t> length;
};

struct MachineShape {
  int layers;
  int dim;
  Precision prec;
  int token_width;
};

// ---------------------------------------------------------------------------
// Declarative rule families. These cover the named constructions and are
// serializable for golden-file regression; anything beyond them uses the
// programmatic family below.

// Marks a rule piece that is decoded from the incoming token's payload:
// the transition reads a dim x dim matrix (row-major), the injection the
// offset vector that follows it.
struct TokenAffineTag {
  friend bool operator==(TokenAffineTag, TokenAffineTag) { return true; }
};

using TransitionValue = std::variant<RingMatrix, TokenAffineTag>;

// u = B * payload for a matrix case, u = value for a vector case.
using InjectValue = std::variant<RingVector, RingMatrix, TokenAffineTag>;

template <class V>
struct IntervalCase {
  uint64_t from = 1;
  std::optional<uint64_t> to;  // unset = unbounded
  V value;

  bool contains(uint64_t t) const { return t >= from && (!to || t <= *to); }
};

// First matching case wins; the fallback applies otherwise. A spec with no
// cases is the constant family.
struct TransitionSpec {
  TransitionValue fallback;
  std::vector<IntervalCase<TransitionValue>> cases;
};

struct InjectSpec {
  InjectValue fallback;
  std::vector<IntervalCase<InjectValue>> cases;
};

// Finite lookup on payload coordinate 0.
struct TableTransitionSpec {
  std::map<uint64_t, RingMatrix> table;
  RingMatrix fallback;
};

struct TableInjectSpec {
  std::map<uint64_t, RingVector> table;
  RingVector fallback;
};

struct PassthroughReadout {};
struct StateReadout {};        // data token, payload = state zero-padded to token width
struct StateOnReadReadout {};  // state on a read marker, passthrough otherwise

// Block gate: outside [from, to] pass the input through; inside, emit the
// input iff state coordinate 0 equals the within-block index t - from + 1,
// else a zero data token.
struct MatchGateReadout {
  uint64_t from = 1;
  uint64_t to = 1;
};

using DeclTransition = std::variant<TransitionSpec, TableTransitionSpec>;
using DeclInject = std::variant<InjectSpec, TableInjectSpec>;
using DeclReadout =
    std::variant<PassthroughReadout, StateReadout, StateOnReadReadout, MatchGateReadout>;

using TransitionFn = std::function<RingMatrix(const StepContext&, const Token&)>;
using InjectFn = std::function<RingVector(const StepContext&, const Token&)>;
using ReadoutFn = std::function<Token(const StepContext&, const RingVector&, const Token&)>;

// One layer's rules: transition matrix A, injected vector u, and readout.
// The step is h' = A h + u, y = readout(h', input).
class LayerRule {
 public:
  LayerRule(DeclTransition t, DeclInject i, DeclReadout r);
  static LayerRule programmatic(TransitionFn t, InjectFn i, ReadoutFn r);

  bool declarative() const { return decl_.has_value(); }
  const DeclTransition& decl_transition() const;
  const DeclInject& decl_inject() const;
  const DeclReadout& decl_readout() const;

  RingMatrix transition(const StepContext& ctx, const Token& input,
                        const MachineShape& shape) const;
  RingVector inject(const StepContext& ctx, const Token& input, const MachineShape& shape) const;
  Token readout(const StepContext& ctx, const RingVector& state, const Token& input,
                const MachineShape& shape) const;

 private:
  LayerRule() = default;
  struct Decl {
    DeclTransition transition;
    DeclInject inject;
    DeclReadout readout;
  };
  std::optional<Decl> decl_;
  TransitionFn transition_fn_;
  InjectFn inject_fn_;
  ReadoutFn readout_fn_;
};

// ---------------------------------------------------------------------------
// Embedding of raw stream symbols into tokens.

// Copies raw values into the leading payload coordinates, zero-pads the
// rest, and keeps the kind. Values must fit the machine precision.
struct WidenEmbed {};

// Universal-machine stream shape: token 1 is data with `dim` values, token
// 2 is data with dim^2 + dim values, token 3 is a read marker, nothing
// follows. Violations raise StreamError.
struct AffineStreamEmbed {};

// Exogenous symbols become (x, 0^dim, 1); thought tokens must already be
// full-width and pass through unchanged.
struct BiasEmbed {
  int exo_width = 1;
};

using DeclEmbed = std::variant<WidenEmbed, AffineStreamEmbed, BiasEmbed>;
using EmbedFn = std::function<Token(const RawToken&, uint64_t)>;

class Embedder {
 public:
  Embedder(DeclEmbed decl);  // NOLINT: implicit from family structs is the point
  static Embedder programmatic(EmbedFn fn);

  bool declarative() const { return decl_.has_value(); }
  const DeclEmbed& decl() const;
  Token embed(const RawToken& raw, uint64_t t, const MachineShape& shape) const;

 private:
  Embedder() = default;
  std::optional<DeclEmbed> decl_;
  EmbedFn fn_;
};

// ---------------------------------------------------------------------------

class SSMachine {
 public:
  SSMachine(MachineShape shape, Embedder embed, std::vector<LayerRule> rules,
            std::vector<RingVector> initial_states = {});

  int layers() const { return shape_.layers; }
  int dim() const { return shape_.dim; }
  Precision precision() const { return shape_.prec; }
  int token_width() const { return shape_.token_width; }
  const MachineShape& shape() const { return shape_; }
  const LayerRule& rule(int layer) const { return rules_[size_t(layer - 1)]; }
  const std::vector<LayerRule>& rules() const { return rules_; }
  const Embedder& embedder() const { return embed_; }
  const RingVector& initial_state(int layer) const { return init_[size_t(layer - 1)]; }
  std::vector<RingVector> initial_states() const { return init_; }

  Token embed(const RawToken& raw, uint64_t t) const { return embed_.embed(raw, t, shape_); }

  // Set for machines that only accept streams of one exact length.
  std::optional<uint64_t> expected_length;

 private:
  MachineShape shape_;
  Embedder embed_;
  std::vector<LayerRule> rules_;
  std::vector<RingVector> init_;
};

struct StepResult {
  std::vector<RingVector> states;  // h_{l,t} for each layer
  std::vector<Token> outputs;      // y_{l,t} for each layer
};

// One synchronous update of every layer on an already-embedded token.
StepResult ssm_step(const SSMachine& machine, const std::vector<RingVector>& states,
                    const Token& token, uint64_t t,
                    std::optional<uint64_t> length = std::nullopt);

struct RunTrace {
  uint64_t length = 0;
  // states[l][t] = h_{l+1,t} with t = 0 the initial state.
  std::vector<std::vector<RingVector>> states;
  // outputs[l][t-1] = y_{l+1,t}; embedded[t-1] = y_{0,t}.
  std::vector<std::vector<Token>> outputs;
  std::vector<Token> embedded;
  std::optional<Token> final_output;  // y_{L,n}; unset for an empty stream

  const RingVector& state(int layer, uint64_t t) const {
    return states[size_t(layer - 1)][size_t(t)];
  }
  const Token& output(int layer, uint64_t t) const {
    return outputs[size_t(layer - 1)][size_t(t - 1)];
  }
};

// Full-trace run. The stream length is known here and exposed to rules.
RunTrace ssm_run(const SSMachine& machine, std::span<const RawToken> stream);

// Streaming mode: final output only, O(L d) live state, no trace.
Token ssm_output(const SSMachine& machine, std::span<const RawToken> stream);

// Affine summary of layer `layer` over times [from, to]: the map
// h_{layer,from-1} |-> h_{layer,to}. layer_inputs[k] must be y_{layer-1,from+k}.
// An empty interval (to < from) yields the identity.
AffineMap block_summary(const SSMachine& machine, int layer, uint64_t from, uint64_t to,
                        std::span<const Token> layer_inputs,
                        std::optional<uint64_t> length = std::nullopt);

// Re-checks the recurrence h_{l,t} = A h_{l,t-1} + u and every readout in
// a recorded trace directly against the rules, independently of the
// stepping loop. Returns human-readable descriptions of any mismatches.
std::vector<std::string> check_trace_recurrence(const SSMachine& machine, const RunTrace& trace);

// Row-per-(layer, t) CSV: layer,time,state,out_kind,out with space-joined
// vector entries.
std::string trace_to_csv(const RunTrace& trace);

}  // namespace ssmlab
