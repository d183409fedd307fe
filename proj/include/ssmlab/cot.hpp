#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssmlab/constructions.hpp"
#include "ssmlab/protocol.hpp"
#include "ssmlab/ssm.hpp"

namespace ssmlab {

enum class CotMode { Online, Offline };

// What a thought policy may inspect: the machine's configuration after
// the step that just finished. exo_index is 0 when the runner does not
// know it (streaming replay); policies that are converted by
// ssm_to_streaming must decide from the configuration alone.
struct CotView {
  uint64_t exo_index;
  uint64_t time;
  const std::vector<RingVector>* states;
  const Token* last_output;
};

struct ThoughtPolicy {
  uint64_t budget = 0;  // max thoughts per exogenous position
  std::function<std::vector<RawToken>(const CotView&)> decide;  // unset = never any thoughts
};

ThoughtPolicy null_policy();

struct CoTMachine {
  SSMachine base;
  ThoughtPolicy policy;
  CotMode mode = CotMode::Online;
};

// The step counter is sized for `horizon` processed steps (exogenous plus
// thought tokens); unset means 2 * n_max.
struct CoTOptions {
  std::optional<uint64_t> horizon;
  uint64_t n_max = 32;

  uint64_t horizon_or_default() const { return horizon ? *horizon : 2 * n_max; }
};

struct MemoryAccount {
  int state_bits = 0;    // L * d * p
  int counter_bits = 0;  // ceil_log2(horizon + 1)
  int total = 0;
};

MemoryAccount memory_account(const SSMachine& base, const CoTOptions& opts = {});

struct CoTRunRecord {
  std::vector<RawToken> processed;       // exogenous and thought tokens in order
  std::vector<uint64_t> thought_counts;  // k_i per exogenous position
  Token final_output = Token(TokenKind::Data, RingVector(Precision(1), {0}));
  std::vector<RingVector> final_states;
  uint64_t steps = 0;  // processed tokens
  MemoryAccount account;
};

// Feeds the stream, querying the policy after each exogenous token
// (online) or only after the last one (offline) until it returns an
// empty sequence. Rules run with the stream length unknown.
CoTRunRecord run_cot(const CoTMachine& machine, std::span<const RawToken> stream,
                     const CoTOptions& opts = {});

std::string cot_record_to_json(const CoTRunRecord& rec);

// ---------------------------------------------------------------------------
// CoT <-> streaming

struct StreamingWithAccount {
  StreamingAlgorithm alg;
  MemoryAccount account;
};

// Packs the layer states plus a processed-step counter into one memory
// word; each streaming step replays the exogenous token and, online, the
// policy loop. Requires the final-layer readout to be the state readout
// so the output is a function of memory alone; the returned output
// function yields the final layer's d state values (an offline policy
// tail is simulated inside it).
StreamingWithAccount ssm_to_streaming(const CoTMachine& machine, const CoTOptions& opts = {});

// Single-layer online-CoT machine simulating a streaming algorithm with
// one thought per exogenous token: odd steps hold the state and emit the
// thought (x, h, 1); even steps consume the echoed thought and load
// Enc(F(Dec(h), x)) gated by the thought's last coordinate. The readout
// at even steps places G's values in the leading payload coordinates.
// Requires d * p >= alg.state_bits.
CoTMachine streaming_to_cot_ssm(const StreamingAlgorithm& alg, int d, int p, int m_x = 1);

// ---------------------------------------------------------------------------
// Offline CoT over the forward protocol

struct OfflineCompileResult {
  ForwardTranscript transcript;  // bit-identical to the null-policy transcript
  Token output;                  // after player K's local offline continuation
};

OfflineCompileResult offline_protocol_compile(const CoTMachine& machine,
                                              const CompositionInstance& inst,
                                              const CoTOptions& opts = {});

// ---------------------------------------------------------------------------
// Width/precision trade

struct RoundtripResult {
  CoTMachine machine;
  MemoryAccount account;
  int width = 1;
  int precision = 0;  // ceil(account.total / width)
};

// ssm_to_streaming followed by streaming_to_cot_ssm at the target width,
// with precision ceil(total memory bits / width). Agrees with the source
// machine on every stream, at one extra internal step per exogenous token.
RoundtripResult width_precision_roundtrip(const CoTMachine& machine, const CoTOptions& opts = {},
                                          int target_width = 1, int m_x = 1);

// Appends `extra` layers that hold a zero state and pass tokens through.
SSMachine pad_layers(const SSMachine& base, int extra);

}  // namespace ssmlab
