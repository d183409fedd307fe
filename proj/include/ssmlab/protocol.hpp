#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ssmlab/bits.hpp"
#include "ssmlab/composition.hpp"
#include "ssmlab/ssm.hpp"

namespace ssmlab {

// 1-based inclusive token interval.
struct Interval {
  uint64_t from;
  uint64_t to;

  friend bool operator==(Interval a, Interval b) { return a.from == b.from && a.to == b.to; }
};

// Player intervals: I_1 = [1 : e_1] (the start token plus block 1),
// I_i = [s_i : e_i] for i >= 2. Consecutive and covering [1 : n].
std::vector<Interval> partition_stream(const TokenStream& stream, int K);

// One synchronous-round message. Every message flows from its sender to
// all higher-numbered players; the payload is the canonical serialization
// of the sender's block summary for that round's layer.
struct Message {
  int round;
  int sender;
  BitString payload;

  size_t bit_count() const { return payload.size(); }
};

// h_{round, s_player - 1}, as player `player` recovered it by composing
// the round's prefix summaries.
struct PrefixSnapshot {
  int round;
  int player;
  RingVector state;
};

struct ForwardTranscript {
  std::shared_ptr<const SSMachine> machine;
  TokenStream stream;
  std::vector<Interval> intervals;
  int players = 0;  // K
  int rounds = 0;   // L
  std::vector<Message> messages;          // round-major, sender order inside a round
  std::vector<PrefixSnapshot> snapshots;  // every (round, player >= 2) pair
  std::vector<RingVector> final_states;   // h_{l,n} per layer, from player K's slice
  Token final_output = Token(TokenKind::Data, RingVector(Precision(1), {0}));
  size_t max_message_bits = 0;
  size_t total_bits = 0;

  const Message* find_message(int round, int sender) const;
};

// Executes the layer-per-round forward protocol: in round l every player
// summarizes layer l over its own interval (computable from rounds < l)
// and sends the summary up; composing the received prefix recovers the
// layer's incoming state. After the last round player K holds the final
// output. Every payload is exactly (d^2 + d) * p bits.
ForwardTranscript compile_ssm_forward_protocol(const SSMachine& machine,
                                               const CompositionInstance& inst);

struct CausalityReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

// Recomputes every message from the sender's own tokens plus transcript
// messages of strictly earlier rounds from lower senders, and flags any
// bit difference. Also re-derives the final output the same way.
CausalityReport validate_causality(const ForwardTranscript& t);

// ---------------------------------------------------------------------------
// Two-party serialization: odd players form Alice, even players Bob.
// With a_l / b_l the concatenated round-l messages of each side, the
// schedule is a_1; (b_1, b_2); (a_2, a_3); (b_3, b_4); ... with absent
// rounds deleted, which needs at most L+1 messages. The side holding
// player K speaks last (this is where K - L odd is required) and appends
// the output parity bit.

enum class Speaker { Alice, Bob };

std::string to_string(Speaker s);

// One forward message's slot inside a two-party message.
struct TwoPartyComponent {
  char group;  // 'a' or 'b'
  int round;
  int sender;
  size_t bits;
};

struct TwoPartyMessage {
  Speaker speaker;
  std::vector<TwoPartyComponent> components;
  BitString payload;
  bool padding = false;
  bool parity_appended = false;
};

struct TwoPartyTranscript {
  int players = 0;
  int rounds = 0;
  std::vector<TwoPartyMessage> messages;  // padding included, at the tail
  int substantive_count = 0;              // messages that carry protocol rounds
  int parity_bit = 0;
  size_t total_bits = 0;  // substantive payloads plus the parity bit
  std::shared_ptr<const ForwardTranscript> source;
};

// Requires K - L odd so the last speaker's side contains player K.
// Pads with zero-bit messages to K - 1 total when the schedule is shorter;
// padding keeps the speaker alternation and carries no bits.
TwoPartyTranscript serialize_two_party(const ForwardTranscript& t);

// Checks alternation, the schedule grouping, the component payloads
// against the source transcript, the message-count bound, and the parity
// bit against the source output.
CausalityReport validate_causality(const TwoPartyTranscript& t);

// ---------------------------------------------------------------------------
// Exact one-round communication oracle for pointer chasing: Alice holds
// f_A and sends one message, Bob holds f_B and answers pt_k mod 2.
// Optimal bits = ceil(log2 of the number of answer-vector classes of f_A).

struct OneRoundCC {
  int N = 1;
  uint64_t k = 1;
  uint64_t functions = 0;  // N^N per side
  uint64_t classes = 0;
  int bits = 0;
};

OneRoundCC min_one_round_cc(int N, uint64_t k, uint64_t budget = default_budget());

// ---------------------------------------------------------------------------
// Report formats

std::string transcript_to_json(const ForwardTranscript& t);
std::string transcript_to_json(const TwoPartyTranscript& t);

// Summary CSV: header plus one row per compiled run.
std::string protocol_csv_header();
std::string protocol_csv_row(int N, int K, const ForwardTranscript& t, const Token& oracle);

}  // namespace ssmlab
