#include "ssmlab/protocol.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ssmlab/constructions.hpp"
#include "ssmlab/errors.hpp"

namespace ssmlab {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<Token> embed_stream(const SSMachine& machine, const TokenStream& stream) {
  const std::vector<RawToken> raw = stream.raw();
  std::vector<Token> out;
  out.reserve(raw.size());
  for (uint64_t t = 1; t <= raw.size(); ++t)
    out.push_back(machine.embed(raw[static_cast<size_t>(t - 1)], t));
  return out;
}

// One player's view: its interval's current layer outputs, updated round
// by round from the recovered incoming state.
struct PlayerSlice {
  Interval interval;
  std::vector<Token> ys;
};

std::vector<PlayerSlice> make_slices(const std::vector<Interval>& intervals,
                                     const std::vector<Token>& embedded) {
  std::vector<PlayerSlice> slices;
  slices.reserve(intervals.size());
  for (const Interval& iv : intervals) {
    PlayerSlice s{iv, {}};
    s.ys.assign(embedded.begin() + long(iv.from - 1), embedded.begin() + long(iv.to));
    slices.push_back(std::move(s));
  }
  return slices;
}

// Advances one player's slice through layer `round`, starting from the
// recovered incoming state; returns the state after the last position.
RingVector advance_layer(const SSMachine& machine, PlayerSlice& s, int round, RingVector h,
                         uint64_t n) {
  const LayerRule& rule = machine.rule(round);
  for (uint64_t t = s.interval.from; t <= s.interval.to; ++t) {
    const StepContext ctx{round, t, n};
    Token& y = s.ys[static_cast<size_t>(t - s.interval.from)];
    const RingMatrix A = rule.transition(ctx, y, machine.shape());
    const RingVector u = rule.inject(ctx, y, machine.shape());
    h = A * h + u;
    y = rule.readout(ctx, h, y, machine.shape());
  }
  return h;
}

}  // namespace

std::vector<Interval> partition_stream(const TokenStream& stream, int K) {
  if (K < 1) throw MismatchError("partition_stream: K must be positive");
  if (int(stream.blocks.size()) != K)
    throw MismatchError("partition_stream: stream has " + std::to_string(stream.blocks.size()) +
                        " blocks, expected " + std::to_string(K));
  std::vector<Interval> intervals;
  intervals.reserve(static_cast<size_t>(K));
  for (int i = 1; i <= K; ++i) {
    const Block& b = stream.blocks[static_cast<size_t>(i - 1)];
    const uint64_t from = i == 1 ? 1 : b.from;
    intervals.push_back({from, b.to});
  }
  uint64_t expect = 1;
  for (const Interval& iv : intervals) {
    if (iv.from != expect || iv.to < iv.from)
      throw MismatchError("partition_stream: intervals are not consecutive from 1");
    expect = iv.to + 1;
  }
  if (expect != stream.length() + 1)
    throw MismatchError("partition_stream: intervals do not cover the stream");
  return intervals;
}

const Message* ForwardTranscript::find_message(int round, int sender) const {
  for (const Message& m : messages)
    if (m.round == round && m.sender == sender) return &m;
  return nullptr;
}

ForwardTranscript compile_ssm_forward_protocol(const SSMachine& machine,
                                               const CompositionInstance& inst) {
  inst.validate();
  ForwardTranscript t;
  t.machine = std::make_shared<SSMachine>(machine);
  t.stream = encode_row_major(inst);
  t.intervals = partition_stream(t.stream, inst.K);
  t.players = inst.K;
  t.rounds = machine.layers();
  const uint64_t n = t.stream.length();
  const int K = t.players;

  const std::vector<Token> embedded = embed_stream(machine, t.stream);
  std::vector<PlayerSlice> slices = make_slices(t.intervals, embedded);
  t.final_states.assign(static_cast<size_t>(t.rounds), RingVector::zero(machine.dim(), machine.precision()));

  for (int round = 1; round <= t.rounds; ++round) {
    // Summaries use only rounds < `round`: each slice still holds the
    // previous layer's outputs when they are computed.
    std::vector<AffineMap> summaries;
    summaries.reserve(static_cast<size_t>(K));
    for (int i = 1; i <= K; ++i)
      summaries.push_back(block_summary(machine, round, slices[static_cast<size_t>(i - 1)].interval.from,
                                        slices[static_cast<size_t>(i - 1)].interval.to,
                                        slices[static_cast<size_t>(i - 1)].ys, n));
    for (int i = 1; i < K; ++i) {
      Message msg{round, i, serialize_affine(summaries[static_cast<size_t>(i - 1)])};
      t.max_message_bits = std::max(t.max_message_bits, msg.bit_count());
      t.total_bits += msg.bit_count();
      t.messages.push_back(std::move(msg));
    }
    for (int i = 1; i <= K; ++i) {
      AffineMap prefix = identity_map(machine.dim(), machine.precision());
      for (int j = 1; j < i; ++j) prefix = compose(summaries[static_cast<size_t>(j - 1)], prefix);
      RingVector h = apply(prefix, machine.initial_state(round));
      if (i >= 2) t.snapshots.push_back({round, i, h});
      h = advance_layer(machine, slices[static_cast<size_t>(i - 1)], round, h, n);
      if (i == K) t.final_states[static_cast<size_t>(round - 1)] = h;
    }
  }
  t.final_output = slices[static_cast<size_t>(K - 1)].ys.back();
  return t;
}

CausalityReport validate_causality(const ForwardTranscript& t) {
  CausalityReport report;
  if (!t.machine) {
    report.violations.push_back("transcript carries no machine to replay");
    return report;
  }
  const SSMachine& machine = *t.machine;
  const uint64_t n = t.stream.length();
  const std::vector<Token> embedded = embed_stream(machine, t.stream);
  std::vector<PlayerSlice> slices = make_slices(t.intervals, embedded);

  for (int round = 1; round <= t.rounds; ++round) {
    // Expected messages from each sender's own slice, which depends only
    // on transcript rounds < `round` consumed below.
    for (int i = 1; i < t.players; ++i) {
      const PlayerSlice& s = slices[static_cast<size_t>(i - 1)];
      const BitString expect =
          serialize_affine(block_summary(machine, round, s.interval.from, s.interval.to, s.ys, n));
      const Message* got = t.find_message(round, i);
      if (!got) {
        report.violations.push_back("missing message: round " + std::to_string(round) +
                                    ", sender " + std::to_string(i));
        continue;
      }
      if (got->payload != expect)
        report.violations.push_back("message (round " + std::to_string(round) + ", sender " +
                                    std::to_string(i) +
                                    ") is not determined by the sender's input and earlier rounds");
    }
    for (int i = 1; i <= t.players; ++i) {
      AffineMap prefix = identity_map(machine.dim(), machine.precision());
      for (int j = 1; j < i; ++j) {
        const Message* m = t.find_message(round, j);
        if (!m) continue;  // reported above
        prefix = compose(deserialize_affine(m->payload, 0, machine.dim(), machine.precision()),
                         prefix);
      }
      RingVector h = apply(prefix, machine.initial_state(round));
      advance_layer(machine, slices[static_cast<size_t>(i - 1)], round, h, n);
    }
  }
  const Token replayed = slices[static_cast<size_t>(t.players - 1)].ys.back();
  if (replayed != t.final_output)
    report.violations.push_back("final output is not determined by player K's input and messages");
  return report;
}

// ---------------------------------------------------------------------------
// Two-party serialization

std::string to_string(Speaker s) { return s == Speaker::Alice ? "alice" : "bob"; }

namespace {

Speaker speaker_of(int q) { return q % 2 == 1 ? Speaker::Alice : Speaker::Bob; }

char group_of_sender(int sender) { return sender % 2 == 1 ? 'a' : 'b'; }

// Component rounds of the q-th scheduled message: a_1 alone first, then
// pairs (b_{2r-1}, b_{2r}) and (a_{2r}, a_{2r+1}).
std::vector<std::pair<char, int>> schedule_slots(int q) {
  if (q == 1) return {{'a', 1}};
  const char g = q % 2 == 0 ? 'b' : 'a';
  return {{g, q - 1}, {g, q}};
}

}  // namespace

TwoPartyTranscript serialize_two_party(const ForwardTranscript& t) {
  const int K = t.players;
  const int L = t.rounds;
  if (((K - L) % 2 + 2) % 2 != 1)
    throw MismatchError("serialize_two_party: needs K - L odd so the answering side holds player " +
                        std::to_string(K));
  TwoPartyTranscript out;
  out.players = K;
  out.rounds = L;
  out.source = std::make_shared<ForwardTranscript>(t);
  out.parity_bit = int(t.final_output.payload[0] & 1);

  for (int q = 1; q <= L + 1; ++q) {
    TwoPartyMessage msg;
    msg.speaker = speaker_of(q);
    for (const auto& [g, round] : schedule_slots(q)) {
      if (round > L) continue;  // absent component, deleted
      for (const Message& m : t.messages)
        if (m.round == round && group_of_sender(m.sender) == g) {
          msg.components.push_back({g, round, m.sender, m.bit_count()});
          msg.payload.append(m.payload);
        }
    }
    if (q == L + 1) {
      msg.payload.append_bit(out.parity_bit != 0);
      msg.parity_appended = true;
    }
    out.total_bits += msg.payload.size();
    out.messages.push_back(std::move(msg));
  }
  out.substantive_count = int(out.messages.size());
  while (int(out.messages.size()) < K - 1) {
    TwoPartyMessage pad;
    pad.speaker = speaker_of(int(out.messages.size()) + 1);
    pad.padding = true;
    out.messages.push_back(std::move(pad));
  }
  return out;
}

CausalityReport validate_causality(const TwoPartyTranscript& t) {
  CausalityReport report;
  if (!t.source) {
    report.violations.push_back("two-party transcript carries no source transcript");
    return report;
  }
  const ForwardTranscript& src = *t.source;
  if (t.substantive_count > t.rounds + 1)
    report.violations.push_back("more than L+1 substantive messages");
  for (size_t idx = 0; idx < t.messages.size(); ++idx) {
    const TwoPartyMessage& msg = t.messages[idx];
    const int q = int(idx) + 1;
    if (msg.speaker != speaker_of(q))
      report.violations.push_back("message " + std::to_string(q) +
                                  ": speakers do not alternate starting with alice");
    if (msg.padding) {
      if (q <= t.substantive_count)
        report.violations.push_back("message " + std::to_string(q) +
                                    ": padding before the schedule's end");
      if (!msg.payload.empty() || !msg.components.empty())
        report.violations.push_back("message " + std::to_string(q) + ": padding carries bits");
      continue;
    }
    // Rebuild the expected payload from the source transcript.
    BitString expect;
    std::vector<TwoPartyComponent> expect_parts;
    for (const auto& [g, round] : schedule_slots(q)) {
      if (round > t.rounds) continue;
      for (const Message& m : src.messages)
        if (m.round == round && group_of_sender(m.sender) == g) {
          expect_parts.push_back({g, round, m.sender, m.bit_count()});
          expect.append(m.payload);
        }
    }
    const bool last = q == t.substantive_count;
    if (last) expect.append_bit((src.final_output.payload[0] & 1) != 0);
    if (msg.parity_appended != last)
      report.violations.push_back("message " + std::to_string(q) +
                                  ": parity bit on the wrong message");
    if (msg.payload != expect)
      report.violations.push_back("message " + std::to_string(q) +
                                  ": payload differs from the scheduled source bits");
    if (msg.components.size() != expect_parts.size())
      report.violations.push_back("message " + std::to_string(q) + ": component list mismatch");
    else
      for (size_t c = 0; c < expect_parts.size(); ++c)
        if (msg.components[c].group != expect_parts[c].group ||
            msg.components[c].round != expect_parts[c].round ||
            msg.components[c].sender != expect_parts[c].sender)
          report.violations.push_back("message " + std::to_string(q) + ", component " +
                                      std::to_string(c + 1) + ": schedule mismatch");
  }
  if (t.parity_bit != int(src.final_output.payload[0] & 1))
    report.violations.push_back("parity bit does not match the source output");
  return report;
}

// ---------------------------------------------------------------------------
// One-round oracle

OneRoundCC min_one_round_cc(int N, uint64_t k, uint64_t budget) {
  if (N < 1) throw MismatchError("min_one_round_cc: N must be positive");
  uint64_t count = 1;
  for (int i = 0; i < N; ++i) {
    if (count > budget / uint64_t(N))
      throw BudgetError("min_one_round_cc: N^N exceeds the enumeration budget at N=" +
                        std::to_string(N));
    count *= uint64_t(N);
  }

  std::vector<std::vector<uint64_t>> tables(count);
  for (uint64_t idx = 0; idx < count; ++idx) {
    std::vector<uint64_t> f(static_cast<size_t>(N));
    uint64_t rest = idx;
    for (int j = 0; j < N; ++j) {
      f[static_cast<size_t>(j)] = rest % uint64_t(N) + 1;
      rest /= uint64_t(N);
    }
    tables[idx] = std::move(f);
  }

  std::set<std::vector<uint8_t>> classes;
  for (uint64_t ia = 0; ia < count; ++ia) {
    std::vector<uint8_t> answers(static_cast<size_t>(count));
    for (uint64_t ib = 0; ib < count; ++ib)
      answers[static_cast<size_t>(ib)] = uint8_t(pc_eval(N, tables[ia], tables[ib], k).parity);
    classes.insert(std::move(answers));
  }

  OneRoundCC out;
  out.N = N;
  out.k = k;
  out.functions = count;
  out.classes = classes.size();
  out.bits = ceil_log2(classes.size());
  return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::vector<uint64_t> payload_values(const Token& tok) { return tok.payload.values(); }

}  // namespace

std::string transcript_to_json(const ForwardTranscript& t) {
  ordered_json doc;
  doc["players"] = t.players;
  doc["rounds"] = t.rounds;
  if (t.machine) {
    doc["machine"] = {{"layers", t.machine->layers()},
                      {"dim", t.machine->dim()},
                      {"precision", t.machine->precision().bits()},
                      {"token_width", t.machine->token_width()}};
    doc["message_bits"] = affine_bits(t.machine->dim(), t.machine->precision());
  }
  doc["max_message_bits"] = t.max_message_bits;
  doc["total_bits"] = t.total_bits;
  doc["intervals"] = ordered_json::array();
  for (const Interval& iv : t.intervals) doc["intervals"].push_back({iv.from, iv.to});
  doc["messages"] = ordered_json::array();
  for (const Message& m : t.messages) {
    ordered_json recipients = ordered_json::array();
    for (int j = m.sender + 1; j <= t.players; ++j) recipients.push_back(j);
    doc["messages"].push_back({{"round", m.round},
                               {"sender", m.sender},
                               {"recipients", recipients},
                               {"bits", m.bit_count()},
                               {"payload_hex", m.payload.to_hex()}});
  }
  doc["output_kind"] = to_string(t.final_output.kind);
  doc["output"] = payload_values(t.final_output);
  return doc.dump(2) + "\n";
}

std::string transcript_to_json(const TwoPartyTranscript& t) {
  ordered_json doc;
  doc["players"] = t.players;
  doc["rounds"] = t.rounds;
  doc["substantive_messages"] = t.substantive_count;
  doc["parity_bit"] = t.parity_bit;
  doc["total_bits"] = t.total_bits;
  doc["messages"] = ordered_json::array();
  for (const TwoPartyMessage& m : t.messages) {
    ordered_json parts = ordered_json::array();
    for (const TwoPartyComponent& c : m.components)
      parts.push_back({{"group", std::string(1, c.group)},
                       {"round", c.round},
                       {"sender", c.sender},
                       {"bits", c.bits}});
    doc["messages"].push_back({{"speaker", to_string(m.speaker)},
                               {"padding", m.padding},
                               {"parity_appended", m.parity_appended},
                               {"bits", m.payload.size()},
                               {"components", parts},
                               {"payload_hex", m.payload.to_hex()}});
  }
  return doc.dump(2) + "\n";
}

std::string protocol_csv_header() {
  return "N,K,L,d,p,max_message_bits,total_bits,output,oracle_output,match\n";
}

std::string protocol_csv_row(int N, int K, const ForwardTranscript& t, const Token& oracle) {
  std::ostringstream row;
  const auto join = [](const std::vector<uint64_t>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) s.push_back(';');
      s += std::to_string(v[i]);
    }
    return s;
  };
  row << N << ',' << K << ',' << t.rounds << ',' << (t.machine ? t.machine->dim() : 0) << ','
      << (t.machine ? t.machine->precision().bits() : 0) << ',' << t.max_message_bits << ','
      << t.total_bits << ',' << join(payload_values(t.final_output)) << ','
      << join(payload_values(oracle)) << ',' << (t.final_output == oracle ? 1 : 0) << '\n';
  return row.str();
}

}  // namespace ssmlab
