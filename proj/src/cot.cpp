#include "ssmlab/cot.hpp"

#include <memory>
#include <utility>

#include "json.hpp"

#include "ssmlab/errors.hpp"

namespace ssmlab {
namespace {

// Shared stepping core for every CoT runner: advances the base machine by
// one token and keeps the running configuration.
struct CotCursor {
  const SSMachine* base;
  std::vector<RingVector> states;
  Token last;
  uint64_t time = 0;

  explicit CotCursor(const SSMachine& m)
      : base(&m),
        states(m.initial_states()),
        last(Token::zero(TokenKind::Data, m.token_width(), m.precision())) {}

  void feed(const RawToken& raw) {
    ++time;
    const Token tok = base->embed(raw, time);
    StepResult step = ssm_step(*base, states, tok, time, std::nullopt);
    states = std::move(step.states);
    last = step.outputs.back();
  }
};

// Runs the policy loop at one exogenous position. Returns the number of
// thoughts taken; `sink` (optional) collects the processed raw tokens.
uint64_t policy_loop(const CoTMachine& machine, CotCursor& cur, uint64_t exo_index,
                     std::vector<RawToken>* sink) {
  if (!machine.policy.decide) return 0;
  uint64_t count = 0;
  while (true) {
    const CotView view{exo_index, cur.time, &cur.states, &cur.last};
    const std::vector<RawToken> seq = machine.policy.decide(view);
    if (seq.empty()) break;
    for (const RawToken& raw : seq) {
      if (raw.kind != TokenKind::Thought)
        throw MismatchError("policy emitted a non-thought token at position " +
                            std::to_string(exo_index));
      if (++count > machine.policy.budget)
        throw BudgetError("thought budget " + std::to_string(machine.policy.budget) +
                          " exceeded at position " + std::to_string(exo_index));
      cur.feed(raw);
      if (sink) sink->push_back(raw);
    }
  }
  return count;
}

}  // namespace

ThoughtPolicy null_policy() { return ThoughtPolicy{}; }

MemoryAccount memory_account(const SSMachine& base, const CoTOptions& opts) {
  MemoryAccount acc;
  acc.state_bits = base.layers() * base.dim() * base.precision().bits();
  acc.counter_bits = ceil_log2(opts.horizon_or_default() + 1);
  acc.total = acc.state_bits + acc.counter_bits;
  return acc;
}

CoTRunRecord run_cot(const CoTMachine& machine, std::span<const RawToken> stream,
                     const CoTOptions& opts) {
  if (stream.empty()) throw StreamError("run_cot: stream must be nonempty");
  CotCursor cur(machine.base);
  CoTRunRecord rec;
  rec.thought_counts.assign(stream.size(), 0);
  for (uint64_t i = 1; i <= stream.size(); ++i) {
    cur.feed(stream[i - 1]);
    rec.processed.push_back(stream[i - 1]);
    const bool ask = machine.mode == CotMode::Online || i == stream.size();
    if (ask) rec.thought_counts[i - 1] = policy_loop(machine, cur, i, &rec.processed);
  }
  rec.final_output = cur.last;
  rec.final_states = cur.states;
  rec.steps = cur.time;
  rec.account = memory_account(machine.base, opts);
  return rec;
}

std::string cot_record_to_json(const CoTRunRecord& rec) {
  nlohmann::ordered_json j;
  j["steps"] = rec.steps;
  j["thought_counts"] = rec.thought_counts;
  nlohmann::ordered_json toks = nlohmann::ordered_json::array();
  for (const RawToken& raw : rec.processed) {
    nlohmann::ordered_json t;
    t["kind"] = to_string(raw.kind);
    t["values"] = raw.values;
    toks.push_back(std::move(t));
  }
  j["processed"] = std::move(toks);
  j["output_kind"] = to_string(rec.final_output.kind);
  j["output"] = rec.final_output.payload.values();
  j["memory"] = {{"state_bits", rec.account.state_bits},
                 {"counter_bits", rec.account.counter_bits},
                 {"total", rec.account.total}};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

StreamingWithAccount ssm_to_streaming(const CoTMachine& machine, const CoTOptions& opts) {
  const SSMachine& base = machine.base;
  const LayerRule& final_rule = base.rule(base.layers());
  if (!final_rule.declarative() ||
      !std::holds_alternative<StateReadout>(final_rule.decl_readout()))
    throw MismatchError(
        "ssm_to_streaming: the final-layer readout must be the state readout "
        "so the answer is a function of memory alone");
  const MemoryAccount account = memory_account(base, opts);
  if (account.total > 64)
    throw BudgetError("ssm_to_streaming: memory needs " + std::to_string(account.total) +
                      " bits, word holds 64");

  const uint64_t horizon = opts.horizon_or_default();
  const int layers = base.layers();
  const int dim = base.dim();
  const int per_layer = dim * base.precision().bits();
  const int counter_bits = account.counter_bits;
  const Precision prec = base.precision();
  auto shared = std::make_shared<const CoTMachine>(machine);

  // account.total <= 64 keeps every shift below the word size except when a
  // single field fills the whole word; shl/shr/low handle that edge.
  auto shl = [](uint64_t v, int s) { return s >= 64 ? uint64_t{0} : v << s; };
  auto shr = [](uint64_t v, int s) { return s >= 64 ? uint64_t{0} : v >> s; };
  auto low = [](uint64_t v, int s) { return s >= 64 ? v : (v & ((uint64_t{1} << s) - 1)); };
  auto pack = [layers, per_layer, counter_bits, shl](const std::vector<RingVector>& states,
                                                     uint64_t steps) {
    uint64_t mem = 0;
    for (int l = 0; l < layers; ++l) mem = shl(mem, per_layer) | pack_state(states[l]);
    return shl(mem, counter_bits) | steps;
  };
  auto unpack = [layers, per_layer, counter_bits, dim, prec, shr, low](uint64_t mem,
                                                                       CotCursor& cur) {
    cur.time = low(mem, counter_bits);
    mem = shr(mem, counter_bits);
    for (int l = layers - 1; l >= 0; --l) {
      cur.states[static_cast<size_t>(l)] = unpack_state(low(mem, per_layer), dim, prec);
      mem = shr(mem, per_layer);
    }
  };

  StreamingAlgorithm alg;
  alg.state_bits = account.total;
  alg.memory_desc = std::to_string(layers) + " layer state(s) of " + std::to_string(per_layer) +
                    " bits plus a " + std::to_string(counter_bits) + "-bit step counter";
  alg.initial = pack(base.initial_states(), 0);
  alg.step = [shared, pack, unpack, horizon](uint64_t mem, const RawToken& raw) {
    CotCursor cur(shared->base);
    unpack(mem, cur);
    cur.feed(raw);
    if (shared->mode == CotMode::Online) policy_loop(*shared, cur, 0, nullptr);
    if (cur.time > horizon)
      throw BudgetError("ssm_to_streaming: step counter exceeds horizon " +
                        std::to_string(horizon));
    return pack(cur.states, cur.time);
  };
  alg.output = [shared, unpack](uint64_t mem) {
    CotCursor cur(shared->base);
    unpack(mem, cur);
    if (shared->mode == CotMode::Offline) policy_loop(*shared, cur, 0, nullptr);
    return cur.states.back().values();
  };
  return StreamingWithAccount{std::move(alg), account};
}

CoTMachine streaming_to_cot_ssm(const StreamingAlgorithm& alg, int d, int p, int m_x) {
  if (d < 1 || p < 1 || m_x < 1)
    throw MismatchError("streaming_to_cot_ssm: d, p, m_x must be positive");
  if (p > 63) throw MismatchError("streaming_to_cot_ssm: precision must be at most 63");
  if (d * p < alg.state_bits)
    throw MismatchError("streaming_to_cot_ssm: d*p = " + std::to_string(d * p) +
                        " bits cannot hold " + std::to_string(alg.state_bits) +
                        " bits of memory");
  const Precision prec(p);
  const int m = m_x + d + 1;
  auto shared = std::make_shared<const StreamingAlgorithm>(alg);

  // Odd steps hold the state; even steps are overwritten by the inject.
  TransitionFn trans = [d, prec](const StepContext& ctx, const Token&) {
    return ctx.time % 2 == 1 ? RingMatrix::identity(d, prec)
                             : RingMatrix::zero(d, d, prec);
  };
  InjectFn inj = [shared, d, m_x, m, prec](const StepContext& ctx, const Token& tok) {
    if (ctx.time % 2 == 1) return RingVector::zero(d, prec);
    // tok is the echoed thought (x, h, 1); the last coordinate gates the load.
    const RingVector& y = tok.payload;
    std::vector<uint64_t> xs(static_cast<size_t>(m_x));
    for (int i = 0; i < m_x; ++i) xs[static_cast<size_t>(i)] = y[static_cast<size_t>(i)];
    uint64_t mem = 0;
    for (int i = 0; i < d; ++i) mem = (mem << prec.bits()) | y[static_cast<size_t>(m_x + i)];
    const uint64_t gate = y[static_cast<size_t>(m - 1)];
    const uint64_t next = shared->step(mem, RawToken{TokenKind::Data, std::move(xs)});
    RingVector enc = unpack_state(next, d, prec);
    std::vector<uint64_t> vals(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) vals[static_cast<size_t>(i)] = prec.mul(enc[static_cast<size_t>(i)], gate);
    return RingVector(prec, std::move(vals));
  };
  ReadoutFn readout = [shared, d, m_x, m, prec](const StepContext& ctx, const RingVector& h,
                                                const Token& tok) {
    if (ctx.time % 2 == 1) {
      // Thought content for the echo: (x, h, 1).
      std::vector<uint64_t> vals(static_cast<size_t>(m), 0);
      for (int i = 0; i < m_x; ++i) vals[static_cast<size_t>(i)] = tok.payload[static_cast<size_t>(i)];
      for (int i = 0; i < d; ++i) vals[static_cast<size_t>(m_x + i)] = h[static_cast<size_t>(i)];
      vals[static_cast<size_t>(m - 1)] = 1;
      return Token(TokenKind::Thought, RingVector(prec, std::move(vals)));
    }
    const std::vector<uint64_t> out = shared->output(pack_state(h));
    if (out.size() > static_cast<size_t>(m))
      throw MismatchError("streaming_to_cot_ssm: output has " + std::to_string(out.size()) +
                          " values, token width is " + std::to_string(m));
    std::vector<uint64_t> vals(static_cast<size_t>(m), 0);
    for (size_t i = 0; i < out.size(); ++i) {
      if (out[i] > prec.mask())
        throw MismatchError("streaming_to_cot_ssm: output value " + std::to_string(out[i]) +
                            " exceeds precision");
      vals[i] = out[i];
    }
    return Token(TokenKind::Data, RingVector(prec, std::move(vals)));
  };

  MachineShape shape{1, d, prec, m};
  std::vector<LayerRule> rules;
  rules.push_back(LayerRule::programmatic(std::move(trans), std::move(inj), std::move(readout)));
  std::vector<RingVector> init{unpack_state(alg.initial, d, prec)};
  SSMachine base(shape, Embedder(BiasEmbed{m_x}), std::move(rules), std::move(init));

  ThoughtPolicy policy;
  policy.budget = 1;
  policy.decide = [](const CotView& view) -> std::vector<RawToken> {
    if (view.time % 2 == 0) return {};
    return {RawToken{TokenKind::Thought, view.last_output->payload.values()}};
  };
  return CoTMachine{std::move(base), std::move(policy), CotMode::Online};
}

// ---------------------------------------------------------------------------

OfflineCompileResult offline_protocol_compile(const CoTMachine& machine,
                                              const CompositionInstance& inst,
                                              const CoTOptions& opts) {
  (void)opts;
  if (machine.mode != CotMode::Offline)
    throw MismatchError("offline_protocol_compile: machine must be in offline mode");
  ForwardTranscript transcript = compile_ssm_forward_protocol(machine.base, inst);
  // The last player holds the final configuration after the exchange and
  // finishes the thought phase locally; no further bits are sent.
  CotCursor cur(machine.base);
  cur.states = transcript.final_states;
  cur.last = transcript.final_output;
  cur.time = transcript.stream.length();
  policy_loop(machine, cur, transcript.stream.length(), nullptr);
  return OfflineCompileResult{std::move(transcript), cur.last};
}

RoundtripResult width_precision_roundtrip(const CoTMachine& machine, const CoTOptions& opts,
                                          int target_width, int m_x) {
  if (target_width < 1) throw MismatchError("width_precision_roundtrip: width must be positive");
  StreamingWithAccount sw = ssm_to_streaming(machine, opts);
  const int prec = (sw.account.total + target_width - 1) / target_width;
  CoTMachine rebuilt = streaming_to_cot_ssm(sw.alg, target_width, prec, m_x);
  return RoundtripResult{std::move(rebuilt), sw.account, target_width, prec};
}

SSMachine pad_layers(const SSMachine& base, int extra) {
  if (extra < 0) throw MismatchError("pad_layers: extra must be nonnegative");
  MachineShape shape = base.shape();
  shape.layers += extra;
  std::vector<LayerRule> rules = base.rules();
  const RingMatrix zero_a = RingMatrix::zero(base.dim(), base.dim(), base.precision());
  const RingVector zero_u = RingVector::zero(base.dim(), base.precision());
  for (int i = 0; i < extra; ++i)
    rules.emplace_back(DeclTransition{TransitionSpec{zero_a, {}}},
                       DeclInject{InjectSpec{InjectValue{zero_u}, {}}},
                       DeclReadout{PassthroughReadout{}});
  std::vector<RingVector> init = base.initial_states();
  for (int i = 0; i < extra; ++i) init.push_back(zero_u);
  SSMachine out(shape, base.embedder(), std::move(rules), std::move(init));
  out.expected_length = base.expected_length;
  return out;
}

}  // namespace ssmlab
