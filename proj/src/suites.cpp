#include "ssmlab/suites.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <utility>

#include "ssmlab/algebra_checks.hpp"
#include "ssmlab/constructions.hpp"
#include "ssmlab/errors.hpp"

namespace ssmlab {
namespace {

void add_check(SuiteReport& report, std::string name, bool pass, std::string details) {
  report.checks.push_back(CheckResult{std::move(name), pass, std::move(details)});
}

// fn returns "" on success, a description on failure; thrown library
// errors become failures too.
template <class Fn>
void checked(SuiteReport& report, const std::string& name, Fn&& fn) {
  try {
    std::string details = fn();
    add_check(report, name, details.empty(), std::move(details));
  } catch (const Error& e) {
    add_check(report, name, false, std::string("error: ") + e.what());
  }
}

bool same_token(const Token& a, const Token& b) {
  return a.kind == b.kind && a.payload == b.payload;
}

std::string join_u64(const std::vector<uint64_t>& v) {
  std::ostringstream out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out << ' ';
    out << v[i];
  }
  return out.str();
}

std::vector<uint64_t> leading_values(const Token& token, int count) {
  std::vector<uint64_t> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(token.payload[static_cast<size_t>(i)]);
  return out;
}

RingMatrix random_matrix(Rng& rng, int rows, int cols, Precision p) {
  RingMatrix m = RingMatrix::zero(rows, cols, p);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m.set(r, c, rng.bits(p.bits()));
  return m;
}

RingVector random_vector(Rng& rng, int dim, Precision p) {
  std::vector<uint64_t> vals(static_cast<size_t>(dim));
  for (auto& v : vals) v = rng.bits(p.bits());
  return RingVector(p, std::move(vals));
}

DeclTransition random_transition(Rng& rng, int d, Precision p) {
  if (rng.below(4) == 0) {
    TableTransitionSpec spec{{}, random_matrix(rng, d, d, p)};
    const uint64_t keys = 1 + rng.below(3);
    for (uint64_t k = 0; k < keys && k <= p.mask(); ++k)
      spec.table.emplace(k, random_matrix(rng, d, d, p));
    return spec;
  }
  TransitionSpec spec{TransitionValue{random_matrix(rng, d, d, p)}, {}};
  const uint64_t ncases = rng.below(3);
  uint64_t from = 1;
  for (uint64_t i = 0; i < ncases; ++i) {
    from += rng.below(3);
    IntervalCase<TransitionValue> c{from, std::nullopt,
                                    TransitionValue{random_matrix(rng, d, d, p)}};
    if (rng.below(4) != 0) c.to = from + rng.below(4);
    spec.cases.push_back(std::move(c));
    from += 1 + rng.below(4);
  }
  return spec;
}

DeclInject random_inject(Rng& rng, int d, int m, Precision p) {
  const uint64_t pick = rng.below(4);
  if (pick == 0) {
    TableInjectSpec spec{{}, random_vector(rng, d, p)};
    const uint64_t keys = 1 + rng.below(3);
    for (uint64_t k = 0; k < keys && k <= p.mask(); ++k)
      spec.table.emplace(k, random_vector(rng, d, p));
    return spec;
  }
  auto value = [&](void) -> InjectValue {
    return rng.below(3) == 0 ? InjectValue{random_matrix(rng, d, m, p)}
                             : InjectValue{random_vector(rng, d, p)};
  };
  InjectSpec spec{value(), {}};
  const uint64_t ncases = rng.below(3);
  uint64_t from = 1;
  for (uint64_t i = 0; i < ncases; ++i) {
    from += rng.below(3);
    IntervalCase<InjectValue> c{from, std::nullopt, value()};
    if (rng.below(4) != 0) c.to = from + rng.below(4);
    spec.cases.push_back(std::move(c));
    from += 1 + rng.below(4);
  }
  return spec;
}

DeclReadout random_intermediate_readout(Rng& rng) {
  switch (rng.below(4)) {
    case 0: return PassthroughReadout{};
    case 1: return StateReadout{};
    case 2: return StateOnReadReadout{};
    default: {
      const uint64_t from = 1 + rng.below(5);
      return MatchGateReadout{from, from + rng.below(4)};
    }
  }
}

// One deterministic online/offline test fixture: machine + instance whose
// stream values fit the machine precision.
struct MachineOnInstance {
  SSMachine machine;
  CompositionInstance inst;
};

MachineOnInstance random_machine_on_instance(Rng& rng, int max_layers, int max_dim,
                                             int max_prec) {
  const int layers = int(rng.range(1, uint64_t(max_layers)));
  const int dim = int(rng.range(1, uint64_t(max_dim)));
  const int prec = int(rng.range(1, uint64_t(max_prec)));
  SSMachine machine = random_declarative_machine(rng, layers, dim, prec, false);
  const int max_n = int(std::min<uint64_t>(3, machine.precision().mask()));
  const int N = int(rng.range(1, uint64_t(std::max(1, max_n))));
  const int K = int(rng.range(1, 3));
  return MachineOnInstance{std::move(machine), random_instance(N, K, rng)};
}

}  // namespace

bool SuiteReport::pass() const {
  for (const CheckResult& c : checks)
    if (!c.pass) return false;
  return true;
}

nlohmann::ordered_json suite_to_json(const SuiteReport& report) {
  nlohmann::ordered_json j;
  j["suite"] = report.name;
  j["seed"] = report.seed;
  j["pass"] = report.pass();
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const CheckResult& c : report.checks)
    checks.push_back(
        nlohmann::ordered_json{{"name", c.name}, {"pass", c.pass}, {"details", c.details}});
  j["checks"] = std::move(checks);
  return j;
}

nlohmann::ordered_json suites_to_json(const std::vector<SuiteReport>& reports) {
  bool all = true;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const SuiteReport& r : reports) {
    all = all && r.pass();
    arr.push_back(suite_to_json(r));
  }
  return nlohmann::ordered_json{{"pass", all}, {"suites", std::move(arr)}};
}

// ---------------------------------------------------------------------------
// Random builders

SSMachine random_declarative_machine(Rng& rng, int layers, int dim, int prec,
                                     bool state_readout_final) {
  const Precision p(prec);
  const int m = dim + int(rng.below(3));
  std::vector<LayerRule> rules;
  for (int l = 1; l <= layers; ++l) {
    DeclReadout readout = (l == layers && state_readout_final)
                              ? DeclReadout{StateReadout{}}
                              : random_intermediate_readout(rng);
    rules.emplace_back(random_transition(rng, dim, p), random_inject(rng, dim, m, p),
                       std::move(readout));
  }
  std::vector<RingVector> init;
  for (int l = 0; l < layers; ++l) init.push_back(random_vector(rng, dim, p));
  return SSMachine(MachineShape{layers, dim, p, m}, Embedder(WidenEmbed{}), std::move(rules),
                   std::move(init));
}

std::vector<RawToken> random_data_stream(Rng& rng, uint64_t len, Precision prec) {
  std::vector<RawToken> out;
  out.reserve(static_cast<size_t>(len));
  for (uint64_t i = 0; i < len; ++i)
    out.push_back(RawToken{TokenKind::Data, {rng.bits(prec.bits())}});
  return out;
}

ThoughtPolicy random_thought_policy(Rng& rng, Precision prec) {
  ThoughtPolicy policy;
  policy.budget = 2;
  const uint64_t phase = rng.below(4);
  const uint64_t span = 1 + rng.below(2);
  const uint64_t salt = rng.bits(prec.bits());
  policy.decide = [phase, span, salt, prec](const CotView& view) -> std::vector<RawToken> {
    // Fires on `span` consecutive residues mod 4, so the loop stops after
    // at most `span` thoughts at any position.
    const uint64_t r = view.time % 4;
    const bool fire = (r + 4 - phase) % 4 < span;
    if (!fire) return {};
    const RingVector& h = view.states->back();
    return {RawToken{TokenKind::Thought, {prec.reduce(h[0] + salt + 1)}}};
  };
  return policy;
}

CoTMachine random_cot_machine(Rng& rng, CotMode mode) {
  const int layers = int(rng.range(1, 3));
  const int dim = int(rng.range(1, 2));
  const int prec = int(rng.range(1, 3));
  SSMachine base = random_declarative_machine(rng, layers, dim, prec, true);
  ThoughtPolicy policy = random_thought_policy(rng, base.precision());
  return CoTMachine{std::move(base), std::move(policy), mode};
}

// ---------------------------------------------------------------------------
// End-to-end checks

std::string composition_trace_violations(const SSMachine& machine,
                                         const CompositionInstance& inst) {
  const EvalResult ev = eval_composition(inst);
  const TokenStream stream = encode_row_major(inst);
  const RunTrace trace = ssm_run(machine, stream.raw());
  if (!trace.final_output) return "no final output";
  if (trace.final_output->payload[0] != ev.value)
    return "output " + std::to_string(trace.final_output->payload[0]) + " expected " +
           std::to_string(ev.value);

  // Pass-through recurrence: layer i+1 holds v_i from e_i on, zero before
  // s_i; i = 0 covers the loaded first symbol with s_0 = e_0 = 1.
  for (int i = 0; i <= inst.K; ++i) {
    const uint64_t vi = ev.chain[static_cast<size_t>(i)];
    const uint64_t si = i == 0 ? 1 : block_start(inst.N, i);
    const uint64_t ei = i == 0 ? 1 : block_end(inst.N, i);
    for (uint64_t t = 0; t <= trace.length; ++t) {
      const uint64_t h = trace.state(i + 1, t)[0];
      if (t >= ei && h != vi)
        return "layer " + std::to_string(i + 1) + " t=" + std::to_string(t) + " holds " +
               std::to_string(h) + " expected " + std::to_string(vi);
      if (t < si && h != 0)
        return "layer " + std::to_string(i + 1) + " t=" + std::to_string(t) +
               " nonzero before its block";
    }
  }

  // Exactly one nonzero output per gate layer inside its block, carrying v_i.
  for (int i = 1; i <= inst.K; ++i) {
    uint64_t hits = 0;
    uint64_t value = 0;
    for (uint64_t t = block_start(inst.N, i); t <= block_end(inst.N, i); ++t) {
      const Token& y = trace.output(i, t);
      if (y.payload[0] != 0) {
        ++hits;
        value = y.payload[0];
      }
    }
    if (hits != 1 || value != ev.chain[static_cast<size_t>(i)])
      return "layer " + std::to_string(i) + " pass-through hits=" + std::to_string(hits) +
             " value=" + std::to_string(value) + " expected " +
             std::to_string(ev.chain[static_cast<size_t>(i)]);
  }
  return "";
}

std::string compiled_protocol_violations(const SSMachine& machine,
                                         const CompositionInstance& inst) {
  const ForwardTranscript t = compile_ssm_forward_protocol(machine, inst);
  const Token oracle = ssm_output(machine, t.stream.raw());
  if (!same_token(t.final_output, oracle))
    return "protocol output (" + join_u64(t.final_output.payload.values()) +
           ") differs from machine output (" + join_u64(oracle.payload.values()) + ")";

  const size_t c = affine_bits(machine.dim(), machine.precision());
  for (const Message& msg : t.messages)
    if (msg.bit_count() != c)
      return "round " + std::to_string(msg.round) + " sender " + std::to_string(msg.sender) +
             " carries " + std::to_string(msg.bit_count()) + " bits, expected " +
             std::to_string(c);
  if (t.messages.size() != static_cast<size_t>(t.rounds) * static_cast<size_t>(t.players - 1))
    return "message count " + std::to_string(t.messages.size());
  if (t.total_bits != c * t.messages.size() || (t.messages.empty() ? t.max_message_bits != 0
                                                                   : t.max_message_bits != c))
    return "bit accounting mismatch";

  const CausalityReport causality = validate_causality(t);
  if (!causality.ok()) return "causality: " + causality.violations.front();

  const RunTrace trace = ssm_run(machine, t.stream.raw());
  for (const PrefixSnapshot& snap : t.snapshots) {
    const uint64_t from = t.intervals[static_cast<size_t>(snap.player - 1)].from;
    if (!(snap.state == trace.state(snap.round, from - 1)))
      return "recovered state for player " + std::to_string(snap.player) + " round " +
             std::to_string(snap.round) + " differs from the trace";
  }
  return "";
}

std::string two_party_violations(const TwoPartyTranscript& tp, int layers, int players) {
  if (tp.substantive_count > layers + 1)
    return std::to_string(tp.substantive_count) + " substantive messages for L=" +
           std::to_string(layers);
  for (size_t q = 0; q < tp.messages.size(); ++q) {
    const Speaker want = q % 2 == 0 ? Speaker::Alice : Speaker::Bob;
    if (tp.messages[q].speaker != want)
      return "message " + std::to_string(q + 1) + " spoken by " +
             to_string(tp.messages[q].speaker);
  }
  if (tp.substantive_count > 0) {
    const Speaker last = tp.messages[static_cast<size_t>(tp.substantive_count - 1)].speaker;
    const Speaker want = layers % 2 == 0 ? Speaker::Alice : Speaker::Bob;
    if (last != want)
      return std::string("last substantive speaker is ") + to_string(last) + " with L=" +
             std::to_string(layers);
    if (!tp.messages[static_cast<size_t>(tp.substantive_count - 1)].parity_appended)
      return "parity bit not on the last substantive message";
  }
  const size_t want_total = std::max<size_t>(static_cast<size_t>(tp.substantive_count), static_cast<size_t>(players - 1));
  if (tp.messages.size() != want_total)
    return "message total " + std::to_string(tp.messages.size()) + " expected " +
           std::to_string(want_total);
  for (size_t q = 0; q < tp.messages.size(); ++q) {
    const bool should_pad = q >= static_cast<size_t>(tp.substantive_count);
    if (tp.messages[q].padding != should_pad) return "padding flags misplaced";
    if (should_pad && tp.messages[q].payload.size() != 0) return "padding message carries bits";
  }
  if (!tp.source) return "missing source transcript";
  const size_t c = affine_bits(tp.source->machine->dim(), tp.source->machine->precision());
  const size_t exact = static_cast<size_t>(layers) * static_cast<size_t>(players - 1) * c + 1;
  if (tp.total_bits != exact)
    return "total bits " + std::to_string(tp.total_bits) + " expected " + std::to_string(exact);
  if (tp.total_bits > static_cast<size_t>(layers + 1) * static_cast<size_t>(players) * c)
    return "total bits exceed (L+1)Kc";
  const CausalityReport causality = validate_causality(tp);
  if (!causality.ok()) return "causality: " + causality.violations.front();
  return "";
}

std::string cot_triangle_violations(const CoTMachine& machine,
                                    std::span<const std::vector<RawToken>> streams,
                                    const CoTOptions& opts) {
  const StreamingWithAccount sw = ssm_to_streaming(machine, opts);
  const int d = machine.base.dim();
  const CoTMachine recompiled = streaming_to_cot_ssm(sw.alg, 1, sw.account.total, 1);
  for (size_t s = 0; s < streams.size(); ++s) {
    const auto& stream = streams[s];
    const CoTRunRecord rec = run_cot(machine, stream, opts);
    const StreamingTrace st = run_streaming(sw.alg, stream);
    const std::string tag = "stream " + std::to_string(s) + ": ";
    if (st.output != leading_values(rec.final_output, d))
      return tag + "streaming output (" + join_u64(st.output) + ") differs from run (" +
             join_u64(rec.final_output.payload.values()) + ")";
    for (int i = d; i < machine.base.token_width(); ++i)
      if (rec.final_output.payload[static_cast<size_t>(i)] != 0) return tag + "nonzero padding in output";

    const CoTRunRecord rec2 = run_cot(recompiled, stream);
    if (leading_values(rec2.final_output, d) != st.output)
      return tag + "recompiled output (" + join_u64(rec2.final_output.payload.values()) +
             ") differs from streaming (" + join_u64(st.output) + ")";
    if (rec2.steps != 2 * stream.size())
      return tag + std::to_string(rec2.steps) + " steps for " + std::to_string(stream.size()) +
             " tokens";
    for (const uint64_t k : rec2.thought_counts)
      if (k != 1) return tag + "thought count " + std::to_string(k);

    // Even-time states stay in the encoding's image and track the
    // streaming memory exactly.
    const RunTrace tr = ssm_run(recompiled.base, rec2.processed);
    for (size_t i = 0; i < st.memories.size(); ++i)
      if (pack_state(tr.state(1, 2 * i)) != st.memories[i])
        return tag + "state at step " + std::to_string(2 * i) +
               " does not encode the streaming memory";
  }
  return "";
}

std::string roundtrip_violations(const CoTMachine& machine,
                                 std::span<const std::vector<RawToken>> streams,
                                 const CoTOptions& opts, int target_width) {
  const RoundtripResult rt = width_precision_roundtrip(machine, opts, target_width, 1);
  const int want_prec = (rt.account.total + target_width - 1) / target_width;
  if (rt.precision != want_prec)
    return "reported precision " + std::to_string(rt.precision) + " expected " +
           std::to_string(want_prec);
  const int counter = rt.account.counter_bits;
  const int state_bits =
      machine.base.layers() * machine.base.dim() * machine.base.precision().bits();
  if (rt.account.state_bits != state_bits || rt.account.total != state_bits + counter)
    return "memory account inconsistent";
  const int d = machine.base.dim();
  for (size_t s = 0; s < streams.size(); ++s) {
    const CoTRunRecord rec = run_cot(machine, streams[s], opts);
    const CoTRunRecord rec2 = run_cot(rt.machine, streams[s]);
    if (leading_values(rec.final_output, d) != leading_values(rec2.final_output, d))
      return "stream " + std::to_string(s) + ": (" +
             join_u64(rec.final_output.payload.values()) + ") became (" +
             join_u64(rec2.final_output.payload.values()) + ")";
  }
  return "";
}

std::string offline_compile_violations(const CoTMachine& machine,
                                       const CompositionInstance& inst) {
  if (machine.mode != CotMode::Offline) return "machine is not offline";
  const CoTMachine null_machine{machine.base, null_policy(), CotMode::Offline};
  const OfflineCompileResult with_policy = offline_protocol_compile(machine, inst);
  const OfflineCompileResult without = offline_protocol_compile(null_machine, inst);
  if (transcript_to_json(with_policy.transcript) != transcript_to_json(without.transcript))
    return "transcript depends on the offline policy";
  const TokenStream stream = encode_row_major(inst);
  const CoTRunRecord rec = run_cot(machine, stream.raw());
  if (!same_token(with_policy.output, rec.final_output))
    return "offline protocol output (" + join_u64(with_policy.output.payload.values()) +
           ") differs from run_cot (" + join_u64(rec.final_output.payload.values()) + ")";
  if (!same_token(without.output, without.transcript.final_output))
    return "null-policy continuation changed the output";
  return "";
}

// ---------------------------------------------------------------------------
// Suites

SuiteReport run_algebra_suite(ExecMode mode) {
  SuiteReport report;
  report.name = "algebra";
  OrderReport census;

  checked(report, "affine-census-total", [&] {
    census = affine_order_census(mode);
    if (census.total != 1344)
      return "enumerated " + std::to_string(census.total) + " expected 1344";
    uint64_t sum = 0;
    for (const auto& [order, n] : census.histogram) sum += n;
    if (sum != census.total) return std::string("histogram does not sum to total");
    return std::string();
  });
  checked(report, "order-8-absent", [&] {
    return census.count(8) == 0
               ? std::string()
               : std::to_string(census.count(8)) + " permutations of order 8";
  });
  checked(report, "order-support", [&] {
    const std::set<uint64_t> allowed{1, 2, 3, 4, 6, 7, 14};
    for (const uint64_t order : census.support())
      if (!allowed.count(order)) return "unexpected order " + std::to_string(order);
    return std::string();
  });
  checked(report, "identity-order-1", [&] {
    return census.count(1) >= 1 ? std::string() : std::string("no order-1 map found");
  });
  checked(report, "gl-spectra", [&] {
    if (matrix_order_spectrum(1) != std::set<uint64_t>{1}) return std::string("GL(1,2)");
    if (matrix_order_spectrum(2) != std::set<uint64_t>{1, 2, 3}) return std::string("GL(2,2)");
    if (matrix_order_spectrum(3) != std::set<uint64_t>{1, 2, 3, 4, 7})
      return std::string("GL(3,2)");
    return std::string();
  });
  checked(report, "unipotent-identity", [&] {
    const UnipotentReport u = verify_unipotent_identity();
    if (u.count != 64) return "found " + std::to_string(u.count) + " unipotent maps";
    if (!u.geometric_sum_vanishes) return std::string("I+A+A^2+A^3 != 0 somewhere");
    if (!u.fourth_power_identity) return std::string("some fourth power is not the identity");
    return std::string();
  });
  checked(report, "counting-w2-p1", [&] {
    const CountingReport c = verify_affine_counting(2, 1);
    if (c.functions_wide != 64 || c.functions_narrow != 16)
      return std::to_string(c.functions_wide) + " vs " + std::to_string(c.functions_narrow);
    if (!c.counts_match || !c.strict) return std::string("expected matching, strict counts");
    return std::string();
  });
  checked(report, "counting-w3-p1", [&] {
    const CountingReport c = verify_affine_counting(3, 1);
    if (c.functions_wide != 4096 || c.functions_narrow != 64)
      return std::to_string(c.functions_wide) + " vs " + std::to_string(c.functions_narrow);
    if (!c.counts_match || !c.strict) return std::string("expected matching, strict counts");
    return std::string();
  });
  checked(report, "counting-w1-p1", [&] {
    const CountingReport c = verify_affine_counting(1, 1);
    if (c.functions_wide != 4 || c.functions_narrow != 4)
      return std::to_string(c.functions_wide) + " vs " + std::to_string(c.functions_narrow);
    if (!c.counts_match || c.strict) return std::string("w=1 must collapse to equality");
    return std::string();
  });
  checked(report, "pigeonhole-w2-p1", [&] {
    const PigeonholeReport p = verify_injectivity_pigeonhole(2, 1);
    if (!p.certificate || p.needed != 64 || p.available != 16)
      return std::string("certificate 64 > 16 missing");
    if (!p.all_pairs_distinct || p.pairs_checked != 2016)
      return "separation failed over " + std::to_string(p.pairs_checked) + " pairs";
    return std::string();
  });
  checked(report, "pigeonhole-w1-p1", [&] {
    const PigeonholeReport p = verify_injectivity_pigeonhole(1, 1);
    if (p.certificate) return std::string("w=1 must not certify");
    if (!p.all_pairs_distinct) return std::string("parameters must stay function-identifying");
    return std::string();
  });
  checked(report, "order-oracles-agree", [&] {
    const AffineMapRange range(3, Precision(1), default_budget());
    for (uint64_t i = 0; i < range.size(); ++i) {
      const AffineMap map = range.at(i);
      if (!is_invertible(map.A)) continue;
      const auto composed = permutation_order(map);
      const auto cycles = pointwise_order(map);
      if (!composed || !cycles || *composed != *cycles)
        return "order disagreement at index " + std::to_string(i);
      if (!confirm_order_by_reapplication(map, *composed))
        return "re-application failed at index " + std::to_string(i);
    }
    return std::string();
  });
  checked(report, "mod8-counter-order", [&] {
    const Precision p3(3);
    const AffineMap inc{RingMatrix::identity(1, p3), RingVector(p3, {1})};
    const auto order = permutation_order(inc);
    if (!order || *order != 8) return std::string("increment mod 8 must have order 8");
    // No affine permutation of F_2^3 reaches order 8, so no such machine
    // simulates the counter's transition.
    return census.count(8) == 0 ? std::string() : std::string("order 8 present in the census");
  });
  return report;
}

SuiteReport run_constructions_suite(uint64_t seed, ExecMode mode) {
  SuiteReport report;
  report.name = "constructions";
  report.seed = seed;

  checked(report, "composition-machine-exhaustive-small", [&] {
    for (int N = 1; N <= 2; ++N)
      for (int K = 1; K <= 2; ++K) {
        const SSMachine machine = build_composition_ssm(N, K);
        const uint64_t count = exhaustive_instance_count(N, K, default_budget());
        const auto [failures, witnesses] = count_failures(
            count,
            [&](uint64_t idx) {
              return composition_trace_violations(machine, instance_at(N, K, idx)).empty();
            },
            mode);
        if (failures)
          return "N=" + std::to_string(N) + " K=" + std::to_string(K) + ": " +
                 composition_trace_violations(machine, instance_at(N, K, witnesses.front()));
      }
    return std::string();
  });
  checked(report, "composition-machine-random-n3", [&] {
    Rng rng(derive_seed(seed, 1));
    const SSMachine machine = build_composition_ssm(3, 2);
    for (int i = 0; i < 40; ++i) {
      const CompositionInstance inst = random_instance(3, 2, rng);
      const std::string v = composition_trace_violations(machine, inst);
      if (!v.empty()) return v;
    }
    return std::string();
  });
  checked(report, "identity-tables-return-first-symbol", [&] {
    const int N = 4, K = 3;
    CompositionInstance inst;
    inst.N = N;
    inst.K = K;
    inst.tables.assign(static_cast<size_t>(K), {1, 2, 3, 4});
    const SSMachine machine = build_composition_ssm(N, K);
    for (uint64_t a = 1; a <= uint64_t(N); ++a) {
      inst.a = a;
      const Token out = ssm_output(machine, encode_row_major(inst).raw());
      if (out.payload[0] != a) return "a=" + std::to_string(a);
    }
    return std::string();
  });
  checked(report, "streaming-exhaustive-small", [&] {
    for (int N = 1; N <= 3; ++N)
      for (int K = 1; K <= (N == 3 ? 1 : 2); ++K) {
        const StreamingAlgorithm alg = streaming_composition_alg(N, K);
        const uint64_t count = exhaustive_instance_count(N, K, default_budget());
        for (uint64_t idx = 0; idx < count; ++idx) {
          const CompositionInstance inst = instance_at(N, K, idx);
          const StreamingTrace st = run_streaming(alg, encode_row_major(inst).raw());
          const uint64_t want = eval_composition(inst).value;
          if (st.output != std::vector<uint64_t>{want})
            return "N=" + std::to_string(N) + " K=" + std::to_string(K) + " idx=" +
                   std::to_string(idx);
        }
      }
    return std::string();
  });
  checked(report, "streaming-memory-bits", [&] {
    for (const int N : {1, 2, 3, 4, 5, 6, 8, 64, 256}) {
      const StreamingAlgorithm alg = streaming_composition_alg(N, 2);
      if (alg.state_bits != 2 * ceil_log2(uint64_t(N) + 1))
        return "N=" + std::to_string(N) + " uses " + std::to_string(alg.state_bits) + " bits";
    }
    const StreamingAlgorithm big = streaming_composition_alg(256, 2);
    return big.state_bits == 18 ? std::string() : std::string("N=256 must use 18 bits");
  });
  checked(report, "streaming-budget-boundary", [&] {
    for (const int N : {7, 15}) {
      try {
        (void)streaming_composition_alg(N, 2);
        return "N=" + std::to_string(N) + " unexpectedly fit its bit budget";
      } catch (const BudgetError&) {
      }
    }
    return std::string();
  });
  checked(report, "pointer-chase-bridge", [&] {
    Rng rng(derive_seed(seed, 2));
    for (int i = 0; i < 30; ++i) {
      const int N = int(rng.range(1, 6));
      PCInstance pc{N, random_function(N, rng), random_function(N, rng), rng.range(1, 5)};
      const PCResult want = pc_eval(pc);
      const EvalResult got = eval_composition(pc_to_composition(pc, int(pc.k)));
      if (got.value != want.pointer || int(got.value & 1) != want.parity)
        return "instance " + std::to_string(i);
    }
    return std::string();
  });
  checked(report, "universal-machine-exhaustive", [&] {
    for (const auto& [w, p] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {2, 1}}) {
      const SSMachine machine = universal_affine_machine(w, p);
      const Precision prec(p);
      const AffineMapRange maps(w, prec, default_budget());
      const uint64_t states = state_space_size(w, prec);
      for (uint64_t mi = 0; mi < maps.size(); ++mi) {
        const AffineMap map = maps.at(mi);
        for (uint64_t hi = 0; hi < states; ++hi) {
          const RingVector h = unpack_state(hi, w, prec);
          std::vector<uint64_t> t_values;
          for (int r = 0; r < w; ++r)
            for (int c = 0; c < w; ++c) t_values.push_back(map.A.at(r, c));
          for (int r = 0; r < w; ++r) t_values.push_back(map.b[static_cast<size_t>(r)]);
          const std::vector<RawToken> stream{RawToken{TokenKind::Data, h.values()},
                                             RawToken{TokenKind::Data, std::move(t_values)},
                                             RawToken::read_marker()};
          const Token out = ssm_output(machine, stream);
          const RingVector want = apply(map, h);
          if (leading_values(out, w) != want.values())
            return "map " + std::to_string(mi) + " state " + std::to_string(hi) + " at (w=" +
                   std::to_string(w) + ",p=" + std::to_string(p) + ")";
        }
      }
    }
    return std::string();
  });
  checked(report, "mod8-counter-machine", [&] {
    const SSMachine machine = mod_counter_machine();
    auto run = [&](std::vector<uint64_t> values) {
      std::vector<RawToken> stream;
      for (const uint64_t v : values) stream.push_back(RawToken{TokenKind::Data, {v}});
      const RunTrace trace = ssm_run(machine, stream);
      std::vector<uint64_t> outs;
      for (uint64_t t = 1; t <= trace.length; ++t) outs.push_back(trace.output(1, t).payload[0]);
      return outs;
    };
    if (run({5, 0, 0}) != std::vector<uint64_t>{5, 6, 7}) return std::string("(5,inc,inc)");
    if (run({7, 0}) != std::vector<uint64_t>{7, 0}) return std::string("(7,inc) must wrap to 0");
    if (run({0}) != std::vector<uint64_t>{0}) return std::string("(0)");
    return std::string();
  });
  checked(report, "row-major-roundtrip", [&] {
    Rng rng(derive_seed(seed, 3));
    for (int i = 0; i < 25; ++i) {
      const CompositionInstance inst = random_instance(int(rng.range(1, 5)), int(rng.range(1, 4)), rng);
      const TokenStream stream = encode_row_major(inst);
      if (stream.length() != stream_length(inst.N, inst.K)) return std::string("stream length");
      const CompositionInstance back = decode_row_major(stream.tokens, inst.N, inst.K);
      if (back.N != inst.N || back.K != inst.K || back.a != inst.a ||
          back.tables != inst.tables)
        return "decode mismatch at instance " + std::to_string(i);
      const CompositionInstance reparsed = parse_instance(format_instance(inst));
      if (reparsed.a != inst.a || reparsed.tables != inst.tables)
        return "text format mismatch at instance " + std::to_string(i);
    }
    return std::string();
  });
  checked(report, "instance-enumeration-distinct", [&] {
    const uint64_t count = exhaustive_instance_count(2, 2, default_budget());
    if (count != 32) return "count " + std::to_string(count) + " expected 32";
    std::set<std::string> seen;
    for (uint64_t idx = 0; idx < count; ++idx)
      seen.insert(format_instance(instance_at(2, 2, idx)));
    return seen.size() == count ? std::string() : std::string("enumeration repeats instances");
  });
  return report;
}

SuiteReport run_protocol_suite(uint64_t seed, ExecMode mode) {
  SuiteReport report;
  report.name = "protocol";
  report.seed = seed;
  (void)mode;

  checked(report, "partition-examples", [&] {
    const CompositionInstance inst22 = instance_at(2, 2, 7);
    const auto parts = partition_stream(encode_row_major(inst22), 2);
    if (parts != std::vector<Interval>{{1, 3}, {4, 5}})
      return std::string("N=2,K=2 partition is wrong");
    const CompositionInstance inst31 = instance_at(3, 1, 5);
    const auto single = partition_stream(encode_row_major(inst31), 1);
    if (single != std::vector<Interval>{{1, 4}}) return std::string("K=1 must own [1:n]");
    Rng rng(derive_seed(seed, 10));
    for (int i = 0; i < 20; ++i) {
      const int N = int(rng.range(1, 5)), K = int(rng.range(1, 4));
      const auto parts2 = partition_stream(encode_row_major(random_instance(N, K, rng)), K);
      uint64_t cursor = 1;
      for (const Interval& iv : parts2) {
        if (iv.from != cursor || iv.to < iv.from) return std::string("gaps in the partition");
        cursor = iv.to + 1;
      }
      if (cursor != stream_length(N, K) + 1) return std::string("partition does not cover");
    }
    return std::string();
  });
  checked(report, "compiler-exhaustive-small", [&] {
    for (int N = 1; N <= 2; ++N)
      for (int K = 1; K <= 2; ++K) {
        const SSMachine machine = build_composition_ssm(N, K);
        const uint64_t count = exhaustive_instance_count(N, K, default_budget());
        for (uint64_t idx = 0; idx < count; ++idx) {
          const std::string v = compiled_protocol_violations(machine, instance_at(N, K, idx));
          if (!v.empty())
            return "N=" + std::to_string(N) + " K=" + std::to_string(K) + ": " + v;
        }
      }
    return std::string();
  });
  checked(report, "compiler-random-machines", [&] {
    Rng rng(derive_seed(seed, 11));
    for (int i = 0; i < 30; ++i) {
      const MachineOnInstance cell = random_machine_on_instance(rng, 3, 2, 3);
      const std::string v = compiled_protocol_violations(cell.machine, cell.inst);
      if (!v.empty()) return "machine " + std::to_string(i) + ": " + v;
    }
    return std::string();
  });
  checked(report, "message-bits-d2-p4", [&] {
    Rng rng(derive_seed(seed, 12));
    const SSMachine machine = random_declarative_machine(rng, 2, 2, 4, false);
    const ForwardTranscript t =
        compile_ssm_forward_protocol(machine, random_instance(3, 3, rng));
    for (const Message& msg : t.messages)
      if (msg.bit_count() != 24)
        return std::to_string(msg.bit_count()) + " bits, expected 24";
    return t.messages.empty() ? std::string("expected messages") : std::string();
  });
  checked(report, "compiler-k1-no-messages", [&] {
    Rng rng(derive_seed(seed, 13));
    const SSMachine machine = build_composition_ssm(2, 1);
    const ForwardTranscript t =
        compile_ssm_forward_protocol(machine, random_instance(2, 1, rng));
    if (!t.messages.empty()) return std::string("K=1 must send nothing");
    if (!validate_causality(t).ok()) return std::string("K=1 transcript must validate");
    return std::string();
  });
  checked(report, "causality-flags-tampering", [&] {
    Rng rng(derive_seed(seed, 14));
    const SSMachine machine = build_composition_ssm(2, 3);
    ForwardTranscript t = compile_ssm_forward_protocol(machine, random_instance(2, 3, rng));
    if (t.messages.size() < 2) return std::string("expected at least two messages");
    // Make the round-1 message of player 1 read like its round-1 peer's:
    // exactly the dependence the model forbids.
    BitString tampered;
    const BitString& peer = t.messages[1].payload;
    for (size_t b = 0; b < peer.size(); ++b) tampered.append_bit(peer.read_bit(b));
    if (tampered == t.messages[0].payload) {
      tampered = BitString();
      for (size_t b = 0; b < peer.size(); ++b)
        tampered.append_bit(b == 0 ? !peer.read_bit(0) : peer.read_bit(b));
    }
    t.messages[0].payload = tampered;
    return validate_causality(t).ok() ? std::string("tampered transcript passed") : std::string();
  });
  checked(report, "two-party-schedule-grid", [&] {
    Rng rng(derive_seed(seed, 15));
    for (int L = 1; L <= 5; ++L) {
      const int K = L + 3;
      const SSMachine machine = random_declarative_machine(rng, L, 1, 2, false);
      const CompositionInstance inst = random_instance(1, K, rng);
      const ForwardTranscript t = compile_ssm_forward_protocol(machine, inst);
      const TwoPartyTranscript tp = serialize_two_party(t);
      const std::string v = two_party_violations(tp, L, K);
      if (!v.empty()) return "L=" + std::to_string(L) + ": " + v;
    }
    return std::string();
  });
  checked(report, "two-party-component-shapes", [&] {
    Rng rng(derive_seed(seed, 16));
    auto shapes = [&](int L, int K) {
      const SSMachine machine = random_declarative_machine(rng, L, 1, 1, false);
      const TwoPartyTranscript tp =
          serialize_two_party(compile_ssm_forward_protocol(machine, random_instance(1, K, rng)));
      std::vector<std::vector<std::pair<char, int>>> out;
      for (int q = 0; q < tp.substantive_count; ++q) {
        std::vector<std::pair<char, int>> msg;
        for (const TwoPartyComponent& comp : tp.messages[static_cast<size_t>(q)].components)
          msg.emplace_back(comp.group, comp.round);
        out.push_back(std::move(msg));
      }
      return out;
    };
    using Shape = std::vector<std::vector<std::pair<char, int>>>;
    // K = 3 leaves one sender per side, so components map 1:1 to rounds.
    const Shape l2 = shapes(2, 3);
    if (l2 != Shape{{{'a', 1}}, {{'b', 1}, {'b', 2}}, {{'a', 2}}})
      return std::string("L=2 schedule must read a1; (b1,b2); (a2)");
    // K = 2 has no even sender: Bob's slot stays, carrying only parity.
    const Shape l1 = shapes(1, 2);
    if (l1 != Shape{{{'a', 1}}, {}})
      return std::string("L=1, K=2 schedule must read a1; (parity only)");
    return std::string();
  });
  checked(report, "two-party-parity-matches-pointer-chase", [&] {
    Rng rng(derive_seed(seed, 17));
    for (int i = 0; i < 30; ++i) {
      const int N = int(rng.range(1, 8));
      PCInstance pc{N, random_function(N, rng), random_function(N, rng), rng.range(1, 4)};
      const CompositionInstance inst = pc_to_composition(pc, int(pc.k));
      const SSMachine machine = build_composition_ssm(inst.N, inst.K);
      const TwoPartyTranscript tp =
          serialize_two_party(compile_ssm_forward_protocol(machine, inst));
      if (tp.parity_bit != pc_eval(pc).parity) return "instance " + std::to_string(i);
    }
    return std::string();
  });
  checked(report, "two-party-rejects-even-gap", [&] {
    Rng rng(derive_seed(seed, 18));
    const SSMachine machine = random_declarative_machine(rng, 2, 1, 2, false);
    try {
      (void)serialize_two_party(
          compile_ssm_forward_protocol(machine, random_instance(1, 2, rng)));
    } catch (const MismatchError&) {
      return std::string();
    }
    return std::string("K-L even must be rejected");
  });
  checked(report, "one-round-bits-examples", [&] {
    if (min_one_round_cc(1, 3).bits != 0) return std::string("N=1 needs 0 bits");
    for (const int N : {2, 3, 4})
      if (min_one_round_cc(N, 1).bits != 1)
        return "k=1, N=" + std::to_string(N) + " needs 1 bit";
    const OneRoundCC first = min_one_round_cc(3, 2);
    const OneRoundCC second = min_one_round_cc(3, 2);
    if (first.classes != second.classes || first.bits != second.bits)
      return std::string("oracle must be deterministic");
    if (first.classes == 0 || first.classes > 27) return std::string("class count out of range");
    return std::string();
  });
  return report;
}

SuiteReport run_cot_suite(uint64_t seed, ExecMode mode) {
  SuiteReport report;
  report.name = "cot";
  report.seed = seed;
  (void)mode;
  CoTOptions opts;
  opts.horizon = 96;

  checked(report, "null-policy-equals-plain-run", [&] {
    Rng rng(derive_seed(seed, 20));
    for (int i = 0; i < 20; ++i) {
      const int layers = int(rng.range(1, 3));
      const SSMachine base =
          random_declarative_machine(rng, layers, int(rng.range(1, 2)), int(rng.range(1, 3)), false);
      const std::vector<RawToken> stream = random_data_stream(rng, rng.range(1, 8), base.precision());
      const CoTMachine machine{base, null_policy(), CotMode::Online};
      const CoTRunRecord rec = run_cot(machine, stream, opts);
      const RunTrace trace = ssm_run(base, stream);
      if (!trace.final_output || !same_token(rec.final_output, *trace.final_output))
        return "machine " + std::to_string(i) + ": outputs differ";
      if (rec.steps != stream.size() || rec.processed.size() != stream.size())
        return "machine " + std::to_string(i) + ": null policy added steps";
      for (const uint64_t k : rec.thought_counts)
        if (k != 0) return std::string("null policy produced thoughts");
    }
    return std::string();
  });
  checked(report, "budget-violation-is-loud", [&] {
    Rng rng(derive_seed(seed, 21));
    const SSMachine base = random_declarative_machine(rng, 1, 1, 2, true);
    ThoughtPolicy greedy;
    greedy.budget = 1;
    greedy.decide = [](const CotView&) {
      return std::vector<RawToken>{RawToken{TokenKind::Thought, {0}}};
    };
    const CoTMachine machine{base, greedy, CotMode::Online};
    const std::vector<RawToken> stream = random_data_stream(rng, 3, base.precision());
    try {
      (void)run_cot(machine, stream, opts);
    } catch (const BudgetError& e) {
      return std::string(e.what()).find("position 1") != std::string::npos
                 ? std::string()
                 : std::string("error must name the position: ") + e.what();
    }
    return std::string("unbounded thought loop went unnoticed");
  });
  checked(report, "offline-defers-all-thoughts", [&] {
    Rng rng(derive_seed(seed, 22));
    const SSMachine base = random_declarative_machine(rng, 2, 1, 2, true);
    ThoughtPolicy odd_time;
    odd_time.budget = 1;
    odd_time.decide = [](const CotView& view) -> std::vector<RawToken> {
      if (view.time % 2 == 0) return {};
      return {RawToken{TokenKind::Thought, {1}}};
    };
    const CoTMachine machine{base, odd_time, CotMode::Offline};
    const std::vector<RawToken> stream = random_data_stream(rng, 5, base.precision());
    const CoTRunRecord rec = run_cot(machine, stream, opts);
    for (size_t i = 0; i + 1 < rec.thought_counts.size(); ++i)
      if (rec.thought_counts[i] != 0) return std::string("thoughts before the last token");
    if (rec.thought_counts.back() != 1) return std::string("expected one closing thought");
    return std::string();
  });
  checked(report, "streaming-direction-agrees", [&] {
    Rng rng(derive_seed(seed, 23));
    for (int i = 0; i < 10; ++i) {
      const CoTMachine machine = random_cot_machine(rng, CotMode::Online);
      const StreamingWithAccount sw = ssm_to_streaming(machine, opts);
      if (sw.account.total != machine.base.layers() * machine.base.dim() *
                                      machine.base.precision().bits() +
                                  sw.account.counter_bits)
        return std::string("memory account formula");
      for (int s = 0; s < 10; ++s) {
        const std::vector<RawToken> stream =
            random_data_stream(rng, rng.range(1, 8), machine.base.precision());
        const CoTRunRecord rec = run_cot(machine, stream, opts);
        const StreamingTrace st = run_streaming(sw.alg, stream);
        if (st.output != leading_values(rec.final_output, machine.base.dim()))
          return "machine " + std::to_string(i) + " stream " + std::to_string(s);
      }
    }
    return std::string();
  });
  checked(report, "triangle-equivalence", [&] {
    Rng rng(derive_seed(seed, 24));
    for (int i = 0; i < 5; ++i) {
      const CoTMachine machine = random_cot_machine(rng, CotMode::Online);
      std::vector<std::vector<RawToken>> streams;
      for (int s = 0; s < 10; ++s)
        streams.push_back(random_data_stream(rng, rng.range(1, 8), machine.base.precision()));
      const std::string v = cot_triangle_violations(machine, streams, opts);
      if (!v.empty()) return "machine " + std::to_string(i) + ": " + v;
    }
    return std::string();
  });
  checked(report, "composition-online-machine-small", [&] {
    for (int N = 1; N <= 2; ++N)
      for (int K = 1; K <= 2; ++K) {
        const StreamingAlgorithm alg = streaming_composition_alg(N, K);
        if (alg.state_bits != 2 * ceil_log2(uint64_t(N) + 1))
          return std::string("state bits off the stated budget");
        const CoTMachine machine = streaming_to_cot_ssm(alg, 1, alg.state_bits, 1);
        const uint64_t count = exhaustive_instance_count(N, K, default_budget());
        for (uint64_t idx = 0; idx < count; ++idx) {
          const CompositionInstance inst = instance_at(N, K, idx);
          const TokenStream stream = encode_row_major(inst);
          const CoTRunRecord rec = run_cot(machine, stream.raw());
          if (rec.final_output.payload[0] != eval_composition(inst).value)
            return "N=" + std::to_string(N) + " K=" + std::to_string(K) + " idx=" +
                   std::to_string(idx);
          if (rec.steps != 2 * stream.length()) return std::string("step count");
        }
      }
    return std::string();
  });
  checked(report, "offline-protocol-neutrality", [&] {
    Rng rng(derive_seed(seed, 25));
    for (int i = 0; i < 20; ++i) {
      MachineOnInstance cell = random_machine_on_instance(rng, 3, 2, 3);
      ThoughtPolicy policy = random_thought_policy(rng, cell.machine.precision());
      const CoTMachine machine{std::move(cell.machine), std::move(policy), CotMode::Offline};
      const std::string v = offline_compile_violations(machine, cell.inst);
      if (!v.empty()) return "case " + std::to_string(i) + ": " + v;
    }
    return std::string();
  });
  checked(report, "width-precision-roundtrip", [&] {
    Rng rng(derive_seed(seed, 26));
    for (int i = 0; i < 5; ++i) {
      const CoTMachine machine = random_cot_machine(rng, CotMode::Online);
      std::vector<std::vector<RawToken>> streams;
      for (int s = 0; s < 10; ++s)
        streams.push_back(random_data_stream(rng, rng.range(1, 8), machine.base.precision()));
      const std::string narrow = roundtrip_violations(machine, streams, opts, 1);
      if (!narrow.empty()) return "machine " + std::to_string(i) + " width 1: " + narrow;
      const std::string wide = roundtrip_violations(machine, streams, opts, 2);
      if (!wide.empty()) return "machine " + std::to_string(i) + " width 2: " + wide;
    }
    return std::string();
  });
  checked(report, "pad-layers-passthrough", [&] {
    Rng rng(derive_seed(seed, 27));
    const SSMachine base = random_declarative_machine(rng, 2, 2, 2, false);
    const SSMachine padded = pad_layers(base, 2);
    if (padded.layers() != base.layers() + 2) return std::string("layer count");
    for (int s = 0; s < 10; ++s) {
      const std::vector<RawToken> stream = random_data_stream(rng, rng.range(1, 6), base.precision());
      const RunTrace t1 = ssm_run(base, stream);
      const RunTrace t2 = ssm_run(padded, stream);
      for (uint64_t t = 1; t <= t1.length; ++t)
        if (!same_token(t1.output(base.layers(), t), t2.output(padded.layers(), t)))
          return std::string("padding changed an output");
    }
    return std::string();
  });
  checked(report, "memory-account-example", [&] {
    Rng rng(derive_seed(seed, 28));
    const SSMachine base = random_declarative_machine(rng, 1, 1, 4, true);
    CoTOptions small;
    small.horizon = 8;
    const MemoryAccount acc = memory_account(base, small);
    if (acc.state_bits != 4) return std::string("state bits");
    if (acc.counter_bits != 4) return std::string("counter bits for horizon 8");
    if (acc.total != 8) return std::string("total");
    return std::string();
  });
  return report;
}

std::vector<SuiteReport> run_suites(const std::string& selector, uint64_t seed, ExecMode mode) {
  std::vector<SuiteReport> out;
  if (selector == "algebra" || selector == "all") out.push_back(run_algebra_suite(mode));
  if (selector == "constructions" || selector == "all")
    out.push_back(run_constructions_suite(seed, mode));
  if (selector == "protocol" || selector == "all")
    out.push_back(run_protocol_suite(seed, mode));
  if (selector == "cot" || selector == "all") out.push_back(run_cot_suite(seed, mode));
  if (out.empty()) throw ConfigError("unknown suite '" + selector + "'");
  return out;
}

}  // namespace ssmlab
