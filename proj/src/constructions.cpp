#include "ssmlab/constructions.hpp"

#include <memory>

#include "ssmlab/errors.hpp"

namespace ssmlab {

int ceil_log2(uint64_t n) {
  if (n == 0) throw MismatchError("ceil_log2: argument must be positive");
  int k = 0;
  while (k < 64 && (uint64_t{1} << k) < n) ++k;
  if ((uint64_t{1} << k) < n) throw MismatchError("ceil_log2: argument too large");
  return k;
}

StreamingTrace run_streaming(const StreamingAlgorithm& alg, std::span<const RawToken> stream) {
  if (alg.expected_length && stream.size() != *alg.expected_length)
    throw StreamError("run_streaming: expected " + std::to_string(*alg.expected_length) +
                      " tokens, got " + std::to_string(stream.size()));
  StreamingTrace trace;
  trace.memories.reserve(stream.size() + 1);
  uint64_t mem = alg.initial;
  trace.memories.push_back(mem);
  for (const RawToken& tok : stream) {
    mem = alg.step(mem, tok);
    trace.memories.push_back(mem);
  }
  trace.output = alg.output(mem);
  return trace;
}

// ---------------------------------------------------------------------------
// Composition solver, layered form

SSMachine build_composition_ssm(int N, int K) {
  if (N < 1 || K < 1) throw MismatchError("build_composition_ssm: N and K must be positive");
  const Precision p(ceil_log2(uint64_t(N) + 1) + 1);
  const int L = K + 1;
  const MachineShape shape{L, 1, p, 1};
  const RingMatrix one = RingMatrix::identity(1, p);
  const RingMatrix zero = RingMatrix::zero(1, 1, p);
  const RingVector zvec = RingVector::zero(1, p);

  std::vector<LayerRule> rules;
  rules.reserve(static_cast<size_t>(L));
  {
    // Layer 1: h = a from t=1 on.
    TransitionSpec load{one, {{1, 1, TransitionValue{zero}}}};
    InjectSpec inj{InjectValue{zvec}, {{1, 1, InjectValue{one}}}};
    rules.emplace_back(DeclTransition{load}, DeclInject{inj},
                       DeclReadout{MatchGateReadout{block_start(N, 1), block_end(N, 1)}});
  }
  for (int l = 2; l <= L; ++l) {
    // Layer l accumulates its predecessor's single nonzero pass-through
    // over block l-1, so h_l = v_{l-1} once that block has ended.
    const uint64_t from = block_start(N, l - 1);
    const uint64_t to = block_end(N, l - 1);
    TransitionSpec hold{one, {}};
    InjectSpec inj{InjectValue{zvec}, {{from, to, InjectValue{one}}}};
    DeclReadout readout = l <= K ? DeclReadout{MatchGateReadout{block_start(N, l), block_end(N, l)}}
                                 : DeclReadout{StateReadout{}};
    rules.emplace_back(DeclTransition{hold}, DeclInject{inj}, readout);
  }
  SSMachine machine(shape, Embedder(WidenEmbed{}), std::move(rules));
  machine.expected_length = stream_length(N, K);
  return machine;
}

// ---------------------------------------------------------------------------
// Composition solver, one-pass form

namespace {

// Memory state of the one-pass solver. Scanning keeps j <= z; the
// post-trigger phase re-enters Scanning when the block runs out.
struct ScanState {
  enum Phase { Start, Scanning, Updated } phase = Start;
  uint64_t z = 0;  // Scanning: current pointer; Updated: next block's pointer
  uint64_t j = 0;  // next within-block index to be read
};

uint64_t tri(uint64_t x) { return x * (x + 1) / 2; }

uint64_t encode_scan(const ScanState& s, int N) {
  const uint64_t n = uint64_t(N);
  switch (s.phase) {
    case ScanState::Start:
      return 0;
    case ScanState::Scanning:
      return 1 + tri(s.z - 1) + (s.j - 1);
    default:
      return 1 + tri(n) + (s.j - 2) * n + (s.z - 1);
  }
}

ScanState decode_scan(uint64_t mem, int N) {
  const uint64_t n = uint64_t(N);
  if (mem == 0) return {};
  if (mem <= tri(n)) {
    uint64_t z = 1;
    uint64_t base = 1;
    while (base + z - 1 < mem) {
      base += z;
      ++z;
    }
    return {ScanState::Scanning, z, mem - base + 1};
  }
  const uint64_t off = mem - 1 - tri(n);
  if (off >= n * (n - 1)) throw StreamError("streaming composition: memory value out of range");
  return {ScanState::Updated, off % n + 1, off / n + 2};
}

uint64_t scan_token_value(const RawToken& tok, int N) {
  if (tok.kind != TokenKind::Data || tok.values.size() != 1)
    throw StreamError("streaming composition: tokens must be single data values");
  const uint64_t v = tok.values[0];
  if (v < 1 || v > uint64_t(N))
    throw StreamError("streaming composition: token value " + std::to_string(v) +
                      " outside [1, " + std::to_string(N) + "]");
  return v;
}

}  // namespace

uint64_t streaming_composition_states(int N) {
  const uint64_t n = uint64_t(N);
  return 1 + tri(n) + n * (n - 1);
}

StreamingAlgorithm streaming_composition_alg(int N, int K) {
  if (N < 1 || K < 1) throw MismatchError("streaming_composition_alg: N and K must be positive");
  const int bits = 2 * ceil_log2(uint64_t(N) + 1);
  const uint64_t codes = uint64_t{1} << bits;
  if (streaming_composition_states(N) > codes)
    throw BudgetError("streaming_composition_alg: " +
                      std::to_string(streaming_composition_states(N)) +
                      " memory states exceed the " + std::to_string(bits) +
                      "-bit budget at N=" + std::to_string(N));

  StreamingAlgorithm alg;
  alg.state_bits = bits;
  alg.memory_desc =
      "state index: 0 before the start token; 1 + z(z-1)/2 + (j-1) while scanning "
      "block entries; 1 + N(N+1)/2 + (j-2)N + (v-1) after the block's pointer update";
  alg.initial = 0;
  alg.expected_length = stream_length(N, K);
  alg.step = [N](uint64_t mem, const RawToken& tok) -> uint64_t {
    const uint64_t value = scan_token_value(tok, N);
    ScanState s = decode_scan(mem, N);
    switch (s.phase) {
      case ScanState::Start:
        s = {ScanState::Scanning, value, 1};
        break;
      case ScanState::Scanning:
        if (s.j == s.z) {
          // This entry is f_i(z): grab it and go quiet for the rest of
          // the block so the fresh pointer cannot re-trigger.
          s = s.j == uint64_t(N) ? ScanState{ScanState::Scanning, value, 1}
                                 : ScanState{ScanState::Updated, value, s.j + 1};
        } else {
          s.j += 1;
        }
        break;
      default:
        s = s.j == uint64_t(N) ? ScanState{ScanState::Scanning, s.z, 1}
                               : ScanState{ScanState::Updated, s.z, s.j + 1};
        break;
    }
    return encode_scan(s, N);
  };
  alg.output = [N](uint64_t mem) -> std::vector<uint64_t> {
    return {decode_scan(mem, N).z};
  };
  return alg;
}

// ---------------------------------------------------------------------------
// Gadget machines

SSMachine universal_affine_machine(int w, int p) {
  if (w < 1 || p < 1) throw MismatchError("universal_affine_machine: w and p must be positive");
  const Precision prec(p);
  const int m = w * w + w;
  const MachineShape shape{1, w, prec, m};

  // B = [I | 0] so that token 1's leading w coordinates load the state.
  RingMatrix load = RingMatrix::zero(w, m, prec);
  for (int i = 0; i < w; ++i) load.set(i, i, 1);

  TransitionSpec trans{TransitionValue{RingMatrix::identity(w, prec)},
                       {{1, 1, TransitionValue{RingMatrix::zero(w, w, prec)}},
                        {2, 2, TransitionValue{TokenAffineTag{}}}}};
  InjectSpec inj{InjectValue{RingVector::zero(w, prec)},
                 {{1, 1, InjectValue{load}}, {2, 2, InjectValue{TokenAffineTag{}}}}};
  std::vector<LayerRule> rules;
  rules.emplace_back(DeclTransition{trans}, DeclInject{inj}, DeclReadout{StateOnReadReadout{}});
  SSMachine machine(shape, Embedder(AffineStreamEmbed{}), std::move(rules));
  machine.expected_length = 3;
  return machine;
}

SSMachine mod_counter_machine() {
  const Precision prec(3);
  const MachineShape shape{1, 1, prec, 1};
  TransitionSpec trans{TransitionValue{RingMatrix::identity(1, prec)},
                       {{1, 1, TransitionValue{RingMatrix::zero(1, 1, prec)}}}};
  InjectSpec inj{InjectValue{RingVector(prec, {1})},
                 {{1, 1, InjectValue{RingMatrix::identity(1, prec)}}}};
  std::vector<LayerRule> rules;
  rules.emplace_back(DeclTransition{trans}, DeclInject{inj}, DeclReadout{StateReadout{}});
  return SSMachine(shape, Embedder(WidenEmbed{}), std::move(rules));
}

}  // namespace ssmlab
