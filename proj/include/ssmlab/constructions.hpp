#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssmlab/composition.hpp"
#include "ssmlab/ssm.hpp"

namespace ssmlab {

// Smallest k >= 0 with 2^k >= n. n must be positive.
int ceil_log2(uint64_t n);

// One-pass machine with state_bits bits of persistent memory: it iterates
// M_i = F(M_{i-1}, x_i) and answers G(M_n). Memory values are packed into
// the low state_bits bits of a uint64 under the encoding in memory_desc.
struct StreamingAlgorithm {
  int state_bits = 0;
  std::string memory_desc;
  uint64_t initial = 0;
  std::function<uint64_t(uint64_t, const RawToken&)> step;
  std::function<std::vector<uint64_t>(uint64_t)> output;
  std::optional<uint64_t> expected_length;
};

struct StreamingTrace {
  std::vector<uint64_t> memories;  // M_0..M_n
  std::vector<uint64_t> output;    // G(M_n)
};

StreamingTrace run_streaming(const StreamingAlgorithm& alg, std::span<const RawToken> stream);

// The (K+1)-layer composition solver: d=1, p=ceil_log2(N+1)+1, token
// width 1. Layer 1 loads a at t=1 and holds it; layer l >= 2 accumulates
// over block l-1; layers l <= K gate their block by the index-match
// readout; the last layer emits its state. Expects streams from
// encode_row_major, so expected_length = 1 + K*N.
SSMachine build_composition_ssm(int N, int K);

// One-pass composition solver in 2*ceil_log2(N+1) bits. The memory packs
// one of three phases: before the start token; scanning for the trigger
// with the current pointer z and block index j (j <= z always holds,
// since the trigger fires the moment j reaches z); or after the trigger,
// carrying the updated pointer v while counting out the block's remaining
// entries. The phase split is what keeps a block's own update from firing
// twice when the new pointer lands ahead of the scan position.
//
// The three phases need 1 + N(N+1)/2 + N(N-1) distinct memory values.
// For most N that fits in 2*ceil_log2(N+1) bits, but when N+1 is an exact
// power of two (N = 7, 15, ...) it does not, and no algorithm in that
// budget can: the task itself has more distinguishable prefixes than the
// budget has codes. Those N raise BudgetError.
StreamingAlgorithm streaming_composition_alg(int N, int K);

// Total memory codes the streaming composition algorithm needs at size N.
uint64_t streaming_composition_states(int N);

// Single-layer machine applying a streamed affine map: token 1 loads
// x in R_p^w, token 2 carries T = (A, b) row-major and applies it, token 3
// is a read marker answered with the state, so the output at time 3 is
// T(x). Token width w^2 + w, expected_length = 3.
SSMachine universal_affine_machine(int w, int p);

// Width 1, precision 3. The first token loads s; every later token
// increments mod 8; the readout emits the state after each step.
SSMachine mod_counter_machine();

}  // namespace ssmlab
