#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssmlab/rng.hpp"
#include "ssmlab/token.hpp"

namespace ssmlab {

// K-step function composition query: evaluate f_K(...f_2(f_1(a))...) for
// functions f_i: [N] -> [N]. Everything is 1-based; tables[i][j-1] is
// f_{i+1}(j).
struct CompositionInstance {
  int N = 1;
  int K = 1;
  uint64_t a = 1;
  std::vector<std::vector<uint64_t>> tables;

  void validate() const;
};

struct EvalResult {
  uint64_t value;                // v_K
  std::vector<uint64_t> chain;   // v_0 = a, v_i = f_i(v_{i-1})
};

// Reference evaluator: direct table lookups, no machine involved.
EvalResult eval_composition(const CompositionInstance& inst);

// Row-major encoding: x_1 = a, then each table in argument order, so
// n = 1 + K N. Block i occupies [s_i, e_i] = [2 + (i-1) N, 1 + i N].
uint64_t stream_length(int N, int K);
uint64_t block_start(int N, int i);
uint64_t block_end(int N, int i);

struct Block {
  uint64_t from;
  uint64_t to;
};

struct TokenStream {
  std::vector<uint64_t> tokens;
  std::vector<Block> blocks;

  uint64_t length() const { return tokens.size(); }
  std::vector<RawToken> raw() const;
};

TokenStream encode_row_major(const CompositionInstance& inst);
CompositionInstance decode_row_major(const std::vector<uint64_t>& tokens, int N, int K);

// Pointer chasing: pt_0 = 1, pt_r = f_A(pt_{r-1}) for odd r and
// f_B(pt_{r-1}) for even r; the task output is pt_k mod 2.
struct PCInstance {
  int N = 1;
  std::vector<uint64_t> f_a;
  std::vector<uint64_t> f_b;
  uint64_t k = 1;

  void validate() const;
};

struct PCResult {
  uint64_t pointer;  // pt_k
  int parity;        // pt_k mod 2
};

PCResult pc_eval(int N, const std::vector<uint64_t>& f_a, const std::vector<uint64_t>& f_b,
                 uint64_t k);
PCResult pc_eval(const PCInstance& inst);

// Composition instance with a = 1 and g_i = f_A for odd i, f_B for even i,
// so the chain equals the pointer sequence.
CompositionInstance pc_to_composition(const PCInstance& inst, int K);

// ---------------------------------------------------------------------------
// Instance enumeration. Exhaustive instances are index-addressable so
// sweeps can run in parallel; the count N^{N K} * N is checked against the
// enumeration budget before anything iterates.

uint64_t exhaustive_instance_count(int N, int K, uint64_t budget);
CompositionInstance instance_at(int N, int K, uint64_t index);

std::vector<uint64_t> random_function(int N, Rng& rng);
CompositionInstance random_instance(int N, int K, Rng& rng);

// ---------------------------------------------------------------------------
// Line-oriented text format: "N K a" then K lines of N integers.

std::string format_instance(const CompositionInstance& inst);
CompositionInstance parse_instance(const std::string& text);

}  // namespace ssmlab
