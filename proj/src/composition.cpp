#include "ssmlab/composition.hpp"

#include <sstream>

#include "ssmlab/errors.hpp"

namespace ssmlab {

namespace {

void check_table(int N, const std::vector<uint64_t>& f, const char* what) {
  if (int(f.size()) != N)
    throw MismatchError(std::string(what) + ": table has " + std::to_string(f.size()) +
                        " entries, expected " + std::to_string(N));
  for (uint64_t v : f)
    if (v < 1 || v > uint64_t(N))
      throw MismatchError(std::string(what) + ": value " + std::to_string(v) +
                          " outside [1, " + std::to_string(N) + "]");
}

}  // namespace

void CompositionInstance::validate() const {
  if (N < 1) throw MismatchError("instance: N must be positive");
  if (K < 1) throw MismatchError("instance: K must be positive");
  if (a < 1 || a > uint64_t(N))
    throw MismatchError("instance: query " + std::to_string(a) + " outside [1, " +
                        std::to_string(N) + "]");
  if (int(tables.size()) != K)
    throw MismatchError("instance: " + std::to_string(tables.size()) + " tables for K=" +
                        std::to_string(K));
  for (const auto& f : tables) check_table(N, f, "instance");
}

EvalResult eval_composition(const CompositionInstance& inst) {
  inst.validate();
  EvalResult r;
  r.chain.reserve(static_cast<size_t>(inst.K) + 1);
  uint64_t v = inst.a;
  r.chain.push_back(v);
  for (int i = 0; i < inst.K; ++i) {
    v = inst.tables[static_cast<size_t>(i)][static_cast<size_t>(v - 1)];
    r.chain.push_back(v);
  }
  r.value = v;
  return r;
}

uint64_t stream_length(int N, int K) { return 1 + uint64_t(K) * uint64_t(N); }
uint64_t block_start(int N, int i) { return 2 + uint64_t(i - 1) * uint64_t(N); }
uint64_t block_end(int N, int i) { return 1 + uint64_t(i) * uint64_t(N); }

std::vector<RawToken> TokenStream::raw() const {
  std::vector<RawToken> out;
  out.reserve(tokens.size());
  for (uint64_t v : tokens) out.emplace_back(v);
  return out;
}

TokenStream encode_row_major(const CompositionInstance& inst) {
  inst.validate();
  TokenStream s;
  s.tokens.reserve(static_cast<size_t>(stream_length(inst.N, inst.K)));
  s.tokens.push_back(inst.a);
  for (int i = 1; i <= inst.K; ++i) {
    s.blocks.push_back({block_start(inst.N, i), block_end(inst.N, i)});
    for (int j = 1; j <= inst.N; ++j)
      s.tokens.push_back(inst.tables[static_cast<size_t>(i - 1)][static_cast<size_t>(j - 1)]);
  }
  return s;
}

CompositionInstance decode_row_major(const std::vector<uint64_t>& tokens, int N, int K) {
  if (tokens.size() != stream_length(N, K))
    throw StreamError("decode: expected " + std::to_string(stream_length(N, K)) +
                      " tokens, got " + std::to_string(tokens.size()));
  CompositionInstance inst;
  inst.N = N;
  inst.K = K;
  inst.a = tokens[0];
  inst.tables.assign(static_cast<size_t>(K), std::vector<uint64_t>(static_cast<size_t>(N)));
  for (int i = 1; i <= K; ++i)
    for (int j = 1; j <= N; ++j)
      inst.tables[static_cast<size_t>(i - 1)][static_cast<size_t>(j - 1)] = tokens[static_cast<size_t>(block_start(N, i) + j - 2)];
  inst.validate();
  return inst;
}

void PCInstance::validate() const {
  if (N < 1) throw MismatchError("pointer chasing: N must be positive");
  if (k < 1) throw MismatchError("pointer chasing: k must be at least 1");
  check_table(N, f_a, "pointer chasing f_A");
  check_table(N, f_b, "pointer chasing f_B");
}

PCResult pc_eval(int N, const std::vector<uint64_t>& f_a, const std::vector<uint64_t>& f_b,
                 uint64_t k) {
  check_table(N, f_a, "pc_eval f_A");
  check_table(N, f_b, "pc_eval f_B");
  uint64_t pt = 1;
  for (uint64_t r = 1; r <= k; ++r) {
    const auto& f = (r % 2 == 1) ? f_a : f_b;
    pt = f[static_cast<size_t>(pt - 1)];
  }
  return {pt, int(pt % 2)};
}

PCResult pc_eval(const PCInstance& inst) {
  inst.validate();
  return pc_eval(inst.N, inst.f_a, inst.f_b, inst.k);
}

CompositionInstance pc_to_composition(const PCInstance& inst, int K) {
  inst.validate();
  if (K < 1) throw MismatchError("pc_to_composition: K must be positive");
  CompositionInstance out;
  out.N = inst.N;
  out.K = K;
  out.a = 1;
  out.tables.reserve(static_cast<size_t>(K));
  for (int i = 1; i <= K; ++i) out.tables.push_back(i % 2 == 1 ? inst.f_a : inst.f_b);
  return out;
}

uint64_t exhaustive_instance_count(int N, int K, uint64_t budget) {
  // N choices for a times N^{N K} table fillings.
  uint64_t count = uint64_t(N);
  for (int i = 0; i < N * K; ++i) {
    if (count > budget / uint64_t(N) + 1)
      throw BudgetError("exhaustive enumeration of N=" + std::to_string(N) + ", K=" +
                        std::to_string(K) + " exceeds budget " + std::to_string(budget));
    count *= uint64_t(N);
    if (count > budget)
      throw BudgetError("exhaustive enumeration of N=" + std::to_string(N) + ", K=" +
                        std::to_string(K) + " exceeds budget " + std::to_string(budget));
  }
  return count;
}

CompositionInstance instance_at(int N, int K, uint64_t index) {
  CompositionInstance inst;
  inst.N = N;
  inst.K = K;
  inst.a = 1 + index % uint64_t(N);
  index /= uint64_t(N);
  inst.tables.assign(static_cast<size_t>(K), std::vector<uint64_t>(static_cast<size_t>(N)));
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < N; ++j) {
      inst.tables[static_cast<size_t>(i)][static_cast<size_t>(j)] = 1 + index % uint64_t(N);
      index /= uint64_t(N);
    }
  return inst;
}

std::vector<uint64_t> random_function(int N, Rng& rng) {
  std::vector<uint64_t> f(static_cast<size_t>(N));
  for (auto& v : f) v = rng.range(1, uint64_t(N));
  return f;
}

CompositionInstance random_instance(int N, int K, Rng& rng) {
  CompositionInstance inst;
  inst.N = N;
  inst.K = K;
  inst.a = rng.range(1, uint64_t(N));
  inst.tables.reserve(static_cast<size_t>(K));
  for (int i = 0; i < K; ++i) inst.tables.push_back(random_function(N, rng));
  return inst;
}

std::string format_instance(const CompositionInstance& inst) {
  inst.validate();
  std::ostringstream out;
  out << inst.N << ' ' << inst.K << ' ' << inst.a << '\n';
  for (const auto& f : inst.tables) {
    for (size_t j = 0; j < f.size(); ++j) out << (j ? " " : "") << f[j];
    out << '\n';
  }
  return out.str();
}

CompositionInstance parse_instance(const std::string& text) {
  std::istringstream in(text);
  CompositionInstance inst;
  if (!(in >> inst.N >> inst.K >> inst.a))
    throw ConfigError("instance file: expected header line \"N K a\"");
  if (inst.N < 1 || inst.K < 1) throw ConfigError("instance file: N and K must be positive");
  inst.tables.assign(static_cast<size_t>(inst.K), std::vector<uint64_t>(static_cast<size_t>(inst.N)));
  for (int i = 0; i < inst.K; ++i)
    for (int j = 0; j < inst.N; ++j)
      if (!(in >> inst.tables[static_cast<size_t>(i)][static_cast<size_t>(j)]))
        throw ConfigError("instance file: table " + std::to_string(i + 1) + " is truncated");
  uint64_t extra;
  if (in >> extra) throw ConfigError("instance file: trailing values after the last table");
  try {
    inst.validate();
  } catch (const Error& e) {
    // Bad values in a file are a usage problem, not an internal mismatch.
    throw ConfigError(e.what());
  }
  return inst;
}

}  // namespace ssmlab
