#include <vector>

#include "doctest.h"
#include "ssmlab/composition.hpp"
#include "ssmlab/constructions.hpp"
#include "ssmlab/errors.hpp"
#include "ssmlab/rng.hpp"
#include "ssmlab/ssm.hpp"
#include "ssmlab/suites.hpp"

using namespace ssmlab;

namespace {

CompositionInstance example_n3() {
  CompositionInstance inst;
  inst.N = 3;
  inst.K = 2;
  inst.a = 2;
  inst.tables = {{3, 1, 2}, {2, 3, 1}};
  return inst;
}

}  // namespace

TEST_CASE("composition machine shape and outputs") {
  const SSMachine m = build_composition_ssm(3, 2);
  CHECK(m.layers() == 3);
  CHECK(m.dim() == 1);
  CHECK(m.precision().bits() == ceil_log2(4) + 1);
  CHECK(m.expected_length == stream_length(3, 2));

  CHECK(ssm_output(m, encode_row_major(example_n3()).raw()).payload[0] == 2);

  SUBCASE("identity tables return the first symbol") {
    CompositionInstance inst;
    inst.N = 3;
    inst.K = 2;
    inst.tables = {{1, 2, 3}, {1, 2, 3}};
    for (uint64_t a = 1; a <= 3; ++a) {
      inst.a = a;
      CHECK(ssm_output(m, encode_row_major(inst).raw()).payload[0] == a);
    }
  }
  SUBCASE("wrong-length streams are rejected") {
    CHECK_THROWS_AS(ssm_output(m, std::vector<RawToken>{RawToken(1)}), StreamError);
  }
}

TEST_CASE("composition machine satisfies the layer invariants") {
  Rng rng(61);
  for (int trial = 0; trial < 25; ++trial) {
    const int N = int(rng.range(1, 4));
    const int K = int(rng.range(1, 4));
    const SSMachine m = build_composition_ssm(N, K);
    const CompositionInstance inst = random_instance(N, K, rng);
    REQUIRE(composition_trace_violations(m, inst) == "");
  }
}

TEST_CASE("streaming composition algorithm") {
  const StreamingAlgorithm alg = streaming_composition_alg(3, 2);
  CHECK(alg.state_bits == 4);
  const StreamingTrace t = run_streaming(alg, encode_row_major(example_n3()).raw());
  CHECK(t.output == std::vector<uint64_t>{2});
  CHECK(t.memories.size() == stream_length(3, 2) + 1);

  SUBCASE("identity tables") {
    CompositionInstance inst;
    inst.N = 3;
    inst.K = 2;
    inst.a = 3;
    inst.tables = {{1, 2, 3}, {1, 2, 3}};
    const StreamingTrace r = run_streaming(alg, encode_row_major(inst).raw());
    CHECK(r.output == std::vector<uint64_t>{3});
  }
  SUBCASE("exhaustive small instances") {
    for (int N = 1; N <= 2; ++N)
      for (int K = 1; K <= 3; ++K) {
        const StreamingAlgorithm a = streaming_composition_alg(N, K);
        const uint64_t count = exhaustive_instance_count(N, K, default_budget());
        for (uint64_t idx = 0; idx < count; ++idx) {
          const CompositionInstance inst = instance_at(N, K, idx);
          const StreamingTrace r = run_streaming(a, encode_row_major(inst).raw());
          REQUIRE(r.output == std::vector<uint64_t>{eval_composition(inst).value});
        }
      }
  }
  SUBCASE("memory accounting") {
    CHECK(streaming_composition_alg(256, 2).state_bits == 18);
    CHECK(streaming_composition_alg(1, 1).state_bits == 2);
    // 1 idle code + N(N+1)/2 scanning + N(N-1) updated codes.
    CHECK(streaming_composition_states(3) == 1 + 6 + 6);
    CHECK(streaming_composition_states(256) == 1 + 32896 + 65280);
  }
  SUBCASE("exact powers of two minus one do not fit") {
    CHECK_THROWS_AS(streaming_composition_alg(7, 2), BudgetError);
    CHECK_THROWS_AS(streaming_composition_alg(15, 1), BudgetError);
    // The state count genuinely exceeds the bit budget there.
    CHECK(streaming_composition_states(7) > (uint64_t{1} << (2 * ceil_log2(8))));
  }
  SUBCASE("wrong-length streams are rejected") {
    CHECK_THROWS_AS(run_streaming(alg, std::vector<RawToken>{RawToken(1)}), StreamError);
  }
}

TEST_CASE("universal affine machine") {
  SUBCASE("identity map fixes the zero vector") {
    const SSMachine m = universal_affine_machine(2, 1);
    const std::vector<RawToken> stream{
        RawToken(TokenKind::Data, {0, 0}),
        RawToken(TokenKind::Data, {1, 0, 0, 1, 0, 0}),
        RawToken::read_marker()};
    const Token out = ssm_output(m, stream);
    CHECK(out.payload[0] == 0);
    CHECK(out.payload[1] == 0);
  }
  SUBCASE("swap-and-shift example") {
    const SSMachine m = universal_affine_machine(2, 1);
    const std::vector<RawToken> stream{
        RawToken(TokenKind::Data, {1, 0}),
        RawToken(TokenKind::Data, {0, 1, 1, 0, 1, 1}),
        RawToken::read_marker()};
    const Token out = ssm_output(m, stream);
    CHECK(out.payload[0] == 1);
    CHECK(out.payload[1] == 0);
  }
  SUBCASE("malformed streams are rejected") {
    const SSMachine m = universal_affine_machine(2, 1);
    CHECK_THROWS_AS(ssm_output(m, std::vector<RawToken>{RawToken(TokenKind::Data, {0, 0}),
                                                        RawToken(TokenKind::Data, {1}),
                                                        RawToken::read_marker()}),
                    StreamError);
    CHECK_THROWS_AS(ssm_output(m, std::vector<RawToken>{RawToken(TokenKind::Data, {0, 0}),
                                                        RawToken(TokenKind::Data,
                                                                 {1, 0, 0, 1, 0, 0}),
                                                        RawToken(TokenKind::Data, {0, 0})}),
                    StreamError);
  }
  SUBCASE("full cross product at small sizes") {
    for (const auto& [w, p] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {2, 1}}) {
      const SSMachine m = universal_affine_machine(w, p);
      const Precision prec(p);
      const AffineMapRange maps(w, prec, default_budget());
      for (uint64_t mi = 0; mi < maps.size(); ++mi) {
        const AffineMap map = maps.at(mi);
        std::vector<uint64_t> tvals;
        for (int r = 0; r < w; ++r)
          for (int c = 0; c < w; ++c) tvals.push_back(map.A.at(r, c));
        for (int r = 0; r < w; ++r) tvals.push_back(map.b[size_t(r)]);
        for (uint64_t hi = 0; hi < state_space_size(w, prec); ++hi) {
          const RingVector h = unpack_state(hi, w, prec);
          const std::vector<RawToken> stream{RawToken(TokenKind::Data, h.values()),
                                             RawToken(TokenKind::Data, tvals),
                                             RawToken::read_marker()};
          const Token out = ssm_output(m, stream);
          const RingVector want = apply(map, h);
          for (int r = 0; r < w; ++r) REQUIRE(out.payload[size_t(r)] == want[size_t(r)]);
        }
      }
    }
  }
}

TEST_CASE("mod-8 counter machine") {
  const SSMachine m = mod_counter_machine();
  CHECK(m.dim() == 1);
  CHECK(m.precision().bits() == 3);
  auto outputs = [&](const std::vector<uint64_t>& values) {
    std::vector<RawToken> stream;
    for (const uint64_t v : values) stream.push_back(RawToken(v));
    const RunTrace trace = ssm_run(m, stream);
    std::vector<uint64_t> out;
    for (uint64_t t = 1; t <= trace.length; ++t) out.push_back(trace.output(1, t).payload[0]);
    return out;
  };
  CHECK(outputs({5, 0, 0}) == std::vector<uint64_t>{5, 6, 7});
  CHECK(outputs({7, 0}) == std::vector<uint64_t>{7, 0});
  CHECK(outputs({0}) == std::vector<uint64_t>{0});
  // Eight increments return to the loaded value.
  CHECK(outputs({3, 0, 0, 0, 0, 0, 0, 0, 0}).back() == 3);
}
