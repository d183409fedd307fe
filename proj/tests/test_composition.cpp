#include <set>
#include <string>

#include "doctest.h"
#include "ssmlab/composition.hpp"
#include "ssmlab/errors.hpp"
#include "ssmlab/rng.hpp"

using namespace ssmlab;

namespace {

CompositionInstance make(int N, int K, uint64_t a, std::vector<std::vector<uint64_t>> tables) {
  CompositionInstance inst;
  inst.N = N;
  inst.K = K;
  inst.a = a;
  inst.tables = std::move(tables);
  return inst;
}

// idx in [0, N^N), decoded base N into the N table entries.
std::vector<uint64_t> function_at(int N, uint64_t idx) {
  std::vector<uint64_t> f(static_cast<size_t>(N));
  for (int j = 0; j < N; ++j) {
    f[static_cast<size_t>(j)] = 1 + idx % uint64_t(N);
    idx /= uint64_t(N);
  }
  return f;
}

uint64_t function_count(int N) {
  uint64_t count = 1;
  for (int i = 0; i < N; ++i) count *= uint64_t(N);
  return count;
}

}  // namespace

TEST_CASE("composition evaluation") {
  const CompositionInstance inst = make(3, 2, 2, {{3, 1, 2}, {2, 3, 1}});
  const EvalResult r = eval_composition(inst);
  CHECK(r.value == 2);
  CHECK(r.chain == std::vector<uint64_t>{2, 1, 2});

  SUBCASE("identity tables return a") {
    for (uint64_t a = 1; a <= 4; ++a) {
      const CompositionInstance id = make(4, 3, a, {{1, 2, 3, 4}, {1, 2, 3, 4}, {1, 2, 3, 4}});
      CHECK(eval_composition(id).value == a);
    }
  }
  SUBCASE("single-element domain") {
    CHECK(eval_composition(make(1, 5, 1, {{1}, {1}, {1}, {1}, {1}})).value == 1);
  }
}

TEST_CASE("row-major encoding") {
  const TokenStream s = encode_row_major(make(2, 1, 2, {{2, 1}}));
  REQUIRE(s.length() == 3);
  CHECK(s.tokens == std::vector<uint64_t>{2, 2, 1});
  const std::vector<RawToken> raw = s.raw();
  REQUIRE(raw.size() == 3);
  CHECK(raw[0] == RawToken(2));
  CHECK(raw[0].kind == TokenKind::Data);

  const TokenStream id = encode_row_major(make(1, 2, 1, {{1}, {1}}));
  CHECK(id.tokens == std::vector<uint64_t>{1, 1, 1});

  SUBCASE("layout formulas") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const int N = int(rng.range(1, 5)), K = int(rng.range(1, 4));
      const CompositionInstance inst = random_instance(N, K, rng);
      const TokenStream stream = encode_row_major(inst);
      REQUIRE(stream.length() == uint64_t(1 + K * N));
      REQUIRE(stream.length() == stream_length(N, K));
      for (int i = 1; i <= K; ++i) {
        CHECK(block_start(N, i) == uint64_t(2 + (i - 1) * N));
        CHECK(block_end(N, i) == uint64_t(1 + i * N));
        CHECK(block_end(N, i) - block_start(N, i) + 1 == uint64_t(N));
        CHECK(stream.blocks[static_cast<size_t>(i - 1)].from == block_start(N, i));
        CHECK(stream.blocks[static_cast<size_t>(i - 1)].to == block_end(N, i));
        for (int j = 1; j <= N; ++j) {
          const size_t pos = static_cast<size_t>(1 + (i - 1) * N + j) - 1;
          CHECK(stream.tokens[pos] == inst.tables[static_cast<size_t>(i - 1)][static_cast<size_t>(j - 1)]);
        }
      }
    }
  }
  SUBCASE("decode inverts encode") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      const int N = int(rng.range(1, 5)), K = int(rng.range(1, 4));
      const CompositionInstance inst = random_instance(N, K, rng);
      const CompositionInstance back = decode_row_major(encode_row_major(inst).tokens, N, K);
      REQUIRE(back.a == inst.a);
      REQUIRE(back.tables == inst.tables);
    }
  }
}

TEST_CASE("instance validation") {
  CHECK_THROWS_AS(make(2, 1, 3, {{1, 2}}).validate(), MismatchError);       // a out of range
  CHECK_THROWS_AS(make(2, 1, 1, {{1, 3}}).validate(), MismatchError);       // entry out of range
  CHECK_THROWS_AS(make(2, 2, 1, {{1, 2}}).validate(), MismatchError);       // missing table
  CHECK_NOTHROW(make(2, 1, 1, {{1, 2}}).validate());
}

TEST_CASE("pointer chasing") {
  SUBCASE("identity functions stay at 1") {
    for (uint64_t k = 1; k <= 5; ++k) {
      const PCInstance inst{2, {1, 2}, {1, 2}, k};
      const PCResult r = pc_eval(inst);
      CHECK(r.pointer == 1);
      CHECK(r.parity == 1);
    }
  }
  SUBCASE("two-step swap example") {
    const PCInstance inst{2, {2, 1}, {1, 2}, 2};
    const PCResult r = pc_eval(inst);
    CHECK(r.pointer == 2);
    CHECK(r.parity == 0);
  }
  SUBCASE("zero steps is the start pointer") {
    const PCResult r = pc_eval(3, {2, 3, 1}, {3, 1, 2}, 0);
    CHECK(r.pointer == 1);
    CHECK(r.parity == 1);
  }
}

TEST_CASE("pointer chasing reduces to composition") {
  SUBCASE("one step") {
    const PCInstance inst{3, {2, 3, 1}, {1, 1, 1}, 1};
    const CompositionInstance comp = pc_to_composition(inst, 1);
    CHECK(comp.a == 1);
    CHECK(comp.K == 1);
    CHECK(comp.tables[0] == inst.f_a);
    CHECK(eval_composition(comp).value == 2);  // f_a(1)
  }
  SUBCASE("identity tables") {
    for (int K = 1; K <= 4; ++K) {
      const PCInstance inst{2, {1, 2}, {1, 2}, uint64_t(K)};
      CHECK(eval_composition(pc_to_composition(inst, K)).value == 1);
    }
  }
  SUBCASE("exhaustive consistency at small sizes") {
    for (int N = 1; N <= 3; ++N) {
      const uint64_t tables = function_count(N);
      for (uint64_t fa = 0; fa < tables; ++fa)
        for (uint64_t fb = 0; fb < tables; ++fb)
          for (uint64_t k = 1; k <= 4; ++k) {
            const PCInstance inst{N, function_at(N, fa), function_at(N, fb), k};
            const PCResult want = pc_eval(inst);
            const EvalResult got = eval_composition(pc_to_composition(inst, int(k)));
            REQUIRE(got.value == want.pointer);
            REQUIRE(int(got.value % 2) == want.parity);
          }
    }
  }
}

TEST_CASE("instance enumeration") {
  CHECK(exhaustive_instance_count(2, 1, default_budget()) == 8);
  CHECK(exhaustive_instance_count(1, 3, default_budget()) == 1);
  CHECK(exhaustive_instance_count(2, 2, default_budget()) == 32);

  SUBCASE("every index yields a distinct valid instance") {
    std::set<std::string> seen;
    for (uint64_t idx = 0; idx < 32; ++idx) {
      const CompositionInstance inst = instance_at(2, 2, idx);
      CHECK_NOTHROW(inst.validate());
      seen.insert(format_instance(inst));
    }
    CHECK(seen.size() == 32);
  }
  SUBCASE("budget guards the blowup") {
    CHECK_THROWS_AS(exhaustive_instance_count(8, 8, 1 << 20), BudgetError);
  }
  SUBCASE("random instances are seed-deterministic") {
    Rng a(7), b(7);
    for (int i = 0; i < 100; ++i) {
      const CompositionInstance x = random_instance(3, 2, a);
      const CompositionInstance y = random_instance(3, 2, b);
      REQUIRE(x.a == y.a);
      REQUIRE(x.tables == y.tables);
    }
  }
}

TEST_CASE("instance text format") {
  const CompositionInstance inst = make(3, 2, 2, {{3, 1, 2}, {2, 3, 1}});
  const std::string text = format_instance(inst);
  CHECK(text == "3 2 2\n3 1 2\n2 3 1\n");
  const CompositionInstance back = parse_instance(text);
  CHECK(back.N == 3);
  CHECK(back.K == 2);
  CHECK(back.a == 2);
  CHECK(back.tables == inst.tables);

  CHECK_THROWS_AS(parse_instance("3 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_instance("2 1 1\n1 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_instance("not numbers"), ConfigError);
}
