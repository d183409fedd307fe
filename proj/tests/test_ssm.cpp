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

// d=1 machine whose single layer keeps h' = a*h + u with constant a, u.
SSMachine scalar_machine(uint64_t a, uint64_t u, int p, std::vector<uint64_t> init) {
  const Precision prec(p);
  RingMatrix A = RingMatrix::zero(1, 1, prec);
  A.set(0, 0, a);
  std::vector<LayerRule> rules;
  rules.emplace_back(TransitionSpec{A, {}}, InjectSpec{RingVector(prec, {u}), {}},
                     StateReadout{});
  return SSMachine(MachineShape{1, 1, prec, 1}, Embedder(WidenEmbed{}), std::move(rules),
                   {RingVector(prec, std::move(init))});
}

}  // namespace

TEST_CASE("step keeps a frozen state") {
  const SSMachine m = scalar_machine(1, 0, 3, {5});
  const Token token = Token::zero(TokenKind::Data, 1, Precision(3));
  const StepResult r = ssm_step(m, m.initial_states(), token, 1);
  CHECK(r.states[0] == RingVector(Precision(3), {5}));
  CHECK(r.outputs[0].payload == RingVector(Precision(3), {5}));
}

TEST_CASE("step loads the payload through a matrix injection") {
  const Precision prec(3);
  std::vector<LayerRule> rules;
  rules.emplace_back(TransitionSpec{RingMatrix::zero(1, 1, prec), {}},
                     InjectSpec{RingMatrix::identity(1, prec), {}}, StateReadout{});
  const SSMachine m(MachineShape{1, 1, prec, 1}, Embedder(WidenEmbed{}), std::move(rules));
  const StepResult r =
      ssm_step(m, m.initial_states(), Token(TokenKind::Data, RingVector(prec, {3})), 1);
  CHECK(r.states[0] == RingVector(prec, {3}));
}

TEST_CASE("composition machine loads a at t=1") {
  const SSMachine m = build_composition_ssm(2, 1);
  CompositionInstance inst;
  inst.N = 2;
  inst.K = 1;
  inst.a = 2;
  inst.tables = {{2, 1}};
  const RunTrace trace = ssm_run(m, encode_row_major(inst).raw());
  CHECK(trace.state(1, 1)[0] == 2);
}

TEST_CASE("constant machine stays at zero") {
  const SSMachine m = scalar_machine(1, 0, 3, {0});
  const std::vector<RawToken> stream{RawToken(5), RawToken(1), RawToken(7)};
  const RunTrace trace = ssm_run(m, stream);
  for (uint64_t t = 0; t <= trace.length; ++t) CHECK(trace.state(1, t)[0] == 0);
}

TEST_CASE("run evaluates the composition example streams") {
  CompositionInstance inst;
  inst.N = 3;
  inst.K = 2;
  inst.a = 2;
  inst.tables = {{3, 1, 2}, {2, 3, 1}};
  const SSMachine m = build_composition_ssm(3, 2);
  const RunTrace trace = ssm_run(m, encode_row_major(inst).raw());
  REQUIRE(trace.final_output.has_value());
  CHECK(trace.final_output->payload[0] == 2);

  CompositionInstance idinst;
  idinst.N = 2;
  idinst.K = 1;
  idinst.a = 1;
  idinst.tables = {{1, 2}};
  CHECK(ssm_output(build_composition_ssm(2, 1), encode_row_major(idinst).raw()).payload[0] == 1);
}

TEST_CASE("empty stream is rejected") {
  const SSMachine m = scalar_machine(1, 0, 3, {0});
  CHECK_THROWS_AS(ssm_output(m, std::vector<RawToken>{}), StreamError);
}

TEST_CASE("widen embed checks precision") {
  const SSMachine m = scalar_machine(1, 0, 2, {0});
  const std::vector<RawToken> stream{RawToken(9)};  // 9 > 3
  CHECK_THROWS_AS(ssm_run(m, stream), StreamError);
}

TEST_CASE("programmatic rules are shape-checked") {
  const Precision prec(2);
  std::vector<LayerRule> rules;
  rules.push_back(LayerRule::programmatic(
      [](const StepContext&, const Token&) { return RingMatrix::identity(2, Precision(2)); },
      [](const StepContext&, const Token&) { return RingVector::zero(1, Precision(2)); },
      [](const StepContext&, const RingVector& h, const Token&) {
        return Token(TokenKind::Data, h);
      }));
  const SSMachine m(MachineShape{1, 1, prec, 1}, Embedder(WidenEmbed{}), std::move(rules));
  CHECK_THROWS_AS(ssm_run(m, std::vector<RawToken>{RawToken(1)}), MismatchError);
}

TEST_CASE("block summary composes interval rules") {
  const Precision prec(3);
  SUBCASE("identity transitions accumulate the injections") {
    const Precision p1(1);
    std::vector<IntervalCase<InjectValue>> cases;
    cases.push_back({1, 1, InjectValue{RingVector(p1, {1, 0})}});
    cases.push_back({2, 2, InjectValue{RingVector(p1, {1, 1})}});
    std::vector<LayerRule> rules;
    rules.emplace_back(TransitionSpec{RingMatrix::identity(2, p1), {}},
                       InjectSpec{RingVector::zero(2, p1), std::move(cases)}, StateReadout{});
    const SSMachine m(MachineShape{1, 2, p1, 2}, Embedder(WidenEmbed{}), std::move(rules));
    const RunTrace trace = ssm_run(m, std::vector<RawToken>{RawToken(0), RawToken(0)});
    const AffineMap summary = block_summary(m, 1, 1, 2, trace.embedded, 2);
    CHECK(summary.A == RingMatrix::identity(2, p1));
    CHECK(summary.b == RingVector(p1, {0, 1}));  // b1 + b2 over F_2
  }
  SUBCASE("two-token product example") {
    std::vector<IntervalCase<TransitionValue>> tcases;
    tcases.push_back({1, 1, TransitionValue{RingMatrix::from_rows(prec, {{2}})}});
    tcases.push_back({2, 2, TransitionValue{RingMatrix::from_rows(prec, {{3}})}});
    std::vector<LayerRule> rules;
    rules.emplace_back(TransitionSpec{RingMatrix::identity(1, prec), std::move(tcases)},
                       InjectSpec{RingVector(prec, {1}), {}}, StateReadout{});
    const SSMachine m(MachineShape{1, 1, prec, 1}, Embedder(WidenEmbed{}), std::move(rules));
    const RunTrace trace = ssm_run(m, std::vector<RawToken>{RawToken(0), RawToken(0)});
    const AffineMap summary = block_summary(m, 1, 1, 2, trace.embedded, 2);
    CHECK(summary.A.at(0, 0) == 6);
    CHECK(summary.b[0] == 4);
    CHECK(apply(summary, m.initial_state(1)) == trace.state(1, 2));
  }
  SUBCASE("empty interval is the identity") {
    const SSMachine m = scalar_machine(3, 1, 3, {0});
    const AffineMap summary = block_summary(m, 1, 5, 4, {}, 8);
    CHECK(summary.A == RingMatrix::identity(1, Precision(3)));
    CHECK(summary.b == RingVector::zero(1, Precision(3)));
  }
}

TEST_CASE("summaries match traces on random machines") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const int layers = int(rng.range(1, 3));
    const int dim = int(rng.range(1, 3));
    const SSMachine m =
        random_declarative_machine(rng, layers, dim, int(rng.range(1, 3)), false);
    const uint64_t n = rng.range(2, 12);
    const std::vector<RawToken> stream = random_data_stream(rng, n, m.precision());
    const RunTrace trace = ssm_run(m, stream);

    for (int layer = 1; layer <= layers; ++layer) {
      const uint64_t from = rng.range(1, n);
      const uint64_t to = rng.range(from, n);
      std::vector<Token> inputs;
      for (uint64_t t = from; t <= to; ++t)
        inputs.push_back(layer == 1 ? trace.embedded[size_t(t - 1)]
                                    : trace.output(layer - 1, t));
      const AffineMap summary = block_summary(m, layer, from, to, inputs, n);
      REQUIRE(apply(summary, trace.state(layer, from - 1)) == trace.state(layer, to));

      // Splitting: composing adjacent halves gives the whole interval.
      const uint64_t mid = from + (to - from) / 2;
      const std::span<const Token> all(inputs);
      const AffineMap left = block_summary(m, layer, from, mid, all.first(mid - from + 1), n);
      const AffineMap right = block_summary(m, layer, mid + 1, to, all.subspan(mid - from + 1), n);
      const AffineMap whole = compose(right, left);
      REQUIRE(whole == summary);
    }
    REQUIRE(check_trace_recurrence(m, trace).empty());
  }
}

TEST_CASE("runs are deterministic") {
  Rng rng(47);
  const SSMachine m = random_declarative_machine(rng, 2, 2, 2, false);
  const std::vector<RawToken> stream = random_data_stream(rng, 9, m.precision());
  const std::string first = trace_to_csv(ssm_run(m, stream));
  const std::string second = trace_to_csv(ssm_run(m, stream));
  CHECK(first == second);
  CHECK(first.find("layer,time") == 0);
}

TEST_CASE("expected length is enforced") {
  SSMachine m = scalar_machine(1, 0, 3, {0});
  m.expected_length = 2;
  CHECK_THROWS_AS(ssm_run(m, std::vector<RawToken>{RawToken(1)}), StreamError);
  CHECK_NOTHROW(ssm_run(m, std::vector<RawToken>{RawToken(1), RawToken(2)}));
}
