#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "golden_io.hpp"
#include "json.hpp"
#include "ssmlab/composition.hpp"
#include "ssmlab/constructions.hpp"
#include "ssmlab/errors.hpp"
#include "ssmlab/protocol.hpp"
#include "ssmlab/rng.hpp"
#include "ssmlab/suites.hpp"

using namespace ssmlab;

TEST_CASE("stream partition") {
  CompositionInstance inst;
  inst.N = 2;
  inst.K = 2;
  inst.a = 1;
  inst.tables = {{1, 2}, {2, 1}};
  const auto parts = partition_stream(encode_row_major(inst), 2);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0] == Interval{1, 3});
  CHECK(parts[1] == Interval{4, 5});

  SUBCASE("single player owns everything") {
    CompositionInstance one;
    one.N = 3;
    one.K = 1;
    one.a = 2;
    one.tables = {{1, 1, 1}};
    const auto single = partition_stream(encode_row_major(one), 1);
    REQUIRE(single.size() == 1);
    CHECK(single[0] == Interval{1, 4});
  }
  SUBCASE("player count must match the blocks") {
    CHECK_THROWS_AS(partition_stream(encode_row_major(inst), 3), MismatchError);
  }
}

TEST_CASE("forward protocol compiler") {
  Rng rng(17);
  SUBCASE("matches the machine on composition instances") {
    const SSMachine m = build_composition_ssm(3, 4);
    for (int trial = 0; trial < 10; ++trial) {
      const CompositionInstance inst = random_instance(3, 4, rng);
      REQUIRE(compiled_protocol_violations(m, inst) == "");
    }
  }
  SUBCASE("message payloads carry one affine map each") {
    const SSMachine m = random_declarative_machine(rng, 2, 2, 4, false);
    const ForwardTranscript t = compile_ssm_forward_protocol(m, random_instance(3, 3, rng));
    REQUIRE(!t.messages.empty());
    for (const Message& msg : t.messages) CHECK(msg.bit_count() == 24);
    CHECK(t.max_message_bits == 24);
    CHECK(t.total_bits == 24 * t.messages.size());
  }
  SUBCASE("k=1 sends nothing") {
    const SSMachine m = build_composition_ssm(2, 1);
    const ForwardTranscript t = compile_ssm_forward_protocol(m, random_instance(2, 1, rng));
    CHECK(t.messages.empty());
    CHECK(t.total_bits == 0);
    CHECK(validate_causality(t).ok());
    CHECK(t.final_output == ssm_output(m, t.stream.raw()));
  }
  SUBCASE("causality flags a message copied across the round") {
    const SSMachine m = build_composition_ssm(2, 3);
    ForwardTranscript t = compile_ssm_forward_protocol(m, random_instance(2, 3, rng));
    REQUIRE(t.messages.size() >= 2);
    BitString tampered;
    for (size_t b = 0; b < t.messages[1].payload.size(); ++b)
      tampered.append_bit(b == 0 ? !t.messages[1].payload.read_bit(0)
                                 : t.messages[1].payload.read_bit(b));
    if (tampered == t.messages[0].payload) tampered.append_bit(false);
    t.messages[0].payload = tampered;
    CHECK_FALSE(validate_causality(t).ok());
  }
  SUBCASE("snapshots recover the trace states") {
    const SSMachine m = build_composition_ssm(2, 3);
    const CompositionInstance inst = random_instance(2, 3, rng);
    const ForwardTranscript t = compile_ssm_forward_protocol(m, inst);
    const RunTrace trace = ssm_run(m, t.stream.raw());
    REQUIRE(!t.snapshots.empty());
    for (const PrefixSnapshot& snap : t.snapshots) {
      const uint64_t from = t.intervals[size_t(snap.player - 1)].from;
      REQUIRE(snap.state == trace.state(snap.round, from - 1));
    }
  }
  SUBCASE("transcripts export as JSON") {
    const SSMachine m = build_composition_ssm(2, 2);
    const ForwardTranscript t = compile_ssm_forward_protocol(m, random_instance(2, 2, rng));
    const nlohmann::json doc = nlohmann::json::parse(transcript_to_json(t));
    CHECK(doc.contains("rounds"));
    CHECK(doc.contains("messages"));
    CHECK(doc["players"] == 2);
  }
  SUBCASE("summary CSV shape") {
    const SSMachine m = build_composition_ssm(2, 2);
    const ForwardTranscript t = compile_ssm_forward_protocol(m, random_instance(2, 2, rng));
    const Token oracle = ssm_output(m, t.stream.raw());
    const std::string header = protocol_csv_header();
    const std::string row = protocol_csv_row(2, 2, t, oracle);
    CHECK(std::count(header.begin(), header.end(), ',') ==
          std::count(row.begin(), row.end(), ','));
    REQUIRE(row.size() >= 3);
    CHECK(row.substr(row.size() - 3) == ",1\n");  // match flag set
  }
}

TEST_CASE("two-party serialization") {
  Rng rng(19);
  SUBCASE("schedule across the stated grid") {
    for (int L = 1; L <= 5; ++L) {
      const int K = L + 3;
      const SSMachine m = random_declarative_machine(rng, L, 1, 2, false);
      const ForwardTranscript t = compile_ssm_forward_protocol(m, random_instance(1, K, rng));
      const TwoPartyTranscript tp = serialize_two_party(t);
      REQUIRE(two_party_violations(tp, L, K) == "");
      CHECK(tp.substantive_count == L + 1);
      CHECK(validate_causality(tp).ok());
    }
  }
  SUBCASE("even K-L gap is rejected") {
    const SSMachine m = random_declarative_machine(rng, 2, 1, 2, false);
    const ForwardTranscript t = compile_ssm_forward_protocol(m, random_instance(1, 2, rng));
    CHECK_THROWS_AS(serialize_two_party(t), MismatchError);
  }
  SUBCASE("parity matches the pointer-chasing oracle") {
    for (int trial = 0; trial < 20; ++trial) {
      const int N = int(rng.range(1, 8));
      const PCInstance pc{N, random_function(N, rng), random_function(N, rng),
                          rng.range(1, 4)};
      const CompositionInstance inst = pc_to_composition(pc, int(pc.k));
      const SSMachine m = build_composition_ssm(inst.N, inst.K);
      const TwoPartyTranscript tp =
          serialize_two_party(compile_ssm_forward_protocol(m, inst));
      REQUIRE(tp.parity_bit == pc_eval(pc).parity);
      REQUIRE(two_party_violations(tp, m.layers(), inst.K) == "");
    }
  }
  SUBCASE("two-party JSON export") {
    const SSMachine m = build_composition_ssm(1, 3);
    const TwoPartyTranscript tp = serialize_two_party(
        compile_ssm_forward_protocol(m, random_instance(1, 3, rng)));
    const nlohmann::json doc = nlohmann::json::parse(transcript_to_json(tp));
    CHECK(doc.contains("messages"));
    CHECK(doc["parity_bit"] == tp.parity_bit);
  }
}

TEST_CASE("one-round communication oracle") {
  CHECK(min_one_round_cc(1, 3).bits == 0);
  for (const int N : {2, 3, 4}) {
    const OneRoundCC r = min_one_round_cc(N, 1);
    CHECK(r.bits == 1);
    CHECK(r.classes == 2);
  }
  SUBCASE("exact class count at N=3, k=2") {
    const OneRoundCC r = min_one_round_cc(3, 2);
    CHECK(r.functions == 27);
    std::ostringstream s;
    s << "classes=" << r.classes << " bits=" << r.bits << "\n";
    CHECK(golden::pin("one_round_cc_n3_k2.txt", s.str()) == s.str());
  }
  SUBCASE("budget guards the enumeration") {
    CHECK_THROWS_AS(min_one_round_cc(16, 2, 1 << 10), BudgetError);
  }
}
