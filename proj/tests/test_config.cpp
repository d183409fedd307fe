// JSON round trips for declarative machines: structure, behavior, and
// rejection of what cannot be serialized.

#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "golden_io.hpp"
#include "ssmlab/composition.hpp"
#include "ssmlab/constructions.hpp"
#include "ssmlab/errors.hpp"
#include "ssmlab/machine_config.hpp"
#include "ssmlab/rng.hpp"
#include "ssmlab/ssm.hpp"
#include "ssmlab/suites.hpp"

using namespace ssmlab;

namespace {

bool same_behavior(const SSMachine& a, const SSMachine& b, Rng& rng, uint64_t len) {
  const std::vector<RawToken> stream = random_data_stream(rng, len, a.precision());
  const RunTrace ta = ssm_run(a, stream);
  const RunTrace tb = ssm_run(b, stream);
  return trace_to_csv(ta) == trace_to_csv(tb);
}

}  // namespace

TEST_CASE("config round trip is the identity on the JSON form") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const SSMachine m = random_declarative_machine(rng, 1 + int(rng.below(3)),
                                                   1 + int(rng.below(2)), 1 + int(rng.below(3)),
                                                   rng.below(2) == 0);
    const nlohmann::ordered_json config = machine_to_config(m);
    const SSMachine back = machine_from_config(config);
    CHECK(machine_to_config(back) == config);
    CHECK(back.layers() == m.layers());
    CHECK(back.dim() == m.dim());
    CHECK(back.precision().bits() == m.precision().bits());
    CHECK(back.token_width() == m.token_width());
    CHECK(same_behavior(m, back, rng, 1 + rng.below(8)));
  }
}

TEST_CASE("built machines survive the round trip") {
  Rng rng(42);

  SUBCASE("composition solver") {
    const CompositionInstance inst = instance_at(3, 2, 100);
    const SSMachine m = build_composition_ssm(3, 2);
    const SSMachine back = machine_from_config_string(machine_to_config_string(m));
    const std::vector<RawToken> stream = encode_row_major(inst).raw();
    const RunTrace ta = ssm_run(m, stream);
    const RunTrace tb = ssm_run(back, stream);
    CHECK(trace_to_csv(ta) == trace_to_csv(tb));
    CHECK(back.expected_length == m.expected_length);
  }

  SUBCASE("universal affine machine") {
    const SSMachine m = universal_affine_machine(2, 2);
    const SSMachine back = machine_from_config_string(machine_to_config_string(m));
    CHECK(machine_to_config(back) == machine_to_config(m));
  }

  SUBCASE("mod-8 counter") {
    const SSMachine m = mod_counter_machine();
    const SSMachine back = machine_from_config_string(machine_to_config_string(m));
    const std::vector<RawToken> stream = {RawToken(5), RawToken(0), RawToken(0)};
    CHECK(trace_to_csv(ssm_run(m, stream)) == trace_to_csv(ssm_run(back, stream)));
  }
}

TEST_CASE("config strings are stable") {
  const std::string counter = machine_to_config_string(mod_counter_machine());
  CHECK(counter == golden::pin("mod_counter_config.json", counter));

  const std::string solver = machine_to_config_string(build_composition_ssm(2, 2));
  CHECK(solver == golden::pin("composition_n2_k2_config.json", solver));
}

TEST_CASE("programmatic machines cannot be serialized") {
  const StreamingAlgorithm alg = streaming_composition_alg(2, 2);
  const CoTMachine cm = streaming_to_cot_ssm(alg, 1, 4, 1);
  CHECK_THROWS_AS(machine_to_config(cm.base), MismatchError);
}

TEST_CASE("malformed configs are rejected") {
  CHECK_THROWS_AS(machine_from_config_string("not json at all"), ConfigError);
  CHECK_THROWS_AS(machine_from_config_string("{}"), ConfigError);
  CHECK_THROWS_AS(
      machine_from_config_string(
          R"({"layers": 0, "dim": 1, "precision": 3, "token_width": 1})"),
      ConfigError);

  // A valid config with one field corrupted.
  nlohmann::ordered_json config = machine_to_config(mod_counter_machine());
  config["rules"] = "nope";
  CHECK_THROWS_AS(machine_from_config(config), ConfigError);
}
