#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "ssmlab/composition.hpp"
#include "ssmlab/cot.hpp"
#include "ssmlab/protocol.hpp"
#include "ssmlab/rng.hpp"
#include "ssmlab/ssm.hpp"
#include "ssmlab/sweep.hpp"

namespace ssmlab {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string details;
};

struct SuiteReport {
  std::string name;
  uint64_t seed = 0;
  std::vector<CheckResult> checks;

  bool pass() const;
};

nlohmann::ordered_json suite_to_json(const SuiteReport& report);
nlohmann::ordered_json suites_to_json(const std::vector<SuiteReport>& reports);

SuiteReport run_algebra_suite(ExecMode mode = ExecMode::Serial);
SuiteReport run_constructions_suite(uint64_t seed, ExecMode mode = ExecMode::Serial);
SuiteReport run_protocol_suite(uint64_t seed, ExecMode mode = ExecMode::Serial);
SuiteReport run_cot_suite(uint64_t seed, ExecMode mode = ExecMode::Serial);

// selector: all | algebra | constructions | protocol | cot. Unknown names
// raise ConfigError.
std::vector<SuiteReport> run_suites(const std::string& selector, uint64_t seed,
                                    ExecMode mode = ExecMode::Serial);

// ---------------------------------------------------------------------------
// Shared random model builders (suites, acceptance, benchmarks).

// Fully declarative machine of the given shape with a WidenEmbed embedder;
// token width >= dim. When state_readout_final is set the last layer uses the
// state readout so the machine is streaming-convertible.
SSMachine random_declarative_machine(Rng& rng, int layers, int dim, int prec,
                                     bool state_readout_final);

// Data tokens, one value per token, values < 2^p.
std::vector<RawToken> random_data_stream(Rng& rng, uint64_t len, Precision prec);

// Deterministic policy emitting up to two single-value thoughts per
// position, decided from (time, final-layer state) only, never exo_index.
ThoughtPolicy random_thought_policy(Rng& rng, Precision prec);

CoTMachine random_cot_machine(Rng& rng, CotMode mode);

// ---------------------------------------------------------------------------
// Reusable end-to-end checks; empty string means success.

// Runs build_composition_ssm's machine on the instance and checks the
// output, the per-layer pass-through recurrence h_{i+1,t} = v_i for
// t >= e_i (zero before s_i), and the unique nonzero pass-through per
// block.
std::string composition_trace_violations(const SSMachine& machine, const CompositionInstance& inst);

// Compiled forward protocol: output equals ssm_output, every payload is
// exactly (d^2+d)p bits, causality validation passes, and recovered prefix
// states match the trace.
std::string compiled_protocol_violations(const SSMachine& machine, const CompositionInstance& inst);

// Two-party shape: alternation starting with Alice, <= L+1 substantive
// messages, last-speaker parity, padding to K-1 messages, bit totals.
std::string two_party_violations(const TwoPartyTranscript& tp, int layers, int players);

// Triangle: run_cot == derived streaming algorithm == recompiled
// single-layer machine; the recompiled run takes one thought per exogenous
// token and 2n steps.
std::string cot_triangle_violations(const CoTMachine& machine,
                                    std::span<const std::vector<RawToken>> streams,
                                    const CoTOptions& opts);

// Width/precision round trip at target_width; checks output equality and
// the reported precision ceil(total/width).
std::string roundtrip_violations(const CoTMachine& machine,
                                 std::span<const std::vector<RawToken>> streams,
                                 const CoTOptions& opts, int target_width);

// Offline transcripts are bit-identical to the null-policy transcript and
// the local continuation matches run_cot.
std::string offline_compile_violations(const CoTMachine& machine, const CompositionInstance& inst);

}  // namespace ssmlab
