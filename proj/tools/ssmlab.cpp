// Batch experiment harness. Subcommands run the verification suites, the
// protocol bit-accounting bench, the width/precision round trip, single
// composition instances, the one-round communication oracle, and the
// affine-order census. All randomness flows from --seed; identical
// config + seed gives byte-identical reports.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ssmlab/algebra_checks.hpp"
#include "ssmlab/composition.hpp"
#include "ssmlab/constructions.hpp"
#include "ssmlab/cot.hpp"
#include "ssmlab/errors.hpp"
#include "ssmlab/machine_config.hpp"
#include "ssmlab/protocol.hpp"
#include "ssmlab/ring.hpp"
#include "ssmlab/rng.hpp"
#include "ssmlab/ssm.hpp"
#include "ssmlab/suites.hpp"
#include "ssmlab/sweep.hpp"

using namespace ssmlab;
using nlohmann::ordered_json;

namespace {

struct GlobalOpts {
  std::string config_path;
  uint64_t seed = 1;
  std::string out_dir;
  std::string format = "json";

  bool csv() const { return format == "csv"; }
};

ordered_json load_config(const std::string& path) {
  if (path.empty()) return ordered_json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return ordered_json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
}

const ordered_json* section(const ordered_json& config, const std::string& name) {
  auto it = config.find(name);
  if (it == config.end()) return nullptr;
  if (!it->is_object()) throw ConfigError("config section '" + name + "' must be an object");
  return &*it;
}

uint64_t u64_or(const ordered_json* sec, const std::string& key, uint64_t def) {
  if (!sec) return def;
  auto it = sec->find(key);
  if (it == sec->end()) return def;
  if (!it->is_number_unsigned()) throw ConfigError("config key '" + key + "' must be unsigned");
  return it->get<uint64_t>();
}

std::vector<int> int_list_or(const ordered_json* sec, const std::string& key,
                             std::vector<int> def) {
  if (!sec) return def;
  auto it = sec->find(key);
  if (it == sec->end()) return def;
  if (!it->is_array()) throw ConfigError("config key '" + key + "' must be an array");
  std::vector<int> out;
  for (const auto& v : *it) {
    if (!v.is_number_unsigned() || v.get<uint64_t>() == 0)
      throw ConfigError("config key '" + key + "' must list positive integers");
    out.push_back(int(v.get<uint64_t>()));
  }
  return out;
}

// Reports are written under --out when given, otherwise to stdout.
void deliver(const GlobalOpts& g, const std::string& filename, const std::string& content) {
  if (g.out_dir.empty()) {
    std::cout << content;
    return;
  }
  std::filesystem::create_directories(g.out_dir);
  const std::string path = g.out_dir + "/" + filename;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << content;
  std::cout << "wrote " << path << "\n";
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += "\"";
  return out;
}

std::string join_u64(const std::vector<uint64_t>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(' ');
    out += std::to_string(v[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// verify

std::string verify_csv(const std::vector<SuiteReport>& reports) {
  std::string out = "suite,check,pass,details\n";
  for (const SuiteReport& r : reports)
    for (const CheckResult& c : r.checks)
      out += r.name + "," + c.name + "," + (c.pass ? "1" : "0") + "," + csv_quote(c.details) +
             "\n";
  return out;
}

int cmd_verify(const GlobalOpts& g, const std::string& suite, ExecMode mode) {
  const std::vector<SuiteReport> reports = run_suites(suite, g.seed, mode);
  bool all_pass = true;
  for (const SuiteReport& r : reports) {
    std::cout << "suite " << r.name << ": " << (r.pass() ? "PASS" : "FAIL") << " ("
              << r.checks.size() << " checks)\n";
    for (const CheckResult& c : r.checks)
      if (!c.pass) std::cout << "  " << c.name << ": FAIL " << c.details << "\n";
    all_pass = all_pass && r.pass();
  }
  const std::string report =
      g.csv() ? verify_csv(reports) : suites_to_json(reports).dump(2) + "\n";
  if (!g.out_dir.empty())
    deliver(g, g.csv() ? "verify_report.csv" : "verify_report.json", report);
  return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// bench-protocol

int cmd_bench_protocol(const GlobalOpts& g, const ordered_json& config) {
  const ordered_json* sec = section(config, "bench_protocol");
  const std::vector<int> ns = int_list_or(sec, "N", {2, 3});
  const std::vector<int> ks = int_list_or(sec, "K", {2, 4});
  const uint64_t random_machines = u64_or(sec, "random_machines", 4);
  const int max_layers = int(u64_or(sec, "max_layers", 3));
  const int max_dim = int(u64_or(sec, "max_dim", 2));
  const int max_prec = int(u64_or(sec, "max_prec", 3));
  if (ns.empty() || ks.empty()) throw ConfigError("bench-protocol: grid must be nonempty");
  if (max_layers < 1 || max_dim < 1 || max_prec < 1)
    throw ConfigError("bench-protocol: shape bounds must be positive");

  Rng rng(derive_seed(g.seed, 0xbe));
  std::string csv = protocol_csv_header();
  std::vector<ordered_json> rows;
  bool all_match = true;

  auto push = [&](int n, int k, const SSMachine& machine, const CompositionInstance& inst) {
    const ForwardTranscript t = compile_ssm_forward_protocol(machine, inst);
    const RunTrace trace = ssm_run(machine, encode_row_major(inst).raw());
    const Token oracle = *trace.final_output;
    csv += protocol_csv_row(n, k, t, oracle);
    const bool match = t.final_output == oracle;
    all_match = all_match && match;
    size_t max_bits = 0;
    size_t total_bits = 0;
    for (const auto& msg : t.messages) {
      max_bits = std::max(max_bits, msg.bit_count());
      total_bits += msg.bit_count();
    }
    ordered_json row;
    row["N"] = n;
    row["K"] = k;
    row["L"] = machine.layers();
    row["d"] = machine.dim();
    row["p"] = machine.precision().bits();
    row["max_message_bits"] = max_bits;
    row["total_bits"] = total_bits;
    row["match"] = match;
    rows.push_back(std::move(row));
  };

  // Grid rows: the composition solver at each (N, K).
  for (int n : ns)
    for (int k : ks) push(n, k, build_composition_ssm(n, k), random_instance(n, k, rng));

  // Random declarative machines run over encoded instances small enough for
  // their precision.
  for (uint64_t i = 0; i < random_machines; ++i) {
    const int p = 1 + int(rng.below(uint64_t(max_prec)));
    const int layers = 1 + int(rng.below(uint64_t(max_layers)));
    const int dim = 1 + int(rng.below(uint64_t(max_dim)));
    const int n = int(std::min<uint64_t>(ns[size_t(rng.below(ns.size()))],
                                         (uint64_t{1} << p) - 1));
    const int k = ks[size_t(rng.below(ks.size()))];
    const SSMachine machine = random_declarative_machine(rng, layers, dim, p, false);
    push(n, k, machine, random_instance(n, k, rng));
  }

  // Machines embedded in the config, each with its instance size.
  if (sec) {
    auto it = sec->find("machines");
    if (it != sec->end()) {
      if (!it->is_array()) throw ConfigError("bench-protocol: 'machines' must be an array");
      for (const auto& entry : *it) {
        if (!entry.is_object() || !entry.contains("machine"))
          throw ConfigError("bench-protocol: machine entries need a 'machine' config");
        const int n = int(u64_or(&entry, "N", 2));
        const int k = int(u64_or(&entry, "K", 2));
        const SSMachine machine = machine_from_config(entry.at("machine"));
        if (uint64_t(n) > machine.precision().mask())
          throw ConfigError("bench-protocol: N exceeds the machine's precision");
        push(n, k, machine, random_instance(n, k, rng));
      }
    }
  }

  if (g.csv()) {
    deliver(g, "bench_protocol.csv", csv);
  } else {
    ordered_json j;
    j["seed"] = g.seed;
    j["rows"] = rows;
    j["all_match"] = all_match;
    deliver(g, "bench_protocol.json", j.dump(2) + "\n");
  }
  return all_match ? 0 : 1;
}

// ---------------------------------------------------------------------------
// cot-roundtrip

int cmd_cot_roundtrip(const GlobalOpts& g, const ordered_json& config) {
  const ordered_json* sec = section(config, "cot_roundtrip");
  const uint64_t machines = u64_or(sec, "machines", 20);
  const uint64_t streams = u64_or(sec, "streams", 50);
  const int target_width = int(u64_or(sec, "target_width", 1));
  const uint64_t max_len = u64_or(sec, "max_len", 12);
  CoTOptions opts;
  opts.horizon = u64_or(sec, "horizon", 96);
  if (machines == 0 || streams == 0 || max_len == 0)
    throw ConfigError("cot-roundtrip: grid must be nonempty");
  if (target_width < 1) throw ConfigError("cot-roundtrip: target width must be positive");

  Rng rng(derive_seed(g.seed, 0xc0));
  uint64_t equal = 0;
  std::vector<ordered_json> rows;
  std::string csv = "machine,layers,dim,prec,width,p_prime,state_bits,counter_bits,total_bits,"
                    "streams,equal\n";

  for (uint64_t m = 0; m < machines; ++m) {
    const CoTMachine cm = random_cot_machine(rng, CotMode::Online);
    const int d_src = cm.base.dim();
    const RoundtripResult rt = width_precision_roundtrip(cm, opts, target_width, 1);
    uint64_t row_equal = 0;
    for (uint64_t s = 0; s < streams; ++s) {
      const std::vector<RawToken> stream =
          random_data_stream(rng, 1 + rng.below(max_len), cm.base.precision());
      const CoTRunRecord src = run_cot(cm, stream, opts);
      const CoTRunRecord rec = run_cot(rt.machine, stream, opts);
      bool same = true;
      for (int i = 0; i < d_src; ++i)
        same = same && rec.final_output.payload[size_t(i)] ==
                           src.final_states.back()[size_t(i)];
      if (same) ++row_equal;
    }
    equal += row_equal;
    ordered_json row;
    row["machine"] = m;
    row["layers"] = cm.base.layers();
    row["dim"] = d_src;
    row["prec"] = cm.base.precision().bits();
    row["width"] = rt.width;
    row["p_prime"] = rt.precision;
    row["state_bits"] = rt.account.state_bits;
    row["counter_bits"] = rt.account.counter_bits;
    row["total_bits"] = rt.account.total;
    row["streams"] = streams;
    row["equal"] = row_equal;
    rows.push_back(row);
    csv += std::to_string(m) + "," + std::to_string(cm.base.layers()) + "," +
           std::to_string(d_src) + "," + std::to_string(cm.base.precision().bits()) + "," +
           std::to_string(rt.width) + "," + std::to_string(rt.precision) + "," +
           std::to_string(rt.account.state_bits) + "," +
           std::to_string(rt.account.counter_bits) + "," + std::to_string(rt.account.total) +
           "," + std::to_string(streams) + "," + std::to_string(row_equal) + "\n";
  }

  const double rate = double(equal) / double(machines * streams);
  std::cout << "equality rate " << equal << "/" << machines * streams << "\n";
  if (g.csv()) {
    deliver(g, "cot_roundtrip.csv", csv);
  } else {
    ordered_json j;
    j["seed"] = g.seed;
    j["target_width"] = target_width;
    j["rows"] = rows;
    j["equal"] = equal;
    j["runs"] = machines * streams;
    j["equality_rate"] = rate;
    deliver(g, "cot_roundtrip.json", j.dump(2) + "\n");
  }
  return equal == machines * streams ? 0 : 1;
}

// ---------------------------------------------------------------------------
// compose

int cmd_compose(const GlobalOpts& g, const std::string& instance_path) {
  std::ifstream in(instance_path);
  if (!in) throw ConfigError("cannot open instance file: " + instance_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const CompositionInstance inst = parse_instance(buf.str());

  const SSMachine machine = build_composition_ssm(inst.N, inst.K);
  const TokenStream stream = encode_row_major(inst);
  const RunTrace trace = ssm_run(machine, stream.raw());
  const uint64_t output = trace.final_output->payload[0];
  const uint64_t oracle = eval_composition(inst).value;
  const bool match = output == oracle;

  if (g.csv()) {
    std::string csv = "N,K,a,stream,output,oracle,match\n";
    csv += std::to_string(inst.N) + "," + std::to_string(inst.K) + "," + std::to_string(inst.a) +
           "," + join_u64(stream.tokens) + "," + std::to_string(output) + "," +
           std::to_string(oracle) + "," + (match ? "1" : "0") + "\n";
    deliver(g, "compose_result.csv", csv);
  } else {
    ordered_json j;
    j["N"] = inst.N;
    j["K"] = inst.K;
    j["a"] = inst.a;
    j["stream"] = join_u64(stream.tokens);
    j["output"] = output;
    j["oracle"] = oracle;
    j["match"] = match;
    deliver(g, "compose_result.json", j.dump(2) + "\n");
  }
  return match ? 0 : 1;
}

// ---------------------------------------------------------------------------
// pc-oracle

int cmd_pc_oracle(const GlobalOpts& g, int n, uint64_t k) {
  if (n < 1 || k < 1) throw ConfigError("pc-oracle: --n and --k must be positive");
  const OneRoundCC r = min_one_round_cc(n, k);
  if (g.csv()) {
    std::string csv = "N,k,functions,classes,bits\n";
    csv += std::to_string(r.N) + "," + std::to_string(r.k) + "," + std::to_string(r.functions) +
           "," + std::to_string(r.classes) + "," + std::to_string(r.bits) + "\n";
    deliver(g, "pc_oracle.csv", csv);
  } else {
    ordered_json j;
    j["N"] = r.N;
    j["k"] = r.k;
    j["functions"] = r.functions;
    j["classes"] = r.classes;
    j["bits"] = r.bits;
    deliver(g, "pc_oracle.json", j.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// algebra

int cmd_algebra(const GlobalOpts& g, ExecMode mode) {
  const OrderReport census = affine_order_census(mode);
  const UnipotentReport unipotent = verify_unipotent_identity();
  bool ok = census.total == 1344 && census.count(8) == 0;
  const std::set<uint64_t> allowed = {1, 2, 3, 4, 6, 7, 14};
  for (uint64_t order : census.support()) ok = ok && allowed.count(order) == 1;
  ok = ok && matrix_order_spectrum(3) == std::set<uint64_t>{1, 2, 3, 4, 7};
  ok = ok && unipotent.count == 64 && unipotent.geometric_sum_vanishes &&
       unipotent.fourth_power_identity;

  ordered_json j;
  j["total"] = census.total;
  ordered_json hist;
  for (const auto& [order, count] : census.histogram) hist[std::to_string(order)] = count;
  j["histogram"] = std::move(hist);
  j["order_8_count"] = census.count(8);
  ordered_json spectra;
  for (int d = 1; d <= 3; ++d) {
    ordered_json s = ordered_json::array();
    for (uint64_t v : matrix_order_spectrum(d)) s.push_back(v);
    spectra[std::to_string(d)] = std::move(s);
  }
  j["gl_spectra"] = std::move(spectra);
  j["unipotent"] = {{"count", unipotent.count},
                    {"geometric_sum_vanishes", unipotent.geometric_sum_vanishes},
                    {"fourth_power_identity", unipotent.fourth_power_identity}};
  ordered_json counting = ordered_json::array();
  for (const auto& [w, p] : std::vector<std::pair<int, int>>{{2, 1}, {3, 1}, {1, 1}}) {
    const CountingReport r = verify_affine_counting(w, p);
    ok = ok && r.counts_match && (w >= 2 ? r.strict : !r.strict);
    counting.push_back({{"width", r.width},
                        {"prec", r.prec},
                        {"functions_wide", r.functions_wide},
                        {"param_wide", r.param_wide},
                        {"functions_narrow", r.functions_narrow},
                        {"param_narrow", r.param_narrow},
                        {"strict", r.strict}});
  }
  j["counting"] = std::move(counting);
  j["pass"] = ok;

  if (g.csv()) {
    std::string csv = "order,count\n";
    for (const auto& [order, count] : census.histogram)
      csv += std::to_string(order) + "," + std::to_string(count) + "\n";
    deliver(g, "algebra_report.csv", csv);
  } else {
    deliver(g, "algebra_report.json", j.dump(2) + "\n");
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Exact laboratory for layered affine state machines: verification "
      "suites, protocol bit accounting, and chain-of-thought round trips. "
      "SSMLAB_BUDGET caps enumeration sizes."};
  app.require_subcommand(1);
  app.fallthrough();  // accept global options after the subcommand name

  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--seed", g.seed, "master random seed")->capture_default_str();
  app.add_option("--out", g.out_dir, "directory for report files (default: stdout)");
  app.add_option("--format", g.format, "report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  bool parallel = false;
  app.add_flag("--parallel", parallel, "run sweeps with OpenMP");

  auto* verify = app.add_subcommand("verify", "run invariant suites");
  std::string suite = "all";
  verify->add_option("suite", suite, "all | algebra | constructions | protocol | cot")
      ->capture_default_str();

  auto* bench = app.add_subcommand("bench-protocol",
                                   "bit-accounting table for compiled forward protocols");
  auto* roundtrip = app.add_subcommand("cot-roundtrip",
                                       "width/precision round-trip equality grid");
  auto* compose = app.add_subcommand("compose", "run the composition solver on an instance file");
  std::string instance_path;
  compose->add_option("instance", instance_path, "instance file (text format)")->required();
  auto* pc = app.add_subcommand("pc-oracle", "one-round pointer-chasing communication bound");
  int pc_n = 0;
  uint64_t pc_k = 0;
  pc->add_option("--n", pc_n, "domain size")->required();
  pc->add_option("--k", pc_k, "chase steps")->required();
  auto* algebra = app.add_subcommand("algebra", "affine order census and counting reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const ExecMode mode = parallel ? ExecMode::Parallel : ExecMode::Serial;
  try {
    const ordered_json config = load_config(g.config_path);
    if (config.contains("seed") && !app.count("--seed")) {
      if (!config.at("seed").is_number_unsigned())
        throw ConfigError("config key 'seed' must be unsigned");
      g.seed = config.at("seed").get<uint64_t>();
    }
    if (verify->parsed()) return cmd_verify(g, suite, mode);
    if (bench->parsed()) return cmd_bench_protocol(g, config);
    if (roundtrip->parsed()) return cmd_cot_roundtrip(g, config);
    if (compose->parsed()) return cmd_compose(g, instance_path);
    if (pc->parsed()) return cmd_pc_oracle(g, pc_n, pc_k);
    if (algebra->parsed()) return cmd_algebra(g, mode);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const BudgetError& e) {
    std::cerr << "budget error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
