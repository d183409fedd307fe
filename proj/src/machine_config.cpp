#include "ssmlab/machine_config.hpp"

#include <utility>
#include <variant>
#include <vector>

#include "ssmlab/errors.hpp"

namespace ssmlab {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json matrix_json(const RingMatrix& a) {
  ordered_json rows = ordered_json::array();
  for (int r = 0; r < a.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (int c = 0; c < a.cols(); ++c) row.push_back(a.at(r, c));
    rows.push_back(std::move(row));
  }
  return ordered_json{{"kind", "matrix"}, {"rows", std::move(rows)}};
}

ordered_json vector_json(const RingVector& v) {
  return ordered_json{{"kind", "vector"}, {"values", v.values()}};
}

ordered_json value_json(const TransitionValue& v) {
  if (std::holds_alternative<TokenAffineTag>(v)) return ordered_json{{"kind", "token_affine"}};
  return matrix_json(std::get<RingMatrix>(v));
}

ordered_json value_json(const InjectValue& v) {
  if (std::holds_alternative<TokenAffineTag>(v)) return ordered_json{{"kind", "token_affine"}};
  if (std::holds_alternative<RingMatrix>(v)) return matrix_json(std::get<RingMatrix>(v));
  return vector_json(std::get<RingVector>(v));
}

template <class V>
ordered_json cases_json(const std::vector<IntervalCase<V>>& cases) {
  ordered_json out = ordered_json::array();
  for (const auto& c : cases) {
    ordered_json j;
    j["from"] = c.from;
    if (c.to)
      j["to"] = *c.to;
    else
      j["to"] = nullptr;
    j["value"] = value_json(c.value);
    out.push_back(std::move(j));
  }
  return out;
}

ordered_json transition_json(const DeclTransition& t) {
  if (const auto* spec = std::get_if<TransitionSpec>(&t)) {
    return ordered_json{{"kind", "interval"},
                        {"fallback", value_json(spec->fallback)},
                        {"cases", cases_json(spec->cases)}};
  }
  const auto& tab = std::get<TableTransitionSpec>(t);
  ordered_json entries = ordered_json::array();
  for (const auto& [key, mat] : tab.table)
    entries.push_back(ordered_json{{"key", key}, {"value", matrix_json(mat)}});
  return ordered_json{{"kind", "table"},
                      {"entries", std::move(entries)},
                      {"fallback", matrix_json(tab.fallback)}};
}

ordered_json inject_json(const DeclInject& i) {
  if (const auto* spec = std::get_if<InjectSpec>(&i)) {
    return ordered_json{{"kind", "interval"},
                        {"fallback", value_json(spec->fallback)},
                        {"cases", cases_json(spec->cases)}};
  }
  const auto& tab = std::get<TableInjectSpec>(i);
  ordered_json entries = ordered_json::array();
  for (const auto& [key, vec] : tab.table)
    entries.push_back(ordered_json{{"key", key}, {"value", vector_json(vec)}});
  return ordered_json{{"kind", "table"},
                      {"entries", std::move(entries)},
                      {"fallback", vector_json(tab.fallback)}};
}

ordered_json readout_json(const DeclReadout& r) {
  if (std::holds_alternative<PassthroughReadout>(r)) return ordered_json{{"kind", "passthrough"}};
  if (std::holds_alternative<StateReadout>(r)) return ordered_json{{"kind", "state"}};
  if (std::holds_alternative<StateOnReadReadout>(r))
    return ordered_json{{"kind", "state_on_read"}};
  const auto& gate = std::get<MatchGateReadout>(r);
  return ordered_json{{"kind", "match_gate"}, {"from", gate.from}, {"to", gate.to}};
}

ordered_json embed_json(const DeclEmbed& e) {
  if (std::holds_alternative<WidenEmbed>(e)) return ordered_json{{"kind", "widen"}};
  if (std::holds_alternative<AffineStreamEmbed>(e)) return ordered_json{{"kind", "affine_stream"}};
  return ordered_json{{"kind", "bias"}, {"exo_width", std::get<BiasEmbed>(e).exo_width}};
}

// --- parsing ---------------------------------------------------------------

[[noreturn]] void bad(const std::string& what) { throw ConfigError("machine config: " + what); }

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) bad(std::string("missing field '") + name + "'");
  return j.at(name);
}

// In-memory documents built from int carry signed numbers; accept any
// nonnegative integer regardless of the storage flavor.
bool is_u64(const json& v) {
  if (v.is_number_unsigned()) return true;
  return v.is_number_integer() && v.get<int64_t>() >= 0;
}

uint64_t u64_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!is_u64(v)) bad(std::string("field '") + name + "' must be unsigned");
  return v.get<uint64_t>();
}

int int_field(const json& j, const char* name) {
  const uint64_t v = u64_field(j, name);
  if (v > 1u << 20) bad(std::string("field '") + name + "' is implausibly large");
  return int(v);
}

std::string kind_of(const json& j) {
  const json& k = field(j, "kind");
  if (!k.is_string()) bad("'kind' must be a string");
  return k.get<std::string>();
}

std::vector<uint64_t> u64_array(const json& j, const char* what) {
  if (!j.is_array()) bad(std::string(what) + " must be an array");
  std::vector<uint64_t> out;
  for (const json& v : j) {
    if (!is_u64(v)) bad(std::string(what) + " entries must be unsigned");
    out.push_back(v.get<uint64_t>());
  }
  return out;
}

RingMatrix parse_matrix(const json& j, Precision prec) {
  const json& rows = field(j, "rows");
  if (!rows.is_array() || rows.empty()) bad("matrix 'rows' must be a nonempty array");
  std::vector<std::vector<uint64_t>> data;
  for (const json& row : rows) data.push_back(u64_array(row, "matrix row"));
  for (const auto& row : data)
    if (row.size() != data.front().size()) bad("matrix rows have unequal lengths");
  return RingMatrix::from_rows(prec, data);
}

RingVector parse_vector(const json& j, Precision prec) {
  return RingVector(prec, u64_array(field(j, "values"), "vector 'values'"));
}

TransitionValue parse_transition_value(const json& j, Precision prec) {
  const std::string kind = kind_of(j);
  if (kind == "token_affine") return TokenAffineTag{};
  if (kind == "matrix") return parse_matrix(j, prec);
  bad("transition value kind '" + kind + "'");
}

InjectValue parse_inject_value(const json& j, Precision prec) {
  const std::string kind = kind_of(j);
  if (kind == "token_affine") return TokenAffineTag{};
  if (kind == "matrix") return parse_matrix(j, prec);
  if (kind == "vector") return parse_vector(j, prec);
  bad("inject value kind '" + kind + "'");
}

template <class V, class ParseValue>
std::vector<IntervalCase<V>> parse_cases(const json& j, ParseValue parse_value) {
  if (!j.is_array()) bad("'cases' must be an array");
  std::vector<IntervalCase<V>> out;
  for (const json& c : j) {
    IntervalCase<V> ic{1, std::nullopt, parse_value(field(c, "value"))};
    ic.from = u64_field(c, "from");
    const json& to = field(c, "to");
    if (!to.is_null()) {
      if (!is_u64(to)) bad("case 'to' must be unsigned or null");
      ic.to = to.get<uint64_t>();
    }
    out.push_back(std::move(ic));
  }
  return out;
}

DeclTransition parse_transition(const json& j, Precision prec) {
  const std::string kind = kind_of(j);
  if (kind == "interval") {
    TransitionSpec spec{parse_transition_value(field(j, "fallback"), prec), {}};
    spec.cases = parse_cases<TransitionValue>(
        field(j, "cases"), [&](const json& v) { return parse_transition_value(v, prec); });
    return spec;
  }
  if (kind == "table") {
    TableTransitionSpec spec{{}, parse_matrix(field(j, "fallback"), prec)};
    const json& entries = field(j, "entries");
    if (!entries.is_array()) bad("'entries' must be an array");
    for (const json& e : entries)
      spec.table.emplace(u64_field(e, "key"), parse_matrix(field(e, "value"), prec));
    return spec;
  }
  bad("transition kind '" + kind + "'");
}

DeclInject parse_inject(const json& j, Precision prec) {
  const std::string kind = kind_of(j);
  if (kind == "interval") {
    InjectSpec spec{parse_inject_value(field(j, "fallback"), prec), {}};
    spec.cases = parse_cases<InjectValue>(
        field(j, "cases"), [&](const json& v) { return parse_inject_value(v, prec); });
    return spec;
  }
  if (kind == "table") {
    TableInjectSpec spec{{}, parse_vector(field(j, "fallback"), prec)};
    const json& entries = field(j, "entries");
    if (!entries.is_array()) bad("'entries' must be an array");
    for (const json& e : entries)
      spec.table.emplace(u64_field(e, "key"), parse_vector(field(e, "value"), prec));
    return spec;
  }
  bad("inject kind '" + kind + "'");
}

DeclReadout parse_readout(const json& j) {
  const std::string kind = kind_of(j);
  if (kind == "passthrough") return PassthroughReadout{};
  if (kind == "state") return StateReadout{};
  if (kind == "state_on_read") return StateOnReadReadout{};
  if (kind == "match_gate") return MatchGateReadout{u64_field(j, "from"), u64_field(j, "to")};
  bad("readout kind '" + kind + "'");
}

DeclEmbed parse_embed(const json& j) {
  const std::string kind = kind_of(j);
  if (kind == "widen") return WidenEmbed{};
  if (kind == "affine_stream") return AffineStreamEmbed{};
  if (kind == "bias") return BiasEmbed{int_field(j, "exo_width")};
  bad("embed kind '" + kind + "'");
}

}  // namespace

ordered_json machine_to_config(const SSMachine& machine) {
  if (!machine.embedder().declarative())
    throw MismatchError("machine_to_config: embedder is programmatic");
  for (const LayerRule& rule : machine.rules())
    if (!rule.declarative()) throw MismatchError("machine_to_config: a rule is programmatic");

  ordered_json j;
  j["layers"] = machine.layers();
  j["dim"] = machine.dim();
  j["precision"] = machine.precision().bits();
  j["token_width"] = machine.token_width();
  j["embed"] = embed_json(machine.embedder().decl());
  ordered_json inits = ordered_json::array();
  for (const RingVector& v : machine.initial_states()) inits.push_back(v.values());
  j["initial_states"] = std::move(inits);
  if (machine.expected_length)
    j["expected_length"] = *machine.expected_length;
  else
    j["expected_length"] = nullptr;
  ordered_json rules = ordered_json::array();
  for (const LayerRule& rule : machine.rules()) {
    ordered_json r;
    r["transition"] = transition_json(rule.decl_transition());
    r["inject"] = inject_json(rule.decl_inject());
    r["readout"] = readout_json(rule.decl_readout());
    rules.push_back(std::move(r));
  }
  j["rules"] = std::move(rules);
  return j;
}

SSMachine machine_from_config(const json& config) {
  const int layers = int_field(config, "layers");
  const int dim = int_field(config, "dim");
  const int prec_bits = int_field(config, "precision");
  const int token_width = int_field(config, "token_width");
  if (layers < 1 || dim < 1 || token_width < 1) bad("shape fields must be positive");
  if (prec_bits < 1 || prec_bits > 64) bad("precision must be in [1, 64]");
  const Precision prec(prec_bits);
  const MachineShape shape{layers, dim, prec, token_width};

  const DeclEmbed embed = parse_embed(field(config, "embed"));

  const json& inits_j = field(config, "initial_states");
  if (!inits_j.is_array()) bad("'initial_states' must be an array");
  std::vector<RingVector> inits;
  for (const json& v : inits_j) inits.emplace_back(prec, u64_array(v, "initial state"));

  const json& rules_j = field(config, "rules");
  if (!rules_j.is_array() || int(rules_j.size()) != layers)
    bad("'rules' must list one entry per layer");
  std::vector<LayerRule> rules;
  for (const json& r : rules_j)
    rules.emplace_back(parse_transition(field(r, "transition"), prec),
                       parse_inject(field(r, "inject"), prec), parse_readout(field(r, "readout")));

  try {
    SSMachine machine(shape, Embedder(embed), std::move(rules), std::move(inits));
    const json& len = field(config, "expected_length");
    if (!len.is_null()) {
      if (!is_u64(len)) bad("'expected_length' must be unsigned or null");
      machine.expected_length = len.get<uint64_t>();
    }
    return machine;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    bad(e.what());  // shape mismatches surface as config errors on load
  }
}

std::string machine_to_config_string(const SSMachine& machine) {
  return machine_to_config(machine).dump(2) + "\n";
}

SSMachine machine_from_config_string(const std::string& text) {
  json parsed;
  try {
    parsed = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("machine config: invalid JSON: ") + e.what());
  }
  return machine_from_config(parsed);
}

}  // namespace ssmlab
