#include "ssmlab/ssm.hpp"

#include <sstream>

#include "ssmlab/errors.hpp"

namespace ssmlab {

namespace {

std::string join(const std::vector<uint64_t>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(' ');
    out += std::to_string(v[i]);
  }
  return out;
}

RingVector widen_values(const std::vector<uint64_t>& values, int width, Precision p,
                        const char* what) {
  if (int(values.size()) > width)
    throw StreamError(std::string(what) + ": " + std::to_string(values.size()) +
                      " values exceed token width " + std::to_string(width));
  std::vector<uint64_t> out(static_cast<size_t>(width), 0);
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i] > p.mask())
      throw StreamError(std::string(what) + ": value " + std::to_string(values[i]) +
                        " does not fit " + std::to_string(p.bits()) + "-bit precision");
    out[i] = values[i];
  }
  return RingVector(p, std::move(out));
}

// Decodes (A, b) carried row-major in a token payload's leading
// dim^2 + dim coordinates.
RingMatrix token_matrix(const Token& input, const MachineShape& shape) {
  const int d = shape.dim;
  if (input.payload.dim() < d * d + d)
    throw MismatchError("token-decoded transition: payload width " +
                        std::to_string(input.payload.dim()) + " < " + std::to_string(d * d + d));
  RingMatrix A = RingMatrix::zero(d, d, shape.prec);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A.set(i, j, input.payload[static_cast<size_t>(i * d + j)]);
  return A;
}

RingVector token_offset(const Token& input, const MachineShape& shape) {
  const int d = shape.dim;
  if (input.payload.dim() < d * d + d)
    throw MismatchError("token-decoded injection: payload width " +
                        std::to_string(input.payload.dim()) + " < " + std::to_string(d * d + d));
  std::vector<uint64_t> b(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) b[static_cast<size_t>(i)] = input.payload[static_cast<size_t>(d * d + i)];
  return RingVector(shape.prec, std::move(b));
}

}  // namespace

// ---------------------------------------------------------------------------
// LayerRule

LayerRule::LayerRule(DeclTransition t, DeclInject i, DeclReadout r) {
  decl_ = Decl{std::move(t), std::move(i), std::move(r)};
}

LayerRule LayerRule::programmatic(TransitionFn t, InjectFn i, ReadoutFn r) {
  LayerRule rule;
  rule.transition_fn_ = std::move(t);
  rule.inject_fn_ = std::move(i);
  rule.readout_fn_ = std::move(r);
  return rule;
}

const DeclTransition& LayerRule::decl_transition() const {
  if (!decl_) throw MismatchError("LayerRule: programmatic rule has no declarative form");
  return decl_->transition;
}
const DeclInject& LayerRule::decl_inject() const {
  if (!decl_) throw MismatchError("LayerRule: programmatic rule has no declarative form");
  return decl_->inject;
}
const DeclReadout& LayerRule::decl_readout() const {
  if (!decl_) throw MismatchError("LayerRule: programmatic rule has no declarative form");
  return decl_->readout;
}

RingMatrix LayerRule::transition(const StepContext& ctx, const Token& input,
                                 const MachineShape& shape) const {
  if (!decl_) return transition_fn_(ctx, input);
  const auto eval = [&](const TransitionValue& v) -> RingMatrix {
    if (std::holds_alternative<TokenAffineTag>(v)) return token_matrix(input, shape);
    return std::get<RingMatrix>(v);
  };
  if (const auto* spec = std::get_if<TransitionSpec>(&decl_->transition)) {
    for (const auto& c : spec->cases)
      if (c.contains(ctx.time)) return eval(c.value);
    return eval(spec->fallback);
  }
  const auto& table = std::get<TableTransitionSpec>(decl_->transition);
  const auto it = table.table.find(input.payload[0]);
  return it == table.table.end() ? table.fallback : it->second;
}

RingVector LayerRule::inject(const StepContext& ctx, const Token& input,
                             const MachineShape& shape) const {
  if (!decl_) return inject_fn_(ctx, input);
  const auto eval = [&](const InjectValue& v) -> RingVector {
    if (std::holds_alternative<TokenAffineTag>(v)) return token_offset(input, shape);
    if (const auto* B = std::get_if<RingMatrix>(&v)) return *B * input.payload;
    return std::get<RingVector>(v);
  };
  if (const auto* spec = std::get_if<InjectSpec>(&decl_->inject)) {
    for (const auto& c : spec->cases)
      if (c.contains(ctx.time)) return eval(c.value);
    return eval(spec->fallback);
  }
  const auto& table = std::get<TableInjectSpec>(decl_->inject);
  const auto it = table.table.find(input.payload[0]);
  return it == table.table.end() ? table.fallback : it->second;
}

Token LayerRule::readout(const StepContext& ctx, const RingVector& state, const Token& input,
                         const MachineShape& shape) const {
  if (!decl_) return readout_fn_(ctx, state, input);
  const auto state_token = [&]() {
    if (shape.dim > shape.token_width)
      throw MismatchError("state readout: state dim " + std::to_string(shape.dim) +
                          " exceeds token width " + std::to_string(shape.token_width));
    return Token(TokenKind::Data,
                 widen_values(state.values(), shape.token_width, shape.prec, "state readout"));
  };
  const auto& r = decl_->readout;
  if (std::holds_alternative<PassthroughReadout>(r)) return input;
  if (std::holds_alternative<StateReadout>(r)) return state_token();
  if (std::holds_alternative<StateOnReadReadout>(r))
    return input.kind == TokenKind::ReadMarker ? state_token() : input;
  const auto& gate = std::get<MatchGateReadout>(r);
  if (ctx.time < gate.from || ctx.time > gate.to) return input;
  const uint64_t j = ctx.time - gate.from + 1;
  if (state[0] == shape.prec.reduce(j)) return input;
  return Token::zero(TokenKind::Data, shape.token_width, shape.prec);
}

// ---------------------------------------------------------------------------
// Embedder

Embedder::Embedder(DeclEmbed decl) : decl_(std::move(decl)) {}

Embedder Embedder::programmatic(EmbedFn fn) {
  Embedder e;
  e.fn_ = std::move(fn);
  return e;
}

const DeclEmbed& Embedder::decl() const {
  if (!decl_) throw MismatchError("Embedder: programmatic embed has no declarative form");
  return *decl_;
}

Token Embedder::embed(const RawToken& raw, uint64_t t, const MachineShape& shape) const {
  if (!decl_) return fn_(raw, t);
  const int m = shape.token_width;
  if (std::holds_alternative<WidenEmbed>(*decl_))
    return Token(raw.kind, widen_values(raw.values, m, shape.prec, "embed"));
  if (const auto* bias = std::get_if<BiasEmbed>(decl_.operator->())) {
    if (m != bias->exo_width + shape.dim + 1)
      throw MismatchError("bias embed: token width must be exo_width + dim + 1");
    if (raw.kind == TokenKind::Thought) {
      if (int(raw.values.size()) != m)
        throw StreamError("bias embed: thought token must be full width " + std::to_string(m));
      return Token(TokenKind::Thought, widen_values(raw.values, m, shape.prec, "bias embed"));
    }
    RingVector x = widen_values(raw.values, bias->exo_width, shape.prec, "bias embed");
    std::vector<uint64_t> payload(static_cast<size_t>(m), 0);
    for (int i = 0; i < bias->exo_width; ++i) payload[static_cast<size_t>(i)] = x[static_cast<size_t>(i)];
    payload[static_cast<size_t>(m - 1)] = 1;
    return Token(raw.kind, RingVector(shape.prec, std::move(payload)));
  }
  // Universal-machine stream: (x, T, read).
  const int d = shape.dim;
  switch (t) {
    case 1:
      if (raw.kind != TokenKind::Data || int(raw.values.size()) != d)
        throw StreamError("universal machine: token 1 must be data with " + std::to_string(d) +
                          " values");
      return Token(TokenKind::Data, widen_values(raw.values, m, shape.prec, "embed"));
    case 2:
      if (raw.kind != TokenKind::Data || int(raw.values.size()) != d * d + d)
        throw StreamError("universal machine: token 2 must be data with " +
                          std::to_string(d * d + d) + " values");
      return Token(TokenKind::Data, widen_values(raw.values, m, shape.prec, "embed"));
    case 3:
      if (raw.kind != TokenKind::ReadMarker)
        throw StreamError("universal machine: token 3 must be a read marker");
      return Token::zero(TokenKind::ReadMarker, m, shape.prec);
    default:
      throw StreamError("universal machine: stream longer than 3 tokens");
  }
}

// ---------------------------------------------------------------------------
// SSMachine

SSMachine::SSMachine(MachineShape shape, Embedder embed, std::vector<LayerRule> rules,
                     std::vector<RingVector> initial_states)
    : shape_(shape), embed_(std::move(embed)), rules_(std::move(rules)),
      init_(std::move(initial_states)) {
  if (shape_.layers < 1) throw MismatchError("machine: needs at least one layer");
  if (shape_.dim < 1) throw MismatchError("machine: state dimension must be positive");
  if (shape_.token_width < 1) throw MismatchError("machine: token width must be positive");
  if (int(rules_.size()) != shape_.layers)
    throw MismatchError("machine: " + std::to_string(rules_.size()) + " rules for " +
                        std::to_string(shape_.layers) + " layers");
  if (init_.empty())
    init_.assign(static_cast<size_t>(shape_.layers), RingVector::zero(shape_.dim, shape_.prec));
  if (int(init_.size()) != shape_.layers)
    throw MismatchError("machine: initial state count does not match layer count");
  for (const auto& h : init_)
    if (h.dim() != shape_.dim || h.precision() != shape_.prec)
      throw MismatchError("machine: initial state shape mismatch");
}

// ---------------------------------------------------------------------------
// Stepping

namespace {

void check_transition(const RingMatrix& A, const MachineShape& shape, int layer) {
  if (A.rows() != shape.dim || A.cols() != shape.dim || A.precision() != shape.prec)
    throw MismatchError("layer " + std::to_string(layer) +
                        ": transition must be a dim x dim matrix at machine precision");
}

void check_inject(const RingVector& u, const MachineShape& shape, int layer) {
  if (u.dim() != shape.dim || u.precision() != shape.prec)
    throw MismatchError("layer " + std::to_string(layer) +
                        ": injected vector must have state shape");
}

void check_output(const Token& y, const MachineShape& shape, int layer) {
  if (y.payload.dim() != shape.token_width || y.payload.precision() != shape.prec)
    throw MismatchError("layer " + std::to_string(layer) + ": readout token has wrong shape");
}

}  // namespace

StepResult ssm_step(const SSMachine& machine, const std::vector<RingVector>& states,
                    const Token& token, uint64_t t, std::optional<uint64_t> length) {
  if (int(states.size()) != machine.layers())
    throw MismatchError("ssm_step: state count does not match layer count");
  StepResult result;
  result.states.reserve(states.size());
  result.outputs.reserve(states.size());
  Token y = token;
  for (int layer = 1; layer <= machine.layers(); ++layer) {
    const StepContext ctx{layer, t, length};
    const LayerRule& rule = machine.rule(layer);
    const RingMatrix A = rule.transition(ctx, y, machine.shape());
    check_transition(A, machine.shape(), layer);
    const RingVector u = rule.inject(ctx, y, machine.shape());
    check_inject(u, machine.shape(), layer);
    RingVector h = A * states[static_cast<size_t>(layer - 1)] + u;
    Token out = rule.readout(ctx, h, y, machine.shape());
    check_output(out, machine.shape(), layer);
    result.states.push_back(std::move(h));
    result.outputs.push_back(out);
    y = std::move(out);
  }
  return result;
}

RunTrace ssm_run(const SSMachine& machine, std::span<const RawToken> stream) {
  if (machine.expected_length && stream.size() != *machine.expected_length)
    throw StreamError("ssm_run: machine expects exactly " +
                      std::to_string(*machine.expected_length) + " tokens, got " +
                      std::to_string(stream.size()));
  const uint64_t n = stream.size();
  RunTrace trace;
  trace.length = n;
  trace.states.assign(static_cast<size_t>(machine.layers()), {});
  trace.outputs.assign(static_cast<size_t>(machine.layers()), {});
  std::vector<RingVector> states = machine.initial_states();
  for (int l = 0; l < machine.layers(); ++l) {
    trace.states[static_cast<size_t>(l)].reserve(static_cast<size_t>(n) + 1);
    trace.states[static_cast<size_t>(l)].push_back(states[static_cast<size_t>(l)]);
    trace.outputs[static_cast<size_t>(l)].reserve(static_cast<size_t>(n));
  }
  trace.embedded.reserve(static_cast<size_t>(n));
  for (uint64_t t = 1; t <= n; ++t) {
    const Token tok = machine.embed(stream[static_cast<size_t>(t - 1)], t);
    if (tok.payload.dim() != machine.token_width() || tok.payload.precision() != machine.precision())
      throw StreamError("ssm_run: embedded token has wrong shape at t=" + std::to_string(t));
    trace.embedded.push_back(tok);
    StepResult step = ssm_step(machine, states, tok, t, n);
    states = step.states;
    for (int l = 0; l < machine.layers(); ++l) {
      trace.states[static_cast<size_t>(l)].push_back(step.states[static_cast<size_t>(l)]);
      trace.outputs[static_cast<size_t>(l)].push_back(step.outputs[static_cast<size_t>(l)]);
    }
  }
  if (n > 0) trace.final_output = trace.outputs.back().back();
  return trace;
}

Token ssm_output(const SSMachine& machine, std::span<const RawToken> stream) {
  if (machine.expected_length && stream.size() != *machine.expected_length)
    throw StreamError("ssm_output: machine expects exactly " +
                      std::to_string(*machine.expected_length) + " tokens, got " +
                      std::to_string(stream.size()));
  const uint64_t n = stream.size();
  if (n == 0) throw StreamError("ssm_output: empty stream has no output");
  std::vector<RingVector> states = machine.initial_states();
  Token out = Token::zero(TokenKind::Data, machine.token_width(), machine.precision());
  for (uint64_t t = 1; t <= n; ++t) {
    const Token tok = machine.embed(stream[static_cast<size_t>(t - 1)], t);
    StepResult step = ssm_step(machine, states, tok, t, n);
    states = std::move(step.states);
    out = std::move(step.outputs.back());
  }
  return out;
}

AffineMap block_summary(const SSMachine& machine, int layer, uint64_t from, uint64_t to,
                        std::span<const Token> layer_inputs, std::optional<uint64_t> length) {
  if (layer < 1 || layer > machine.layers())
    throw MismatchError("block_summary: layer out of range");
  AffineMap acc = identity_map(machine.dim(), machine.precision());
  if (to < from) {
    if (!layer_inputs.empty())
      throw MismatchError("block_summary: empty interval with nonempty inputs");
    return acc;
  }
  if (layer_inputs.size() != to - from + 1)
    throw MismatchError("block_summary: expected " + std::to_string(to - from + 1) +
                        " layer inputs, got " + std::to_string(layer_inputs.size()));
  const LayerRule& rule = machine.rule(layer);
  for (uint64_t t = from; t <= to; ++t) {
    const StepContext ctx{layer, t, length};
    const Token& y = layer_inputs[static_cast<size_t>(t - from)];
    const RingMatrix A = rule.transition(ctx, y, machine.shape());
    check_transition(A, machine.shape(), layer);
    const RingVector u = rule.inject(ctx, y, machine.shape());
    check_inject(u, machine.shape(), layer);
    acc = compose(AffineMap(A, u), acc);
  }
  return acc;
}

std::vector<std::string> check_trace_recurrence(const SSMachine& machine, const RunTrace& trace) {
  std::vector<std::string> problems;
  for (int layer = 1; layer <= machine.layers(); ++layer) {
    const LayerRule& rule = machine.rule(layer);
    for (uint64_t t = 1; t <= trace.length; ++t) {
      const Token& input =
          layer == 1 ? trace.embedded[static_cast<size_t>(t - 1)] : trace.output(layer - 1, t);
      const StepContext ctx{layer, t, trace.length};
      const RingMatrix A = rule.transition(ctx, input, machine.shape());
      const RingVector u = rule.inject(ctx, input, machine.shape());
      const RingVector expect = A * trace.state(layer, t - 1) + u;
      if (expect != trace.state(layer, t))
        problems.push_back("state mismatch at layer " + std::to_string(layer) + ", t=" +
                           std::to_string(t));
      const Token out = rule.readout(ctx, trace.state(layer, t), input, machine.shape());
      if (out != trace.output(layer, t))
        problems.push_back("output mismatch at layer " + std::to_string(layer) + ", t=" +
                           std::to_string(t));
    }
  }
  return problems;
}

std::string trace_to_csv(const RunTrace& trace) {
  std::ostringstream out;
  out << "layer,time,state,out_kind,out\n";
  for (size_t l = 0; l < trace.states.size(); ++l)
    for (uint64_t t = 1; t <= trace.length; ++t) {
      const Token& y = trace.outputs[l][static_cast<size_t>(t - 1)];
      out << (l + 1) << ',' << t << ',' << join(trace.states[l][static_cast<size_t>(t)].values()) << ','
          << to_string(y.kind) << ',' << join(y.payload.values()) << '\n';
    }
  return out.str();
}

}  // namespace ssmlab
