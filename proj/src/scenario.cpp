#include "evs/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>

#include "evs/format.hpp"

namespace evs {

namespace {

constexpr std::size_t kMaxVariables = 20;
constexpr std::size_t kMaxBins = 10'000;

std::string describe_position(std::size_t line, std::size_t column) {
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

}  // namespace

ParseError::ParseError(std::size_t line, std::size_t column, std::string message,
                       std::string token)
    : Error(describe_position(line, column) + ": " + message +
            (token.empty() ? std::string() : " near '" + token + "'")),
      line_(line),
      column_(column),
      message_(std::move(message)),
      token_(std::move(token)) {}

ValidationError::ValidationError(std::size_t line, std::string message)
    : Error(line ? "line " + std::to_string(line) + ": " + message : message),
      line_(line),
      message_(std::move(message)) {}

const Pipeline* Scenario::find_pipeline(std::string_view label) const {
  for (const auto& p : pipelines)
    if (p.label == label) return &p;
  return nullptr;
}

namespace {

// ---------------------------------------------------------------- lexing

struct Token {
  std::string_view text;
  std::size_t column = 0;  // 1-based
};

bool is_punct(char c) { return c == ':' || c == ';' || c == '=' || c == ','; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (c == '#') break;
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (is_punct(c)) {
      out.push_back({line.substr(i, 1), i + 1});
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j]) && !is_punct(line[j]) && line[j] != '#') ++j;
    out.push_back({line.substr(i, j - i), i + 1});
    i = j;
  }
  return out;
}

bool is_identifier(std::string_view s) {
  if (s.empty() || s.size() > 64) return false;
  const auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  const auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(s[0])) return false;
  return std::all_of(s.begin(), s.end(),
                     [&](char c) { return alpha(c) || digit(c) || c == '-' || c == '.'; });
}

std::optional<double> parse_decimal(std::string_view s) {
  if (s.empty() || s.size() > 64) return std::nullopt;
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Decimal, or num/den with both parts decimal.
std::optional<double> parse_number(std::string_view s) {
  const auto slash = s.find('/');
  if (slash == std::string_view::npos) return parse_decimal(s);
  const auto num = parse_decimal(s.substr(0, slash));
  const auto den = parse_decimal(s.substr(slash + 1));
  if (!num || !den || *den == 0.0) return std::nullopt;
  const double v = *num / *den;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> parse_unsigned(std::string_view s) {
  if (s.empty() || s.size() > 20) return std::nullopt;
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) return std::nullopt;
  return v;
}

// ---------------------------------------------------------------- parsing

struct TruthEntry {
  std::size_t line;
  std::string bits;
  double value;
};

struct Draft {
  std::optional<std::string> name;
  std::size_t name_line = 0;
  std::vector<Variable> variables;
  std::vector<std::size_t> variable_lines;
  std::vector<Edge> edges;
  std::vector<std::size_t> edge_lines;
  std::optional<ParameterGrid> grid;
  std::map<std::string, std::vector<TruthEntry>> truth;
  std::vector<std::pair<std::string, std::size_t>> truth_order;  // first line per variable
  std::vector<Pipeline> pipelines;
  std::vector<std::size_t> pipeline_lines;
  Settings settings;
};

class LineParser {
 public:
  LineParser(std::size_t line_no, std::string_view line, Draft& draft)
      : line_no_(line_no), line_(line), tokens_(tokenize(line)), draft_(draft) {}

  void parse() {
    if (tokens_.empty()) return;
    const auto head = next("directive");
    if (head.text == "scenario") return scenario();
    if (head.text == "var") return var();
    if (head.text == "edge") return edge();
    if (head.text == "grid") return grid();
    if (head.text == "truth") return truth();
    if (head.text == "settings") return settings();
    if (head.text == "pipeline") return pipeline();
    fail(head, "unknown directive");
  }

 private:
  [[noreturn]] void fail(const Token& t, const std::string& message) const {
    throw ParseError(line_no_, t.column, message, std::string(t.text));
  }
  [[noreturn]] void fail_at_end(const std::string& message) const {
    // Points at the last character of the line, which always exists here.
    std::size_t col = line_.size();
    while (col > 1 && is_space(line_[col - 1])) --col;
    throw ParseError(line_no_, std::max<std::size_t>(col, 1), message, "");
  }

  bool at_end() const { return pos_ >= tokens_.size(); }
  const Token& peek() const { return tokens_[pos_]; }

  Token next(const std::string& what) {
    if (at_end()) fail_at_end("expected " + what);
    return tokens_[pos_++];
  }

  void expect(std::string_view text) {
    const auto t = next("'" + std::string(text) + "'");
    if (t.text != text) fail(t, "expected '" + std::string(text) + "'");
  }

  std::string identifier(const std::string& what) {
    const auto t = next(what);
    if (!is_identifier(t.text)) fail(t, "expected " + what);
    return std::string(t.text);
  }

  double number(const std::string& what) {
    const auto t = next(what);
    const auto v = parse_number(t.text);
    if (!v) fail(t, "expected a number for " + what);
    return *v;
  }

  double probability(const std::string& what) {
    const auto t = next(what);
    const auto v = parse_number(t.text);
    if (!v) fail(t, "expected a probability for " + what);
    if (*v < 0.0 || *v > 1.0) fail(t, what + " must lie in [0, 1]");
    return *v;
  }

  int bit(const std::string& what) {
    const auto t = next(what);
    if (t.text == "0") return 0;
    if (t.text == "1") return 1;
    fail(t, "expected 0 or 1 for " + what);
  }

  void finish() {
    if (!at_end()) fail(peek(), "unexpected trailing token");
  }

  void scenario() {
    if (draft_.name) fail(tokens_[0], "scenario name already given on line " +
                                          std::to_string(draft_.name_line));
    draft_.name = identifier("scenario name");
    draft_.name_line = line_no_;
    finish();
  }

  void var() {
    Variable v;
    const auto name_tok = at_end() ? Token{} : peek();
    v.name = identifier("variable name");
    const auto vis = next("'obs' or 'hidden'");
    if (vis.text == "obs")
      v.visibility = Visibility::observed;
    else if (vis.text == "hidden")
      v.visibility = Visibility::hidden;
    else
      fail(vis, "expected 'obs' or 'hidden'");
    if (!at_end()) {
      const auto role = next("role");
      if (role.text == "treatment")
        v.role = Role::treatment;
      else if (role.text == "outcome")
        v.role = Role::outcome;
      else if (role.text == "covariate")
        v.role = Role::covariate;
      else
        fail(role, "expected 'treatment', 'outcome' or 'covariate'");
    }
    finish();
    for (const auto& existing : draft_.variables)
      if (existing.name == v.name) fail(name_tok, "variable declared twice");
    if (draft_.variables.size() >= kMaxVariables)
      fail(name_tok, "more than " + std::to_string(kMaxVariables) + " variables");
    draft_.variables.push_back(std::move(v));
    draft_.variable_lines.push_back(line_no_);
  }

  void edge() {
    auto parent = identifier("parent variable");
    auto child = identifier("child variable");
    finish();
    draft_.edges.emplace_back(std::move(parent), std::move(child));
    draft_.edge_lines.push_back(line_no_);
  }

  void grid() {
    if (draft_.grid) fail(tokens_[0], "grid given twice");
    std::vector<double> levels;
    while (!at_end()) levels.push_back(probability("grid level"));
    if (levels.empty()) fail_at_end("expected at least one grid level");
    try {
      draft_.grid = ParameterGrid(std::move(levels));
    } catch (const Error& e) {
      throw ValidationError(line_no_, e.what());
    }
  }

  void truth() {
    const auto name = identifier("variable name");
    std::string bits;
    if (!at_end() && peek().text != "=") {
      const auto t = next("parent bits");
      if (t.text.size() > kMaxVariables ||
          !std::all_of(t.text.begin(), t.text.end(), [](char c) { return c == '0' || c == '1'; }))
        fail(t, "expected parent bits such as 01");
      bits = std::string(t.text);
    }
    expect("=");
    const double p = probability("truth entry");
    finish();
    auto& entries = draft_.truth[name];
    if (entries.empty()) draft_.truth_order.emplace_back(name, line_no_);
    entries.push_back({line_no_, std::move(bits), p});
  }

  void settings() {
    if (at_end()) fail_at_end("expected key=value settings");
    while (!at_end()) {
      const auto key = next("setting name");
      expect("=");
      const auto value = next("setting value");
      auto& s = draft_.settings;
      if (key.text == "epsilon" || key.text == "eps_id" || key.text == "quantum") {
        const auto v = parse_number(value.text);
        if (!v) fail(value, "expected a number");
        if (key.text == "quantum" ? !(*v > 0.0) : !(*v >= 0.0))
          fail(value, std::string(key.text) + (key.text == "quantum" ? " must be positive"
                                                                      : " must be non-negative"));
        if (key.text == "epsilon") s.epsilon = *v;
        if (key.text == "eps_id") s.eps_id = *v;
        if (key.text == "quantum") s.quantum = *v;
      } else if (key.text == "bins") {
        const auto v = parse_unsigned(value.text);
        if (!v || *v == 0 || *v > kMaxBins)
          fail(value, "bins must be an integer in [1, " + std::to_string(kMaxBins) + "]");
        s.bins = static_cast<std::size_t>(*v);
      } else if (key.text == "cap") {
        const auto v = parse_unsigned(value.text);
        if (!v || *v == 0) fail(value, "cap must be a positive integer");
        s.cap = *v;
      } else {
        fail(key, "unknown setting");
      }
    }
  }

  Operation step() {
    const auto kind = next("pipeline step");
    if (kind.text == "restrict") {
      Restrict r;
      do {
        auto v = identifier("variable name");
        expect("=");
        r.event.clauses.emplace_back(std::move(v), bit("restriction value"));
      } while (!at_end() && peek().text == "," && (++pos_, true));
      return r;
    }
    if (kind.text == "stratify") {
      Condition c;
      c.mode = Condition::Mode::stratify;
      c.variable = identifier("variable name");
      expect("=");
      c.value = bit("stratum value");
      return c;
    }
    if (kind.text == "adjust") {
      Condition c;
      c.mode = Condition::Mode::adjust;
      c.variable = identifier("variable name");
      return c;
    }
    if (kind.text == "intervene") {
      Intervene i;
      i.variable = identifier("variable name");
      expect("p");
      expect("=");
      i.probability = probability("intervention probability");
      return i;
    }
    fail(kind, "expected restrict, stratify, adjust or intervene");
  }

  void pipeline() {
    const auto label_tok = at_end() ? Token{} : peek();
    Pipeline p;
    p.label = identifier("pipeline label");
    expect(":");
    if (!at_end()) {
      p.steps.push_back(step());
      while (!at_end()) {
        expect(";");
        p.steps.push_back(step());
      }
    }
    for (const auto& existing : draft_.pipelines)
      if (existing.label == p.label) fail(label_tok, "pipeline label used twice");
    draft_.pipelines.push_back(std::move(p));
    draft_.pipeline_lines.push_back(line_no_);
  }

  std::size_t line_no_;
  std::string_view line_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  Draft& draft_;
};

// ---------------------------------------------------------------- validation

std::vector<Mechanism> build_mechanisms(const Draft& d, const CausalDiagram& diagram) {
  for (const auto& [name, line] : d.truth_order)
    if (!diagram.find(name))
      throw ValidationError(line, "truth for undeclared variable '" + name + "'");

  std::vector<Mechanism> mechanisms;
  for (std::size_t v = 0; v < diagram.size(); ++v) {
    const auto& name = diagram.variable(v).name;
    const auto parents = diagram.parent_names(v);
    const std::size_t arity = parents.size();
    const std::size_t rows = std::size_t{1} << arity;
    auto it = d.truth.find(name);
    if (it == d.truth.end())
      throw ValidationError(d.variable_lines[v], "no truth entries for '" + name + "'");
    std::vector<std::optional<double>> table(rows);
    for (const auto& e : it->second) {
      if (e.bits.size() != arity)
        throw ValidationError(e.line, "truth for '" + name + "' needs " + std::to_string(arity) +
                                          " parent bits, got " + std::to_string(e.bits.size()));
      std::size_t row = 0;
      for (char c : e.bits) row = row * 2 + static_cast<std::size_t>(c - '0');
      if (table[row])
        throw ValidationError(e.line, "duplicate truth entry for '" + name + "'");
      table[row] = e.value;
    }
    Mechanism m{name, parents, {}};
    for (std::size_t row = 0; row < rows; ++row) {
      if (!table[row]) {
        std::string bits;
        for (std::size_t b = arity; b-- > 0;) bits += ((row >> b) & 1U) ? '1' : '0';
        throw ValidationError(it->second.front().line,
                              "missing truth entry for '" + name + "'" +
                                  (arity ? " with parent bits " + bits : std::string()));
      }
      m.table.push_back(*table[row]);
    }
    mechanisms.push_back(std::move(m));
  }
  return mechanisms;
}

Scenario validate_draft(Draft d) {
  if (!d.name) throw ValidationError(0, "missing scenario directive");
  if (d.variables.empty()) throw ValidationError(0, "no variables declared");

  std::set<std::string> declared;
  for (const auto& v : d.variables) declared.insert(v.name);
  for (std::size_t e = 0; e < d.edges.size(); ++e)
    for (const auto* end : {&d.edges[e].first, &d.edges[e].second})
      if (!declared.count(*end))
        throw ValidationError(d.edge_lines[e], "edge uses undeclared variable '" + *end + "'");

  int treatments = 0, outcomes = 0;
  for (std::size_t v = 0; v < d.variables.size(); ++v) {
    const auto& var = d.variables[v];
    if (var.role == Role::treatment) ++treatments;
    if (var.role == Role::outcome) ++outcomes;
    if ((var.role == Role::treatment || var.role == Role::outcome) && !var.observed())
      throw ValidationError(d.variable_lines[v], "treatment and outcome must be observed");
  }
  if (treatments != 1) throw ValidationError(0, "exactly one treatment variable is required");
  if (outcomes != 1) throw ValidationError(0, "exactly one outcome variable is required");

  CausalDiagram diagram;
  try {
    diagram = CausalDiagram(d.variables, d.edges);
  } catch (const Error& e) {
    throw ValidationError(0, e.what());
  }

  auto mechanisms = build_mechanisms(d, diagram);
  StructuralModel truth;
  try {
    truth = StructuralModel(diagram, std::move(mechanisms));
  } catch (const Error& e) {
    throw ValidationError(0, e.what());
  }

  if (d.pipelines.empty()) throw ValidationError(0, "at least one pipeline is required");
  for (std::size_t p = 0; p < d.pipelines.size(); ++p) {
    for (const auto& op : d.pipelines[p].steps) {
      try {
        validate(op, diagram);
        const auto* c = std::get_if<Condition>(&op);
        if (c && c->mode == Condition::Mode::adjust) {
          const auto role = diagram.variable(c->variable).role;
          if (role == Role::treatment || role == Role::outcome)
            throw InvalidModel("cannot adjust for the treatment or the outcome");
        }
      } catch (const Error& e) {
        throw ValidationError(d.pipeline_lines[p], "pipeline '" + d.pipelines[p].label +
                                                       "': " + e.what());
      }
    }
  }

  Scenario s;
  s.name = std::move(*d.name);
  s.diagram = std::move(diagram);
  s.grid = d.grid ? std::move(*d.grid) : ParameterGrid();
  s.ground_truth = std::move(truth);
  s.pipelines = std::move(d.pipelines);
  s.settings = d.settings;
  return s;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  Draft draft;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    ++line_no;
    LineParser(line_no, text.substr(start, end - start), draft).parse();
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return validate_draft(std::move(draft));
}

// ---------------------------------------------------------------- rendering

std::string render_scenario(const Scenario& s) {
  std::string out = "scenario " + s.name + "\n";
  for (const auto& v : s.diagram.variables()) {
    out += "var " + v.name + (v.observed() ? " obs" : " hidden");
    if (v.role == Role::treatment) out += " treatment";
    if (v.role == Role::outcome) out += " outcome";
    if (v.role == Role::covariate) out += " covariate";
    out += "\n";
  }
  for (const auto& [from, to] : s.diagram.edges()) out += "edge " + from + " " + to + "\n";
  out += "grid";
  for (double level : s.grid.levels()) out += " " + format_number(level);
  out += "\n";
  for (const auto& m : s.ground_truth.mechanisms()) {
    const std::size_t arity = m.parents.size();
    for (std::size_t row = 0; row < m.table.size(); ++row) {
      out += "truth " + m.child;
      if (arity) {
        out += " ";
        for (std::size_t b = arity; b-- > 0;) out += ((row >> b) & 1U) ? '1' : '0';
      }
      out += " = " + format_number(m.table[row]) + "\n";
    }
  }
  const auto& st = s.settings;
  out += "settings epsilon=" + format_number(st.epsilon) + " eps_id=" + format_number(st.eps_id) +
         " bins=" + std::to_string(st.bins) + " quantum=" + format_number(st.quantum) +
         " cap=" + std::to_string(st.cap) + "\n";
  for (const auto& p : s.pipelines) {
    out += "pipeline " + p.label + ":";
    for (std::size_t i = 0; i < p.steps.size(); ++i) {
      out += i ? " ; " : " ";
      out += describe(p.steps[i]);
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- builtins

namespace {

// P(Y=1 | U, T) rises with both the treatment and the hidden cause, so the
// crude contrast of T on Y is confounded through U -> X -> T.
constexpr std::string_view kFig1 = R"(scenario fig1
var U hidden
var X obs
var T obs treatment
var Y obs outcome
edge U X
edge U Y
edge X T
edge T Y
grid 0 0.25 0.5 0.75 1
truth U = 0.5
truth X 0 = 0.25
truth X 1 = 0.75
truth T 0 = 0.25
truth T 1 = 0.75
truth Y 00 = 0.25
truth Y 01 = 0.5
truth Y 10 = 0.5
truth Y 11 = 0.75
settings epsilon=0.02 eps_id=0.05 bins=41 quantum=1e-06 cap=100000000
pipeline CR: adjust X
pipeline RC: restrict X=1 ; adjust X
)";

// The proxy X no longer blocks the backdoor: U also points into T.
constexpr std::string_view kS2 = R"(scenario s2
var U hidden
var X obs
var T obs treatment
var Y obs outcome
edge U X
edge U T
edge U Y
edge X T
edge T Y
grid 0 0.5 1
truth U = 0.5
truth X 0 = 0.5
truth X 1 = 1
truth T 00 = 0.5
truth T 01 = 0.5
truth T 10 = 0.5
truth T 11 = 1
truth Y 00 = 0.5
truth Y 01 = 0.5
truth Y 10 = 0.5
truth Y 11 = 1
settings epsilon=0.02 eps_id=0.05 bins=41 quantum=1e-06 cap=100000000
pipeline CR: adjust X
pipeline RC: restrict X=1 ; adjust X
)";

constexpr std::string_view kTrial = R"(scenario trial
var V obs covariate
var T obs treatment
var A obs
var Y obs outcome
edge V T
edge V A
edge V Y
edge T A
edge T Y
grid 0.25 0.5 0.75
truth V = 0.5
truth T 0 = 0.25
truth T 1 = 0.75
truth A 00 = 0.5
truth A 01 = 0.25
truth A 10 = 0.75
truth A 11 = 0.5
truth Y 00 = 0.25
truth Y 01 = 0.5
truth Y 10 = 0.25
truth Y 11 = 0.75
settings epsilon=0.02 eps_id=0.05 bins=41 quantum=1e-06 cap=100000000
pipeline RIR: restrict V=1 ; intervene T p=0.5 ; restrict A=1
pipeline IRR: intervene T p=0.5 ; restrict V=1 ; restrict A=1
)";

constexpr std::string_view kIndependent = R"(scenario independent
var A obs
var B obs
var T obs treatment
var Y obs outcome
edge T Y
grid 0 0.25 0.5 0.75 1
truth A = 0.5
truth B = 0.75
truth T = 0.5
truth Y 0 = 0.25
truth Y 1 = 0.75
settings epsilon=0.02 eps_id=0.05 bins=41 quantum=1e-06 cap=100000000
pipeline AB: restrict A=1 ; restrict B=1
pipeline BA: restrict B=1 ; restrict A=1
)";

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"fig1", "s2", "trial", "independent"};
  return names;
}

std::string_view builtin_scenario(std::string_view name) {
  if (name == "fig1") return kFig1;
  if (name == "s2") return kS2;
  if (name == "trial") return kTrial;
  if (name == "independent") return kIndependent;
  throw std::out_of_range("unknown builtin scenario '" + std::string(name) + "'");
}

}  // namespace evs
