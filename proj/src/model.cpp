#include "evs/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace evs {

namespace {

constexpr double kSumTolerance = 1e-9;

std::size_t bit_of(std::size_t width, std::size_t position) {
  return std::size_t{1} << (width - 1 - position);
}

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream msg;
    msg << what << ": probability " << p << " outside [0,1]";
    throw InvalidModel(msg.str());
  }
}

}  // namespace

// ---------------------------------------------------------------- diagram

CausalDiagram::CausalDiagram(std::vector<Variable> variables, std::vector<Edge> edges)
    : variables_(std::move(variables)), edges_(std::move(edges)) {
  std::set<std::string_view> names;
  for (const auto& v : variables_) {
    if (v.name.empty()) throw InvalidModel("variable with empty name");
    if (!names.insert(v.name).second)
      throw InvalidModel("duplicate variable '" + v.name + "'");
  }
  const std::size_t n = variables_.size();
  parents_.assign(n, {});
  children_.assign(n, {});
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [from, to] : edges_) {
    const std::size_t p = index_of(from);
    const std::size_t c = index_of(to);
    if (p == c) throw InvalidModel("self loop on '" + from + "'");
    if (!seen.insert({p, c}).second)
      throw InvalidModel("duplicate edge " + from + " -> " + to);
    parents_[c].push_back(p);
    children_[p].push_back(c);
  }
  for (auto& ps : parents_) std::sort(ps.begin(), ps.end());
  for (auto& cs : children_) std::sort(cs.begin(), cs.end());

  // Kahn's algorithm, smallest declared index first for a stable order.
  std::vector<std::size_t> indegree(n);
  for (std::size_t v = 0; v < n; ++v) indegree[v] = parents_[v].size();
  std::set<std::size_t> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indegree[v] == 0) ready.insert(v);
  while (!ready.empty()) {
    const std::size_t v = *ready.begin();
    ready.erase(ready.begin());
    topo_.push_back(v);
    for (std::size_t c : children_[v])
      if (--indegree[c] == 0) ready.insert(c);
  }
  if (topo_.size() != n) throw InvalidModel("edges contain a directed cycle");
}

std::optional<std::size_t> CausalDiagram::find(std::string_view name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (variables_[i].name == name) return i;
  return std::nullopt;
}

std::size_t CausalDiagram::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw UnknownVariable(std::string(name));
}

std::vector<std::string> CausalDiagram::parent_names(std::size_t index) const {
  std::vector<std::string> out;
  for (std::size_t p : parents_[index]) out.push_back(variables_[p].name);
  return out;
}

std::vector<std::size_t> CausalDiagram::descendants(std::size_t index) const {
  std::vector<bool> mark(variables_.size(), false);
  std::vector<std::size_t> stack(children_[index].begin(), children_[index].end());
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (mark[v]) continue;
    mark[v] = true;
    for (std::size_t c : children_[v]) stack.push_back(c);
  }
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < mark.size(); ++v)
    if (mark[v]) out.push_back(v);
  return out;
}

std::vector<std::string> CausalDiagram::observed_names() const {
  std::vector<std::string> out;
  for (const auto& v : variables_)
    if (v.observed()) out.push_back(v.name);
  return out;
}

std::optional<std::size_t> CausalDiagram::treatment() const {
  std::optional<std::size_t> found;
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].role != Role::treatment) continue;
    if (found) throw InvalidModel("more than one treatment variable");
    found = i;
  }
  return found;
}

std::optional<std::size_t> CausalDiagram::outcome() const {
  std::optional<std::size_t> found;
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].role != Role::outcome) continue;
    if (found) throw InvalidModel("more than one outcome variable");
    found = i;
  }
  return found;
}

CausalDiagram CausalDiagram::without_edges_into(std::string_view target) const {
  index_of(target);
  std::vector<Edge> kept;
  for (const auto& e : edges_)
    if (e.second != target) kept.push_back(e);
  return CausalDiagram(variables_, std::move(kept));
}

// ---------------------------------------------------------------- model

StructuralModel::StructuralModel(CausalDiagram diagram, std::vector<Mechanism> mechanisms)
    : diagram_(std::move(diagram)), mechanisms_(std::move(mechanisms)) {
  if (mechanisms_.size() != diagram_.size())
    throw InvalidModel("expected one mechanism per variable");
  for (std::size_t v = 0; v < diagram_.size(); ++v) {
    const auto& m = mechanisms_[v];
    const auto& name = diagram_.variable(v).name;
    if (m.child != name)
      throw InvalidModel("mechanism for '" + m.child + "' out of order, expected '" +
                         name + "'");
    if (m.parents != diagram_.parent_names(v))
      throw InvalidModel("mechanism parents of '" + name +
                         "' differ from the diagram");
    if (m.table.size() != (std::size_t{1} << m.parents.size()))
      throw InvalidModel("mechanism of '" + name + "' has wrong table size");
    for (double p : m.table) check_probability(p, "mechanism of '" + name + "'");
  }
}

StructuralModel StructuralModel::from_parameters(CausalDiagram diagram,
                                                 std::span<const double> parameters) {
  std::vector<Mechanism> mechanisms;
  std::size_t offset = 0;
  for (std::size_t v = 0; v < diagram.size(); ++v) {
    Mechanism m{diagram.variable(v).name, diagram.parent_names(v), {}};
    const std::size_t rows = std::size_t{1} << m.parents.size();
    if (offset + rows > parameters.size())
      throw InvalidModel("too few parameters for diagram");
    m.table.assign(parameters.begin() + offset, parameters.begin() + offset + rows);
    offset += rows;
    mechanisms.push_back(std::move(m));
  }
  if (offset != parameters.size()) throw InvalidModel("too many parameters for diagram");
  return StructuralModel(std::move(diagram), std::move(mechanisms));
}

std::vector<double> StructuralModel::parameters() const {
  std::vector<double> out;
  for (const auto& m : mechanisms_) out.insert(out.end(), m.table.begin(), m.table.end());
  return out;
}

// ---------------------------------------------------------------- tables

JointTable::JointTable(std::vector<std::string> scope, std::vector<double> probs)
    : scope_(std::move(scope)), probs_(std::move(probs)) {
  if (scope_.size() >= 8 * sizeof(std::size_t) - 1)
    throw InvalidModel("table scope too large");
  if (probs_.size() != (std::size_t{1} << scope_.size()))
    throw InvalidModel("table needs 2^|scope| entries");
  std::set<std::string_view> names(scope_.begin(), scope_.end());
  if (names.size() != scope_.size()) throw InvalidModel("table scope repeats a variable");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw InvalidModel("negative probability in table");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    std::ostringstream msg;
    msg << "table sums to " << sum << ", not 1";
    throw InvalidModel(msg.str());
  }
}

std::optional<std::size_t> JointTable::position(std::string_view name) const {
  for (std::size_t i = 0; i < scope_.size(); ++i)
    if (scope_[i] == name) return i;
  return std::nullopt;
}

std::size_t JointTable::position_of(std::string_view name) const {
  if (auto p = position(name)) return *p;
  throw UnknownVariable(std::string(name));
}

void validate_event(const Event& event, const CausalDiagram& diagram) {
  std::set<std::string_view> seen;
  for (const auto& [name, value] : event.clauses) {
    const auto& v = diagram.variable(name);
    if (!v.observed())
      throw InvalidModel("event clause on hidden variable '" + name + "'");
    if (value != 0 && value != 1)
      throw InvalidModel("event value for '" + name + "' must be 0 or 1");
    if (!seen.insert(name).second)
      throw InvalidModel("event repeats variable '" + name + "'");
  }
}

namespace {

// Cells matching the event are those with (cell & mask) == want.
std::pair<std::size_t, std::size_t> event_mask(const JointTable& table, const Event& event) {
  std::size_t mask = 0;
  std::size_t want = 0;
  const std::size_t width = table.scope().size();
  for (const auto& [name, value] : event.clauses) {
    const std::size_t bit = bit_of(width, table.position_of(name));
    if (mask & bit) throw InvalidModel("event repeats variable '" + name + "'");
    mask |= bit;
    if (value) want |= bit;
  }
  return {mask, want};
}

}  // namespace

double probability(const JointTable& table, const Event& event) {
  const auto [mask, want] = event_mask(table, event);
  double mass = 0.0;
  for (std::size_t c = 0; c < table.cells(); ++c)
    if ((c & mask) == want) mass += table[c];
  return mass;
}

JointTable joint(const StructuralModel& model) {
  const auto& d = model.diagram();
  const std::size_t n = d.size();
  std::vector<std::string> scope;
  for (const auto& v : d.variables()) scope.push_back(v.name);
  std::vector<double> probs(std::size_t{1} << n, 0.0);
  for (std::size_t cell = 0; cell < probs.size(); ++cell) {
    double p = 1.0;
    for (std::size_t v : d.topological_order()) {
      std::size_t tuple = 0;
      for (std::size_t parent : d.parents(v))
        tuple = (tuple << 1) | ((cell >> (n - 1 - parent)) & 1U);
      const double one = model.mechanisms()[v].probability_one(tuple);
      p *= ((cell >> (n - 1 - v)) & 1U) ? one : 1.0 - one;
      if (p == 0.0) break;
    }
    probs[cell] = p;
  }
  return JointTable(std::move(scope), std::move(probs));
}

JointTable marginal(const JointTable& table, std::span<const std::string> keep) {
  const std::size_t width = table.scope().size();
  std::vector<std::size_t> bits;
  for (const auto& name : keep) bits.push_back(bit_of(width, table.position_of(name)));
  std::vector<double> probs(std::size_t{1} << keep.size(), 0.0);
  for (std::size_t c = 0; c < table.cells(); ++c) {
    std::size_t out = 0;
    for (std::size_t b : bits) out = (out << 1) | ((c & b) ? 1U : 0U);
    probs[out] += table[c];
  }
  return JointTable(std::vector<std::string>(keep.begin(), keep.end()), std::move(probs));
}

JointTable condition_table(const JointTable& table, const Event& event) {
  const auto [mask, want] = event_mask(table, event);
  double mass = 0.0;
  for (std::size_t c = 0; c < table.cells(); ++c)
    if ((c & mask) == want) mass += table[c];
  if (!(mass > 0.0)) throw ZeroSupport("restriction to an event of probability zero");
  std::vector<double> probs(table.cells(), 0.0);
  for (std::size_t c = 0; c < table.cells(); ++c)
    if ((c & mask) == want) probs[c] = table[c] / mass;
  return JointTable(table.scope(), std::move(probs));
}

StructuralModel do_replace(const StructuralModel& model, std::string_view target, double p) {
  check_probability(p, "intervention on '" + std::string(target) + "'");
  const std::size_t t = model.diagram().index_of(target);
  auto mechanisms = model.mechanisms();
  mechanisms[t].parents.clear();
  mechanisms[t].table = {p};
  return StructuralModel(model.diagram().without_edges_into(target), std::move(mechanisms));
}

JointTable intervene_world(const JointTable& world, const StructuralModel& model,
                           std::string_view target, double p) {
  check_probability(p, "intervention on '" + std::string(target) + "'");
  const auto& d = model.diagram();
  const std::size_t n = d.size();
  for (std::size_t v = 0; v < n; ++v)
    if (world.scope().size() != n || world.scope()[v] != d.variable(v).name)
      throw ScopeMismatch("world table must span the model's variables in order");
  const std::size_t t = d.index_of(target);
  const auto desc = d.descendants(t);

  std::vector<std::string> kept;
  for (std::size_t v = 0; v < n; ++v)
    if (v != t && !std::binary_search(desc.begin(), desc.end(), v))
      kept.push_back(d.variable(v).name);
  const JointTable base = marginal(world, kept);

  std::vector<double> probs(world.cells(), 0.0);
  for (std::size_t cell = 0; cell < probs.size(); ++cell) {
    std::size_t base_cell = 0;
    for (const auto& name : kept)
      base_cell = (base_cell << 1) | ((cell >> (n - 1 - d.index_of(name))) & 1U);
    double q = base[base_cell];
    q *= ((cell >> (n - 1 - t)) & 1U) ? p : 1.0 - p;
    for (std::size_t v : desc) {
      std::size_t tuple = 0;
      for (std::size_t parent : d.parents(v))
        tuple = (tuple << 1) | ((cell >> (n - 1 - parent)) & 1U);
      const double one = model.mechanisms()[v].probability_one(tuple);
      q *= ((cell >> (n - 1 - v)) & 1U) ? one : 1.0 - one;
    }
    probs[cell] = q;
  }
  return JointTable(world.scope(), std::move(probs));
}

namespace {

std::pair<std::size_t, std::size_t> roles(const CausalDiagram& d) {
  const auto t = d.treatment();
  const auto y = d.outcome();
  if (!t || !y) throw InvalidModel("model needs a treatment and an outcome variable");
  return {*t, *y};
}

double outcome_mean_under(const StructuralModel& model, std::size_t t, std::size_t y, double p) {
  const auto& name_t = model.diagram().variable(t).name;
  const auto world = joint(do_replace(model, name_t, p));
  const std::vector<std::string> keep{model.diagram().variable(y).name};
  return marginal(world, keep)[1];
}

}  // namespace

double tau(const StructuralModel& model) {
  const auto [t, y] = roles(model.diagram());
  return outcome_mean_under(model, t, y, 1.0) - outcome_mean_under(model, t, y, 0.0);
}

double tau_truncated(const StructuralModel& model) {
  const auto& d = model.diagram();
  const auto [t, y] = roles(d);
  const std::size_t n = d.size();
  // Recursive sum over assignments of every variable but T, in topological
  // order; T's factor is omitted and T is pinned by the caller.
  const auto& order = d.topological_order();
  std::vector<int> values(n, 0);
  auto mean_for = [&](int t_value) {
    values[t] = t_value;
    double total = 0.0;
    auto recurse = [&](auto&& self, std::size_t k, double weight) -> void {
      if (weight == 0.0) return;
      if (k == n) {
        total += weight * values[y];
        return;
      }
      const std::size_t v = order[k];
      if (v == t) return self(self, k + 1, weight);
      std::size_t tuple = 0;
      for (std::size_t parent : d.parents(v))
        tuple = (tuple << 1) | static_cast<std::size_t>(values[parent]);
      const double one = model.mechanisms()[v].probability_one(tuple);
      values[v] = 1;
      self(self, k + 1, weight * one);
      values[v] = 0;
      self(self, k + 1, weight * (1.0 - one));
    };
    recurse(recurse, 0, 1.0);
    return total;
  };
  return mean_for(1) - mean_for(0);
}

double risk_difference(const JointTable& table, std::string_view treatment,
                       std::string_view outcome) {
  return adjustment_estimate(table, treatment, outcome, {});
}

double adjustment_estimate(const JointTable& table, std::string_view treatment,
                           std::string_view outcome, std::span<const std::string> adjust,
                           const JointTable* strata) {
  const std::size_t width = table.scope().size();
  const std::size_t bit_t = bit_of(width, table.position_of(treatment));
  const std::size_t bit_y = bit_of(width, table.position_of(outcome));
  std::vector<std::size_t> bits;
  for (const auto& a : adjust) {
    if (a == treatment || a == outcome)
      throw InvalidModel("adjustment set contains the treatment or outcome");
    bits.push_back(bit_of(width, table.position_of(a)));
  }
  const std::size_t strata_count = std::size_t{1} << adjust.size();
  auto stratum_of = [&](std::size_t cell) {
    std::size_t s = 0;
    for (std::size_t b : bits) s = (s << 1) | ((cell & b) ? 1U : 0U);
    return s;
  };

  // n[s][t] = P(T=t, x_s), y1[s][t] = P(Y=1, T=t, x_s)
  std::vector<double> n(strata_count * 2, 0.0);
  std::vector<double> y1(strata_count * 2, 0.0);
  for (std::size_t c = 0; c < table.cells(); ++c) {
    const std::size_t k = stratum_of(c) * 2 + ((c & bit_t) ? 1 : 0);
    n[k] += table[c];
    if (c & bit_y) y1[k] += table[c];
  }

  std::vector<double> weight(strata_count, 0.0);
  if (strata) {
    const JointTable w = marginal(*strata, adjust);
    for (std::size_t s = 0; s < strata_count; ++s) weight[s] = w[s];
  } else {
    for (std::size_t s = 0; s < strata_count; ++s) weight[s] = n[2 * s] + n[2 * s + 1];
  }

  double estimate = 0.0;
  for (std::size_t s = 0; s < strata_count; ++s) {
    if (!(weight[s] > 0.0)) continue;
    for (int tv = 0; tv < 2; ++tv) {
      if (n[2 * s + tv] > 0.0) continue;
      std::vector<std::pair<std::string, int>> stratum;
      std::ostringstream msg;
      msg << "positivity violated: P(" << treatment << "=" << tv;
      for (std::size_t i = 0; i < adjust.size(); ++i) {
        const int xv = static_cast<int>((s >> (adjust.size() - 1 - i)) & 1U);
        stratum.emplace_back(adjust[i], xv);
        msg << ", " << adjust[i] << "=" << xv;
      }
      msg << ") = 0 in a stratum with positive weight";
      throw PositivityViolation(tv, std::move(stratum), msg.str());
    }
    estimate += weight[s] * (y1[2 * s + 1] / n[2 * s + 1] - y1[2 * s] / n[2 * s]);
  }
  return estimate;
}

double total_variation(const JointTable& a, const JointTable& b) {
  if (a.scope() != b.scope()) throw ScopeMismatch("tables have different scopes");
  double sum = 0.0;
  for (std::size_t c = 0; c < a.cells(); ++c) sum += std::abs(a[c] - b[c]);
  return 0.5 * sum;
}

}  // namespace evs
