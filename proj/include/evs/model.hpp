#pragma once

// Binary causal diagrams, structural models and their probability tables.
//
// Bit conventions shared by every table in the engine:
//  - a JointTable cell index encodes one value per scope variable, the first
//    scope variable being the most significant bit;
//  - a Mechanism table is indexed the same way by its parent tuple, parents
//    ordered by declaration order in the diagram.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evs/errors.hpp"

namespace evs {

enum class Visibility { observed, hidden };
enum class Role { none, treatment, outcome, covariate };

struct Variable {
  std::string name;
  Visibility visibility = Visibility::observed;
  Role role = Role::none;

  bool observed() const { return visibility == Visibility::observed; }
  friend bool operator==(const Variable&, const Variable&) = default;
};

using Edge = std::pair<std::string, std::string>;

class CausalDiagram {
 public:
  CausalDiagram() = default;

  // Throws InvalidModel on duplicate names or cycles, UnknownVariable on an
  // edge endpoint that was not declared.
  CausalDiagram(std::vector<Variable> variables, std::vector<Edge> edges);

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t size() const { return variables_.size(); }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws UnknownVariable
  const Variable& variable(std::size_t index) const { return variables_[index]; }
  const Variable& variable(std::string_view name) const {
    return variables_[index_of(name)];
  }

  // Parent indices in declaration order.
  const std::vector<std::size_t>& parents(std::size_t index) const {
    return parents_[index];
  }
  std::vector<std::string> parent_names(std::size_t index) const;
  const std::vector<std::size_t>& topological_order() const { return topo_; }
  // Strict descendants, ascending index order.
  std::vector<std::size_t> descendants(std::size_t index) const;

  std::vector<std::string> observed_names() const;
  std::optional<std::size_t> treatment() const;
  std::optional<std::size_t> outcome() const;

  CausalDiagram without_edges_into(std::string_view target) const;

  friend bool operator==(const CausalDiagram& a, const CausalDiagram& b) {
    return a.variables_ == b.variables_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<Variable> variables_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> topo_;
};

// Conditional probability table P(child = 1 | parents).
struct Mechanism {
  std::string child;
  std::vector<std::string> parents;
  std::vector<double> table;

  double probability_one(std::size_t parent_tuple) const {
    return table[parent_tuple];
  }
  friend bool operator==(const Mechanism&, const Mechanism&) = default;
};

class StructuralModel {
 public:
  StructuralModel() = default;
  // Mechanisms must be given in variable declaration order and match the
  // diagram's parent lists exactly.
  StructuralModel(CausalDiagram diagram, std::vector<Mechanism> mechanisms);

  // Builds a model from a flat parameter vector (variable order, then parent
  // tuple ascending).
  static StructuralModel from_parameters(CausalDiagram diagram,
                                         std::span<const double> parameters);

  const CausalDiagram& diagram() const { return diagram_; }
  const std::vector<Mechanism>& mechanisms() const { return mechanisms_; }
  const Mechanism& mechanism(std::string_view name) const {
    return mechanisms_[diagram_.index_of(name)];
  }
  std::vector<double> parameters() const;

  friend bool operator==(const StructuralModel&, const StructuralModel&) = default;

 private:
  CausalDiagram diagram_;
  std::vector<Mechanism> mechanisms_;
};

class JointTable {
 public:
  JointTable() = default;
  // Throws InvalidModel unless probs has 2^|scope| non-negative entries that
  // sum to one within 1e-9.
  JointTable(std::vector<std::string> scope, std::vector<double> probs);

  const std::vector<std::string>& scope() const { return scope_; }
  const std::vector<double>& probs() const { return probs_; }
  std::size_t cells() const { return probs_.size(); }
  double operator[](std::size_t cell) const { return probs_[cell]; }

  std::optional<std::size_t> position(std::string_view name) const;
  std::size_t position_of(std::string_view name) const;  // throws UnknownVariable
  int value(std::size_t cell, std::size_t position) const {
    return static_cast<int>((cell >> (scope_.size() - 1 - position)) & 1U);
  }

  friend bool operator==(const JointTable&, const JointTable&) = default;

 private:
  std::vector<std::string> scope_;
  std::vector<double> probs_;
};

struct Event {
  std::vector<std::pair<std::string, int>> clauses;
  friend bool operator==(const Event&, const Event&) = default;
};

// Throws InvalidModel if clause variables repeat, are not declared observed,
// or if a value is not binary.
void validate_event(const Event& event, const CausalDiagram& diagram);

double probability(const JointTable& table, const Event& event);

// Full joint over every variable (hidden included), scope in declaration order.
JointTable joint(const StructuralModel& model);

// Keeps `keep` in the given order; throws UnknownVariable.
JointTable marginal(const JointTable& table, std::span<const std::string> keep);

// Throws ZeroSupport when the event has probability zero.
JointTable condition_table(const JointTable& table, const Event& event);

StructuralModel do_replace(const StructuralModel& model, std::string_view target,
                           double p);

// Intervention inside an already transformed world: the non-descendants of
// `target` keep their law in `world`, the target is assigned Bernoulli(p) and
// descendants are regenerated from the model's mechanisms. `world` must be a
// full table over the model's variables in declaration order.
JointTable intervene_world(const JointTable& world, const StructuralModel& model,
                           std::string_view target, double p);

// E[Y | do(T=1)] - E[Y | do(T=0)] by joint(do_replace(...)).
double tau(const StructuralModel& model);
// Same estimand by truncated factorization (T's factor dropped, T fixed).
double tau_truncated(const StructuralModel& model);

// P(Y=1 | T=1) - P(Y=1 | T=0); throws PositivityViolation if a level of T
// has no mass.
double risk_difference(const JointTable& table, std::string_view treatment,
                       std::string_view outcome);

// Sum over strata x of w(x) [P(Y=1|T=1,x) - P(Y=1|T=0,x)] where w is the
// stratum law of `strata` (defaults to `table` itself). Every stratum with
// w(x) > 0 needs P(T=t, x) > 0 in `table` for both t.
double adjustment_estimate(const JointTable& table, std::string_view treatment,
                           std::string_view outcome,
                           std::span<const std::string> adjust,
                           const JointTable* strata = nullptr);

// Throws ScopeMismatch when scopes differ.
double total_variation(const JointTable& a, const JointTable& b);

}  // namespace evs
