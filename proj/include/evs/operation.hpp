#pragma once

#include <string>
#include <variant>
#include <vector>

#include "evs/model.hpp"

namespace evs {

// R: keep the subpopulation satisfying the event.
struct Restrict {
  Event event;
  friend bool operator==(const Restrict&, const Restrict&) = default;
};

// C: stratify keeps one stratum of the variable (it changes the world like a
// restriction); adjust only registers the variable for adjustment.
struct Condition {
  enum class Mode { stratify, adjust };
  std::string variable;
  Mode mode = Mode::adjust;
  int value = 0;  // stratum kept by stratify
  friend bool operator==(const Condition&, const Condition&) = default;
};

// I: replace the variable's mechanism by Bernoulli(probability) assignment.
struct Intervene {
  std::string variable;
  double probability = 0.5;
  friend bool operator==(const Intervene&, const Intervene&) = default;
};

using Operation = std::variant<Restrict, Condition, Intervene>;

struct Pipeline {
  std::string label;
  std::vector<Operation> steps;
  friend bool operator==(const Pipeline&, const Pipeline&) = default;
};

// True for operations that transform the observed world (everything except
// Condition/adjust).
bool changes_world(const Operation& op);

// Restrict and stratify as the event they keep.
Event event_of(const Operation& op);

// Throws UnknownVariable or InvalidModel.
void validate(const Operation& op, const CausalDiagram& diagram);

// Scenario step syntax, e.g. "restrict X=1" or "intervene T p=0.5".
std::string describe(const Operation& op);

}  // namespace evs
