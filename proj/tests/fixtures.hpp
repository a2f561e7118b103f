#pragma once

#include <memory>
#include <string>

#include "evs/enumerate.hpp"
#include "evs/operators.hpp"
#include "evs/scenario.hpp"

namespace fixtures {

inline evs::Scenario builtin(const std::string& name) {
  return evs::parse_scenario(evs::builtin_scenario(name));
}

inline evs::ModelClassPtr model_class(const evs::Scenario& s) {
  return std::make_shared<const evs::ModelClass>(s.diagram, s.grid, s.settings.cap);
}

inline evs::EvidentialState origin(const evs::Scenario& s, evs::Parallelism par = {}) {
  return evs::initial_state(model_class(s), s.ground_truth, s.settings.epsilon, par);
}

inline const evs::Pipeline& pipeline(const evs::Scenario& s, const std::string& label) {
  return *s.find_pipeline(label);
}

}  // namespace fixtures
