#include "evs/operators.hpp"

#include <algorithm>

namespace evs {

EvidentialState initial_state(ModelClassPtr model_class, StructuralModel ground_truth,
                              double epsilon, Parallelism parallelism) {
  if (!(ground_truth.diagram() == model_class->diagram()))
    throw InvalidModel("ground truth is not a model of the class diagram");
  if (!(epsilon >= 0.0)) throw InvalidModel("epsilon must be non-negative");
  EvidentialState s;
  s.truth_ = std::make_shared<const StructuralModel>(std::move(ground_truth));
  s.world_ = joint(*s.truth_);
  const auto observed = s.truth_->diagram().observed_names();
  s.observed_ = marginal(s.world_, observed);
  s.epsilon_ = epsilon;
  s.parallelism_ = parallelism;
  std::vector<Constraint> constraints{Constraint{Constraint::Kind::match_observed, {}, s.observed_, epsilon}};
  s.admissible_ = admissible(std::move(model_class), std::move(constraints), parallelism);
  return s;
}

EvidentialState apply(const EvidentialState& state, const Operation& op) {
  const auto& diagram = state.ground_truth().diagram();
  validate(op, diagram);

  EvidentialState next = state;
  next.origin_ = state.is_origin() ? std::make_shared<const EvidentialState>(state) : state.origin_;
  next.trace_.push_back(op);
  const auto observed = diagram.observed_names();

  if (const auto* c = std::get_if<Condition>(&op); c && c->mode == Condition::Mode::adjust) {
    if (std::find(next.adjustment_set_.begin(), next.adjustment_set_.end(), c->variable) ==
        next.adjustment_set_.end())
      next.adjustment_set_.push_back(c->variable);
    const auto t = diagram.treatment();
    const auto y = diagram.outcome();
    if (!t || !y) throw InvalidModel("adjustment needs a treatment and an outcome");
    const auto& tname = diagram.variable(*t).name;
    const auto& yname = diagram.variable(*y).name;
    if (!diagram.variable(*t).observed() || !diagram.variable(*y).observed())
      throw InvalidModel("adjustment needs an observed treatment and outcome");

    AdjustmentRecord record;
    record.step = next.trace_.size() - 1;
    record.variables = next.adjustment_set_;
    try {
      record.estimate = adjustment_estimate(next.observed_, tname, yname, next.adjustment_set_,
                                            &next.origin().observed());
    } catch (const PositivityViolation& e) {
      record.violation = e.what();
      record.violating_treatment = e.treatment_value();
      record.violating_stratum = e.stratum();
    }
    next.adjustments_.push_back(std::move(record));
    return next;
  }

  if (const auto* i = std::get_if<Intervene>(&op)) {
    next.world_ = intervene_world(state.world_, state.ground_truth(), i->variable, i->probability);
  } else {
    const Event event = event_of(op);
    if (!(probability(state.observed_, event) > 0.0))
      throw ZeroSupport("restriction to '" + describe(op) + "' leaves an empty world");
    next.world_ = condition_table(state.world_, event);
  }
  next.observed_ = marginal(next.world_, observed);
  next.admissible_ = refine(state.admissible_,
                            Constraint{Constraint::Kind::match_observed, next.trace_,
                                       next.observed_, state.epsilon_},
                            state.parallelism_);
  return next;
}

std::vector<EvidentialState> run_pipeline(const EvidentialState& initial,
                                          const Pipeline& pipeline) {
  std::vector<EvidentialState> states{initial};
  for (std::size_t i = 0; i < pipeline.steps.size(); ++i) {
    try {
      states.push_back(evs::apply(states.back(), pipeline.steps[i]));
    } catch (const ZeroSupport& e) {
      throw StepError(pipeline.label, i, e.what(), true);
    } catch (const SizeOverflow& e) {
      throw StepError(pipeline.label, i, e.what(), true);
    } catch (const Error& e) {
      throw StepError(pipeline.label, i, e.what(), false);
    }
  }
  return states;
}

}  // namespace evs
