#pragma once

// Evidential states E = (P, M) and the operators that transform them.
//
// A state carries the ground truth's current world (the full joint, hidden
// variables included), its observed margin P, the trace of operations and
// the admissible set M. Every world-changing step appends one constraint
// whose prefix is the trace so far, so M only ever shrinks along a pipeline.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evs/enumerate.hpp"
#include "evs/model.hpp"
#include "evs/operation.hpp"

namespace evs {

// Outcome of a Condition(adjust) step, evaluated on the table available at
// the time of the step and standardized to the origin population's strata.
struct AdjustmentRecord {
  std::size_t step = 0;  // index in the trace
  std::vector<std::string> variables;
  std::optional<double> estimate;
  std::optional<std::string> violation;  // PositivityViolation message
  int violating_treatment = -1;
  std::vector<std::pair<std::string, int>> violating_stratum;

  bool valid() const { return estimate.has_value(); }
};

class EvidentialState {
 public:
  const JointTable& observed() const { return observed_; }
  const JointTable& world() const { return world_; }
  const std::vector<Operation>& trace() const { return trace_; }
  const AdmissibleSet& admissible() const { return admissible_; }
  const std::vector<std::string>& adjustment_set() const { return adjustment_set_; }
  const std::vector<AdjustmentRecord>& adjustments() const { return adjustments_; }

  bool is_origin() const { return origin_ == nullptr; }
  const EvidentialState& origin() const { return origin_ ? *origin_ : *this; }

  const ModelClass& model_class() const { return *admissible_.model_class; }
  const StructuralModel& ground_truth() const { return *truth_; }
  double epsilon() const { return epsilon_; }
  Parallelism parallelism() const { return parallelism_; }

 private:
  friend EvidentialState initial_state(ModelClassPtr, StructuralModel, double, Parallelism);
  friend EvidentialState apply(const EvidentialState&, const Operation&);

  std::shared_ptr<const StructuralModel> truth_;
  std::shared_ptr<const EvidentialState> origin_;
  JointTable world_;
  JointTable observed_;
  std::vector<Operation> trace_;
  AdmissibleSet admissible_;
  std::vector<std::string> adjustment_set_;
  std::vector<AdjustmentRecord> adjustments_;
  double epsilon_ = 0.02;
  Parallelism parallelism_;
};

// Throws InvalidModel when the ground truth is over a different diagram,
// SizeOverflow from enumeration.
EvidentialState initial_state(ModelClassPtr model_class, StructuralModel ground_truth,
                              double epsilon, Parallelism parallelism = {});

// Throws ZeroSupport, UnknownVariable or InvalidModel.
EvidentialState apply(const EvidentialState& state, const Operation& op);

// Error raised by run_pipeline, naming the pipeline and the failing step.
class StepError : public Error {
 public:
  StepError(std::string label, std::size_t step, std::string what, bool engine)
      : Error("pipeline '" + label + "' step " + std::to_string(step + 1) + ": " + what),
        label_(std::move(label)),
        step_(step),
        engine_(engine) {}
  const std::string& label() const { return label_; }
  std::size_t step() const { return step_; }
  // False when the step itself is malformed (unknown variable and similar).
  bool engine() const { return engine_; }

 private:
  std::string label_;
  std::size_t step_;
  bool engine_;
};

// States after every prefix, the initial state first.
std::vector<EvidentialState> run_pipeline(const EvidentialState& initial,
                                          const Pipeline& pipeline);

}  // namespace evs
