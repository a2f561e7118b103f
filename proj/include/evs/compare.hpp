#pragma once

// Side-by-side evaluation of two operator orders from the same state.

#include <optional>
#include <string>

#include "evs/metrics.hpp"
#include "evs/operators.hpp"

namespace evs {

struct CommutationTolerances {
  double table_tv = 1e-9;
  double eps_id = kDefaultEpsId;
  std::size_t bins = kDefaultBins;
};

struct CommutationReport {
  enum class Verdict { commute, diverge };

  std::string label_a;
  std::string label_b;
  EvidentialState state_a;
  EvidentialState state_b;
  bool scopes_match = true;
  std::optional<double> table_tv;  // absent when scopes differ
  double set_jaccard = 1.0;
  bool members_equal = true;
  std::optional<TauSet> tau_set_a;  // absent when the admissible set is empty
  std::optional<TauSet> tau_set_b;
  std::optional<bool> identifiable_a;
  std::optional<bool> identifiable_b;
  // Both verdicts known and different, whatever the table/set verdict says.
  bool identification_differs = false;
  Verdict verdict = Verdict::commute;
};

const char* to_string(CommutationReport::Verdict verdict);

double jaccard(const AdmissibleSet& a, const AdmissibleSet& b);

// Runs both pipelines from `initial`. Verdict is commute iff the final
// observed tables are within tol.table_tv and the member sets are equal.
CommutationReport compare_orders(const EvidentialState& initial, const Pipeline& a,
                                 const Pipeline& b, const CommutationTolerances& tol = {});

// Same report from final states computed elsewhere.
CommutationReport compare_states(std::string label_a, const EvidentialState& a,
                                 std::string label_b, const EvidentialState& b,
                                 const CommutationTolerances& tol = {});

}  // namespace evs
