#include "evs/compare.hpp"

#include <algorithm>
#include <iterator>

namespace evs {

const char* to_string(CommutationReport::Verdict verdict) {
  return verdict == CommutationReport::Verdict::commute ? "commute" : "diverge";
}

double jaccard(const AdmissibleSet& a, const AdmissibleSet& b) {
  if (a.members.empty() && b.members.empty()) return 1.0;
  std::vector<std::uint64_t> both;
  std::set_intersection(a.members.begin(), a.members.end(), b.members.begin(), b.members.end(),
                        std::back_inserter(both));
  const double uni = static_cast<double>(a.size() + b.size() - both.size());
  return static_cast<double>(both.size()) / uni;
}

CommutationReport compare_states(std::string label_a, const EvidentialState& a,
                                 std::string label_b, const EvidentialState& b,
                                 const CommutationTolerances& tol) {
  CommutationReport r{std::move(label_a), std::move(label_b), a, b};
  r.scopes_match = a.observed().scope() == b.observed().scope();
  if (r.scopes_match) r.table_tv = total_variation(a.observed(), b.observed());
  r.members_equal = a.admissible().members == b.admissible().members;
  r.set_jaccard = jaccard(a.admissible(), b.admissible());
  if (!a.admissible().empty()) {
    r.tau_set_a = tau_set(a, tol.bins);
    r.identifiable_a = identifiable(a, tol.eps_id, tol.bins);
  }
  if (!b.admissible().empty()) {
    r.tau_set_b = tau_set(b, tol.bins);
    r.identifiable_b = identifiable(b, tol.eps_id, tol.bins);
  }
  r.identification_differs =
      r.identifiable_a && r.identifiable_b && *r.identifiable_a != *r.identifiable_b;
  const bool tables_close = r.table_tv && *r.table_tv <= tol.table_tv;
  r.verdict = tables_close && r.members_equal ? CommutationReport::Verdict::commute
                                              : CommutationReport::Verdict::diverge;
  return r;
}

CommutationReport compare_orders(const EvidentialState& initial, const Pipeline& a,
                                 const Pipeline& b, const CommutationTolerances& tol) {
  const auto states_a = run_pipeline(initial, a);
  const auto states_b = run_pipeline(initial, b);
  return compare_states(a.label, states_a.back(), b.label, states_b.back(), tol);
}

}  // namespace evs
