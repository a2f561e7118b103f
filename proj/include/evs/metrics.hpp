#pragma once

// Identified sets of tau and the quantities behind the causal-breadth audit.
//
// tau is binned into B equal bins over [-1, 1]; bin b covers
// [-1 + 2b/B, -1 + 2(b+1)/B) and tau = 1 falls in the last bin. Every
// admissible member carries the same weight. Entropies and divergences are
// in bits, with 0 log 0 = 0.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evs/enumerate.hpp"
#include "evs/operators.hpp"

namespace evs {

inline constexpr std::size_t kDefaultBins = 41;
inline constexpr double kDefaultEpsId = 0.05;

// Mergeable accumulator (commutative monoid) behind TauSet.
class TauHistogram {
 public:
  explicit TauHistogram(std::size_t bins = kDefaultBins);

  void add(double tau);
  void merge(const TauHistogram& other);

  std::size_t bins() const { return counts_.size(); }
  std::uint64_t count() const { return count_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  double min() const { return min_; }
  double max() const { return max_; }

  static std::size_t bin_of(double tau, std::size_t bins);
  friend bool operator==(const TauHistogram&, const TauHistogram&) = default;

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t count_ = 0;
  double min_ = std::numeric_limits<double>::infinity();
  double max_ = -std::numeric_limits<double>::infinity();
};

struct TauSet {
  double min = 0.0;
  double max = 0.0;
  double width = 0.0;
  std::vector<std::uint64_t> histogram;
  std::uint64_t count = 0;
};

TauSet summarize(const TauHistogram& histogram);

// Shannon entropy in bits of the normalized histogram.
double entropy_bits(std::span<const std::uint64_t> histogram);

// tau over the given members of a class; throws EmptyAdmissible.
TauHistogram tau_histogram(const ModelClass& model_class, std::span<const std::uint64_t> members,
                           std::size_t bins, Parallelism parallelism = {});

TauSet tau_set(const EvidentialState& state, std::size_t bins = kDefaultBins);

// tau over the models matching only the state's latest recorded table, i.e.
// what that table alone leaves undetermined.
TauSet evidence_tau_set(const EvidentialState& state, std::size_t bins = kDefaultBins);

// Width of the identified set at most eps_id, and every registered
// adjustment estimable in the world where it was registered.
bool identifiable(const EvidentialState& state, double eps_id = kDefaultEpsId,
                  std::size_t bins = kDefaultBins);

struct EntropyReport {
  double h_prior = 0.0;
  double h_state = 0.0;
  double delta_cause = 0.0;
  std::size_t bins = kDefaultBins;
};

// Prior is the origin state's admissible set.
EntropyReport delta_cause(const EvidentialState& state, std::size_t bins = kDefaultBins);

struct BreadthReport {
  double kl_bits = 0.0;  // +inf when not dominated
  bool dominated = true;
};

// KL(p || q) in bits; throws ScopeMismatch.
BreadthReport kl_divergence(const JointTable& p, const JointTable& q);
// KL(P_E || P_full) against the origin's observed table.
BreadthReport delta_breadth(const EvidentialState& state);

struct ResidualK {
  double k = 0.0;        // infimum over the population's observational cells
  double k_class = 0.0;  // infimum over every cell of the class
  std::size_t cells = 0;
  std::size_t population_cells = 0;
  double quantum = 0.0;
  std::size_t bins = kDefaultBins;
  double epsilon = 0.0;
};

// For a model M, H(tau | M) is the entropy of tau over every class member
// whose observed law lies within epsilon (TV) of M's; models are grouped by
// fingerprint first. k is the infimum over `population` (typically the
// full-population admissible set), k_class the infimum over the whole class.
ResidualK residual_k(const ModelClass& model_class, std::span<const std::uint64_t> population,
                     double quantum, std::size_t bins, double epsilon,
                     Parallelism parallelism = {});
// Whole-class infimum only (k == k_class).
ResidualK residual_k(const ModelClass& model_class, double quantum, std::size_t bins,
                     double epsilon, Parallelism parallelism = {});

struct StepAudit {
  std::size_t index = 0;  // 0 is the initial state
  std::string step;       // empty for the initial state
  std::uint64_t admissible = 0;
  double h_state = 0.0;
  BreadthReport kl;
  bool h_nonincreasing = true;  // relative to the previous prefix
  bool kl_nondecreasing = true;
};

struct ConstraintReport {
  std::string label;
  double delta_cause = 0.0;
  BreadthReport delta_breadth;
  std::optional<double> product;  // absent when delta_breadth is unbounded
  double k = 0.0;
  std::optional<bool> satisfied;
  std::vector<StepAudit> steps;
  std::size_t monotonicity_violations = 0;
  std::size_t bins = kDefaultBins;
};

ConstraintReport constraint_audit(std::span<const EvidentialState> states, double k,
                                  std::size_t bins = kDefaultBins, std::string label = {});

}  // namespace evs
