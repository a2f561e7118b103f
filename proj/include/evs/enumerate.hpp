#pragma once

// Discretized model spaces and admissible model sets.
//
// A ModelClass enumerates every CPT assignment of a diagram over a grid of
// probability levels. Parameters are ordered by variable (declaration order)
// then by parent tuple (ascending), and enumeration index i decodes as a
// mixed-radix number whose first parameter is the most significant digit:
//
//   i = sum_j digit_j * L^(count-1-j),   parameter_j = levels[digit_j]
//
// so the last parameter varies fastest. Indices are stable identifiers of
// models across runs.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "evs/model.hpp"
#include "evs/operation.hpp"

namespace evs {

namespace detail {
class CompiledDiagram;
}

inline constexpr std::uint64_t kDefaultEnumerationCap = 100'000'000;

// Worker count for enumeration; 0 picks std::thread::hardware_concurrency.
struct Parallelism {
  unsigned threads = 0;
  unsigned resolved() const;
};

class ParameterGrid {
 public:
  // {0, 0.25, 0.5, 0.75, 1}
  ParameterGrid();
  // Throws InvalidModel unless levels are nonempty, strictly increasing and
  // inside [0,1].
  explicit ParameterGrid(std::vector<double> levels);
  // 0, step, 2*step, ..., 1; step must divide 1.
  static ParameterGrid with_step(double step);

  const std::vector<double>& levels() const { return levels_; }
  std::size_t size() const { return levels_.size(); }
  friend bool operator==(const ParameterGrid&, const ParameterGrid&) = default;

 private:
  std::vector<double> levels_;
};

class ModelClass {
 public:
  ModelClass(CausalDiagram diagram, ParameterGrid grid,
             std::uint64_t cap = kDefaultEnumerationCap);
  ~ModelClass();
  ModelClass(const ModelClass&) = delete;
  ModelClass& operator=(const ModelClass&) = delete;

  const CausalDiagram& diagram() const { return diagram_; }
  const ParameterGrid& grid() const { return grid_; }
  std::uint64_t cap() const { return cap_; }
  std::size_t parameter_count() const { return parameter_count_; }

  // |levels|^parameter_count, saturated at UINT64_MAX.
  std::uint64_t size() const { return size_; }
  bool within_cap() const { return size_ <= cap_; }
  // Throws SizeOverflow when the enumeration exceeds the cap.
  std::uint64_t checked_size() const;

  void decode(std::uint64_t index, std::span<double> parameters) const;
  StructuralModel model_at(std::uint64_t index) const;
  // Index of a model whose every parameter lies on the grid.
  std::optional<std::uint64_t> index_of(const StructuralModel& model) const;

  const detail::CompiledDiagram& compiled() const { return *compiled_; }

 private:
  CausalDiagram diagram_;
  ParameterGrid grid_;
  std::uint64_t cap_;
  std::size_t parameter_count_ = 0;
  std::uint64_t size_ = 0;
  std::unique_ptr<detail::CompiledDiagram> compiled_;
};

using ModelClassPtr = std::shared_ptr<const ModelClass>;

// A model satisfies the constraint when its observed law, transformed by the
// prefix operations, is within `epsilon` total variation of `reference`.
struct Constraint {
  enum class Kind { match_observed };
  Kind kind = Kind::match_observed;
  std::vector<Operation> prefix;
  JointTable reference;
  double epsilon = 0.02;
};

// Slack added to every epsilon comparison so that epsilon = 0 means an exact
// match up to rounding.
inline constexpr double kMatchSlack = 1e-12;

struct AdmissibleSet {
  ModelClassPtr model_class;
  std::vector<std::uint64_t> members;  // ascending
  std::vector<Constraint> constraints;

  std::size_t size() const { return members.size(); }
  bool empty() const { return members.empty(); }
  bool contains(std::uint64_t index) const;
  bool subset_of(const AdmissibleSet& other) const;
};

// Ordered stream over the whole class; throws SizeOverflow.
void enumerate_models(const ModelClass& model_class,
                      const std::function<void(std::uint64_t, const StructuralModel&)>& visit);

// Throws InvalidModel on a malformed constraint, SizeOverflow on the class.
AdmissibleSet admissible(ModelClassPtr model_class, std::vector<Constraint> constraints,
                         Parallelism parallelism = {});

// Members of `set` that also satisfy `extra`; equals admissible() over the
// extended constraint list.
AdmissibleSet refine(const AdmissibleSet& set, Constraint extra, Parallelism parallelism = {});

// Single-threaded reference implementation built on the table-level API.
AdmissibleSet naive_admissible(ModelClassPtr model_class, std::vector<Constraint> constraints);

using Fingerprint = std::vector<std::int64_t>;

Fingerprint fingerprint(std::span<const double> observed_law, double quantum);

std::map<Fingerprint, std::vector<std::uint64_t>> fingerprint_partition(
    const ModelClass& model_class, double quantum, Parallelism parallelism = {});

// Observed law of a model after a transformation prefix, computed without
// the grid fast path. Throws ZeroSupport when a restriction empties the world.
JointTable transformed_law(const StructuralModel& model, std::span<const Operation> prefix);

}  // namespace evs
