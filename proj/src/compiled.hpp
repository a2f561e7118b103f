#pragma once

// Allocation-free evaluation of grid models. A CompiledDiagram precomputes
// for every (cell, variable) which flat parameter governs that factor, so a
// full joint is cells * variables multiplications.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "evs/model.hpp"
#include "evs/operation.hpp"

namespace evs::detail {

struct CompiledOp {
  enum class Kind { restrict, intervene };
  Kind kind = Kind::restrict;
  // restrict: keep cells with (cell & mask) == want
  std::size_t mask = 0;
  std::size_t want = 0;
  // intervene
  std::size_t target = 0;
  double p = 0.0;
  std::size_t keep_mask = 0;  // bits of the non-descendants of target
  std::vector<std::size_t> descendants;
};

class CompiledDiagram {
 public:
  explicit CompiledDiagram(const CausalDiagram& diagram);

  std::size_t variables() const { return n_; }
  std::size_t cells() const { return cells_; }
  std::size_t observed_cells() const { return observed_cells_; }
  std::size_t parameter_count() const { return parameter_count_; }
  std::size_t bit(std::size_t variable) const { return std::size_t{1} << (n_ - 1 - variable); }

  void joint(std::span<const double> params, std::span<double> out) const;
  void observed_marginal(std::span<const double> world, std::span<double> out) const;

  // Returns false when a restriction removes all mass.
  bool apply(std::span<const double> params, const CompiledOp& op, std::span<double> world,
             std::span<double> scratch) const;

  // Condition(adjust) compiles to nothing.
  std::vector<CompiledOp> compile(std::span<const Operation> ops) const;

  double tau(std::span<const double> params) const;

 private:
  double factor(std::span<const double> params, std::size_t cell, std::size_t v) const {
    const double one = params[param_of_[cell * n_ + v]];
    return (cell & bit(v)) ? one : 1.0 - one;
  }
  double mean_outcome_under(std::span<const double> params, double p) const;

  CausalDiagram diagram_;
  std::size_t n_ = 0;
  std::size_t cells_ = 0;
  std::size_t observed_cells_ = 0;
  std::size_t parameter_count_ = 0;
  std::vector<std::uint32_t> param_of_;
  std::vector<std::uint32_t> observed_cell_of_;
  std::size_t treatment_ = 0;
  std::size_t outcome_ = 0;
  bool has_roles_ = false;
};

inline double total_variation(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
  return 0.5 * sum;
}

}  // namespace evs::detail
