#include "compiled.hpp"

#include <algorithm>

namespace evs::detail {

CompiledDiagram::CompiledDiagram(const CausalDiagram& diagram)
    : diagram_(diagram), n_(diagram.size()), cells_(std::size_t{1} << diagram.size()) {
  std::vector<std::size_t> offset(n_);
  for (std::size_t v = 0; v < n_; ++v) {
    offset[v] = parameter_count_;
    parameter_count_ += std::size_t{1} << diagram.parents(v).size();
  }
  param_of_.resize(cells_ * n_);
  for (std::size_t cell = 0; cell < cells_; ++cell) {
    for (std::size_t v = 0; v < n_; ++v) {
      std::size_t tuple = 0;
      for (std::size_t parent : diagram.parents(v))
        tuple = (tuple << 1) | ((cell & bit(parent)) ? 1U : 0U);
      param_of_[cell * n_ + v] = static_cast<std::uint32_t>(offset[v] + tuple);
    }
  }
  std::vector<std::size_t> observed;
  for (std::size_t v = 0; v < n_; ++v)
    if (diagram.variable(v).observed()) observed.push_back(v);
  observed_cells_ = std::size_t{1} << observed.size();
  observed_cell_of_.resize(cells_);
  for (std::size_t cell = 0; cell < cells_; ++cell) {
    std::size_t o = 0;
    for (std::size_t v : observed) o = (o << 1) | ((cell & bit(v)) ? 1U : 0U);
    observed_cell_of_[cell] = static_cast<std::uint32_t>(o);
  }
  const auto t = diagram.treatment();
  const auto y = diagram.outcome();
  if (t && y) {
    has_roles_ = true;
    treatment_ = *t;
    outcome_ = *y;
  }
}

void CompiledDiagram::joint(std::span<const double> params, std::span<double> out) const {
  for (std::size_t cell = 0; cell < cells_; ++cell) {
    double p = 1.0;
    for (std::size_t v = 0; v < n_ && p != 0.0; ++v) p *= factor(params, cell, v);
    out[cell] = p;
  }
}

void CompiledDiagram::observed_marginal(std::span<const double> world,
                                        std::span<double> out) const {
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(observed_cells_), 0.0);
  for (std::size_t cell = 0; cell < cells_; ++cell) out[observed_cell_of_[cell]] += world[cell];
}

bool CompiledDiagram::apply(std::span<const double> params, const CompiledOp& op,
                            std::span<double> world, std::span<double> scratch) const {
  if (op.kind == CompiledOp::Kind::restrict) {
    double mass = 0.0;
    for (std::size_t cell = 0; cell < cells_; ++cell)
      if ((cell & op.mask) == op.want) mass += world[cell];
    if (!(mass > 0.0)) return false;
    for (std::size_t cell = 0; cell < cells_; ++cell)
      world[cell] = (cell & op.mask) == op.want ? world[cell] / mass : 0.0;
    return true;
  }
  // Marginal over the non-descendants, indexed by the masked full cell.
  std::fill(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(cells_), 0.0);
  for (std::size_t cell = 0; cell < cells_; ++cell) scratch[cell & op.keep_mask] += world[cell];
  const std::size_t tbit = bit(op.target);
  for (std::size_t cell = 0; cell < cells_; ++cell) {
    double q = scratch[cell & op.keep_mask];
    q *= (cell & tbit) ? op.p : 1.0 - op.p;
    for (std::size_t d : op.descendants) q *= factor(params, cell, d);
    world[cell] = q;
  }
  return true;
}

std::vector<CompiledOp> CompiledDiagram::compile(std::span<const Operation> ops) const {
  std::vector<CompiledOp> out;
  for (const auto& op : ops) {
    if (!changes_world(op)) continue;
    CompiledOp c;
    if (const auto* i = std::get_if<Intervene>(&op)) {
      c.kind = CompiledOp::Kind::intervene;
      c.target = diagram_.index_of(i->variable);
      c.p = i->probability;
      c.descendants = diagram_.descendants(c.target);
      for (std::size_t v = 0; v < n_; ++v)
        if (v != c.target &&
            !std::binary_search(c.descendants.begin(), c.descendants.end(), v))
          c.keep_mask |= bit(v);
    } else {
      c.kind = CompiledOp::Kind::restrict;
      for (const auto& [name, value] : event_of(op).clauses) {
        const std::size_t b = bit(diagram_.index_of(name));
        c.mask |= b;
        if (value) c.want |= b;
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

double CompiledDiagram::mean_outcome_under(std::span<const double> params, double p) const {
  const std::size_t tbit = bit(treatment_);
  const std::size_t ybit = bit(outcome_);
  double mean = 0.0;
  for (std::size_t cell = 0; cell < cells_; ++cell) {
    if (!(cell & ybit)) continue;
    double q = (cell & tbit) ? p : 1.0 - p;
    for (std::size_t v = 0; v < n_ && q != 0.0; ++v)
      if (v != treatment_) q *= factor(params, cell, v);
    mean += q;
  }
  return mean;
}

double CompiledDiagram::tau(std::span<const double> params) const {
  if (!has_roles_) throw InvalidModel("model needs a treatment and an outcome variable");
  return mean_outcome_under(params, 1.0) - mean_outcome_under(params, 0.0);
}

}  // namespace evs::detail
