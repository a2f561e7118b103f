#include "evs/enumerate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "compiled.hpp"
#include "parallel.hpp"

namespace evs {

unsigned Parallelism::resolved() const {
  if (threads) return threads;
  return std::max(1U, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------- grid

ParameterGrid::ParameterGrid() : levels_{0.0, 0.25, 0.5, 0.75, 1.0} {}

ParameterGrid::ParameterGrid(std::vector<double> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw InvalidModel("grid needs at least one level");
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (!(levels_[i] >= 0.0 && levels_[i] <= 1.0))
      throw InvalidModel("grid level outside [0,1]");
    if (i && !(levels_[i] > levels_[i - 1]))
      throw InvalidModel("grid levels must be strictly increasing");
  }
}

ParameterGrid ParameterGrid::with_step(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw InvalidModel("grid step must lie in (0,1]");
  const double count = std::round(1.0 / step);
  if (std::abs(count * step - 1.0) > 1e-9 || count > 1e6)
    throw InvalidModel("grid step must divide 1");
  std::vector<double> levels;
  const auto n = static_cast<std::size_t>(count);
  for (std::size_t k = 0; k <= n; ++k) levels.push_back(static_cast<double>(k) / count);
  return ParameterGrid(std::move(levels));
}

// ---------------------------------------------------------------- class

namespace {

// Mixed-radix odometer over grid digits, last parameter fastest.
class GridCursor {
 public:
  GridCursor(const ParameterGrid& grid, std::size_t count)
      : levels_(&grid.levels()), digits_(count, 0), params_(count, grid.levels()[0]) {}

  void seek(std::uint64_t index) {
    const std::uint64_t radix = levels_->size();
    for (std::size_t j = digits_.size(); j-- > 0;) {
      digits_[j] = static_cast<std::size_t>(index % radix);
      params_[j] = (*levels_)[digits_[j]];
      index /= radix;
    }
  }

  void advance() {
    for (std::size_t j = digits_.size(); j-- > 0;) {
      if (++digits_[j] < levels_->size()) {
        params_[j] = (*levels_)[digits_[j]];
        return;
      }
      digits_[j] = 0;
      params_[j] = (*levels_)[0];
    }
  }

  std::span<const double> params() const { return params_; }

 private:
  const std::vector<double>* levels_;
  std::vector<std::size_t> digits_;
  std::vector<double> params_;
};

}  // namespace

ModelClass::ModelClass(CausalDiagram diagram, ParameterGrid grid, std::uint64_t cap)
    : diagram_(std::move(diagram)), grid_(std::move(grid)), cap_(cap) {
  if (diagram_.size() > 20) throw InvalidModel("at most 20 variables are supported");
  compiled_ = std::make_unique<detail::CompiledDiagram>(diagram_);
  parameter_count_ = compiled_->parameter_count();
  size_ = 1;
  const std::uint64_t radix = grid_.size();
  for (std::size_t j = 0; j < parameter_count_; ++j) {
    if (radix > 1 && size_ > std::numeric_limits<std::uint64_t>::max() / radix) {
      size_ = std::numeric_limits<std::uint64_t>::max();
      break;
    }
    size_ *= radix;
  }
}

ModelClass::~ModelClass() = default;

std::uint64_t ModelClass::checked_size() const {
  if (size_ > cap_) {
    std::ostringstream msg;
    msg << "enumeration of " << grid_.size() << "^" << parameter_count_
        << " models exceeds the cap of " << cap_ << "; use a coarser grid";
    throw SizeOverflow(msg.str());
  }
  return size_;
}

void ModelClass::decode(std::uint64_t index, std::span<double> parameters) const {
  const std::uint64_t radix = grid_.size();
  for (std::size_t j = parameter_count_; j-- > 0;) {
    parameters[j] = grid_.levels()[index % radix];
    index /= radix;
  }
}

StructuralModel ModelClass::model_at(std::uint64_t index) const {
  std::vector<double> params(parameter_count_);
  decode(index, params);
  return StructuralModel::from_parameters(diagram_, params);
}

std::optional<std::uint64_t> ModelClass::index_of(const StructuralModel& model) const {
  if (!(model.diagram() == diagram_)) return std::nullopt;
  std::uint64_t index = 0;
  for (double p : model.parameters()) {
    const auto& lv = grid_.levels();
    auto it = std::find_if(lv.begin(), lv.end(), [p](double l) { return std::abs(l - p) < 1e-12; });
    if (it == lv.end()) return std::nullopt;
    index = index * lv.size() + static_cast<std::uint64_t>(it - lv.begin());
  }
  return index;
}

// ---------------------------------------------------------------- sets

bool AdmissibleSet::contains(std::uint64_t index) const {
  return std::binary_search(members.begin(), members.end(), index);
}

bool AdmissibleSet::subset_of(const AdmissibleSet& other) const {
  return std::includes(other.members.begin(), other.members.end(), members.begin(),
                       members.end());
}

void enumerate_models(const ModelClass& model_class,
                      const std::function<void(std::uint64_t, const StructuralModel&)>& visit) {
  const std::uint64_t n = model_class.checked_size();
  GridCursor cursor(model_class.grid(), model_class.parameter_count());
  for (std::uint64_t i = 0; i < n; ++i, cursor.advance())
    visit(i, StructuralModel::from_parameters(model_class.diagram(), cursor.params()));
}

namespace {

void check_constraint(const ModelClass& mc, const Constraint& c) {
  if (!(c.epsilon >= 0.0)) throw InvalidModel("constraint epsilon must be non-negative");
  if (c.reference.scope() != mc.diagram().observed_names())
    throw ScopeMismatch("constraint reference must span the observed variables");
  for (const auto& op : c.prefix) validate(op, mc.diagram());
}

// Per-thread evaluator of a fixed constraint list.
class ConstraintEvaluator {
 public:
  ConstraintEvaluator(const ModelClass& mc, std::span<const Constraint> constraints)
      : cd_(&mc.compiled()),
        constraints_(constraints),
        world_(cd_->cells()),
        work_(cd_->cells()),
        scratch_(cd_->cells()),
        law_(cd_->observed_cells()) {
    for (const auto& c : constraints) ops_.push_back(cd_->compile(c.prefix));
  }

  bool satisfied(std::span<const double> params) {
    cd_->joint(params, world_);
    bool base_ready = false;
    for (std::size_t k = 0; k < constraints_.size(); ++k) {
      const auto& c = constraints_[k];
      if (ops_[k].empty()) {
        if (!base_ready) {
          cd_->observed_marginal(world_, law_);
          base_ready = true;
        }
        if (!(detail::total_variation(law_, c.reference.probs()) <= c.epsilon + kMatchSlack))
          return false;
        continue;
      }
      std::copy(world_.begin(), world_.end(), work_.begin());
      for (const auto& op : ops_[k])
        if (!cd_->apply(params, op, work_, scratch_)) return false;
      base_ready = false;
      cd_->observed_marginal(work_, law_);
      if (!(detail::total_variation(law_, c.reference.probs()) <= c.epsilon + kMatchSlack))
        return false;
    }
    return true;
  }

 private:
  const detail::CompiledDiagram* cd_;
  std::span<const Constraint> constraints_;
  std::vector<std::vector<detail::CompiledOp>> ops_;
  std::vector<double> world_, work_, scratch_, law_;
};

std::vector<std::uint64_t> concat(std::vector<std::vector<std::uint64_t>> parts) {
  std::vector<std::uint64_t> out;
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  out.reserve(total);
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

AdmissibleSet admissible(ModelClassPtr model_class, std::vector<Constraint> constraints,
                         Parallelism parallelism) {
  const ModelClass& mc = *model_class;
  for (const auto& c : constraints) check_constraint(mc, c);
  const std::uint64_t n = mc.checked_size();
  auto parts = detail::run_blocks<std::vector<std::uint64_t>>(
      n, parallelism.resolved(), [&](std::uint64_t begin, std::uint64_t end) {
        std::vector<std::uint64_t> hits;
        ConstraintEvaluator eval(mc, constraints);
        GridCursor cursor(mc.grid(), mc.parameter_count());
        cursor.seek(begin);
        for (std::uint64_t i = begin; i < end; ++i, cursor.advance())
          if (eval.satisfied(cursor.params())) hits.push_back(i);
        return hits;
      });
  return AdmissibleSet{std::move(model_class), concat(std::move(parts)), std::move(constraints)};
}

AdmissibleSet refine(const AdmissibleSet& set, Constraint extra, Parallelism parallelism) {
  const ModelClass& mc = *set.model_class;
  check_constraint(mc, extra);
  const std::vector<Constraint> single{extra};
  auto parts = detail::run_blocks<std::vector<std::uint64_t>>(
      set.members.size(), parallelism.resolved(), [&](std::uint64_t begin, std::uint64_t end) {
        std::vector<std::uint64_t> hits;
        ConstraintEvaluator eval(mc, single);
        std::vector<double> params(mc.parameter_count());
        for (std::uint64_t k = begin; k < end; ++k) {
          mc.decode(set.members[k], params);
          if (eval.satisfied(params)) hits.push_back(set.members[k]);
        }
        return hits;
      });
  AdmissibleSet out{set.model_class, concat(std::move(parts)), set.constraints};
  out.constraints.push_back(std::move(extra));
  return out;
}

JointTable transformed_law(const StructuralModel& model, std::span<const Operation> prefix) {
  JointTable world = joint(model);
  for (const auto& op : prefix) {
    if (!changes_world(op)) continue;
    if (const auto* i = std::get_if<Intervene>(&op))
      world = intervene_world(world, model, i->variable, i->probability);
    else
      world = condition_table(world, event_of(op));
  }
  const auto observed = model.diagram().observed_names();
  return marginal(world, observed);
}

AdmissibleSet naive_admissible(ModelClassPtr model_class, std::vector<Constraint> constraints) {
  const ModelClass& mc = *model_class;
  for (const auto& c : constraints) check_constraint(mc, c);
  const std::uint64_t n = mc.checked_size();
  std::vector<std::uint64_t> members;
  for (std::uint64_t i = 0; i < n; ++i) {
    const StructuralModel m = mc.model_at(i);
    bool ok = true;
    for (const auto& c : constraints) {
      try {
        if (!(total_variation(transformed_law(m, c.prefix), c.reference) <=
              c.epsilon + kMatchSlack)) {
          ok = false;
          break;
        }
      } catch (const ZeroSupport&) {
        ok = false;
        break;
      }
    }
    if (ok) members.push_back(i);
  }
  return AdmissibleSet{std::move(model_class), std::move(members), std::move(constraints)};
}

Fingerprint fingerprint(std::span<const double> observed_law, double quantum) {
  Fingerprint f(observed_law.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    f[i] = static_cast<std::int64_t>(std::llround(observed_law[i] / quantum));
  return f;
}

std::map<Fingerprint, std::vector<std::uint64_t>> fingerprint_partition(
    const ModelClass& mc, double quantum, Parallelism parallelism) {
  if (!(quantum > 0.0)) throw InvalidModel("fingerprint quantum must be positive");
  using Cells = std::map<Fingerprint, std::vector<std::uint64_t>>;
  const std::uint64_t n = mc.checked_size();
  const auto& cd = mc.compiled();
  auto parts = detail::run_blocks<Cells>(
      n, parallelism.resolved(), [&](std::uint64_t begin, std::uint64_t end) {
        Cells cells;
        std::vector<double> world(cd.cells()), law(cd.observed_cells());
        GridCursor cursor(mc.grid(), mc.parameter_count());
        cursor.seek(begin);
        for (std::uint64_t i = begin; i < end; ++i, cursor.advance()) {
          cd.joint(cursor.params(), world);
          cd.observed_marginal(world, law);
          cells[fingerprint(law, quantum)].push_back(i);
        }
        return cells;
      });
  Cells merged;
  for (auto& part : parts) {
    for (auto& [key, indices] : part) {
      auto& dst = merged[key];
      dst.insert(dst.end(), indices.begin(), indices.end());
    }
  }
  return merged;
}

}  // namespace evs
