#include "evs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "compiled.hpp"
#include "parallel.hpp"

namespace evs {

// ---------------------------------------------------------------- histogram

TauHistogram::TauHistogram(std::size_t bins) : counts_(bins, 0) {
  if (bins == 0) throw InvalidModel("histogram needs at least one bin");
}

std::size_t TauHistogram::bin_of(double tau, std::size_t bins) {
  const double pos = (tau + 1.0) / 2.0 * static_cast<double>(bins);
  if (!(pos > 0.0)) return 0;
  const auto b = static_cast<std::size_t>(std::floor(pos));
  return std::min(b, bins - 1);
}

void TauHistogram::add(double tau) {
  ++counts_[bin_of(tau, counts_.size())];
  ++count_;
  min_ = std::min(min_, tau);
  max_ = std::max(max_, tau);
}

void TauHistogram::merge(const TauHistogram& other) {
  if (other.bins() != bins()) throw InvalidModel("cannot merge histograms with different bins");
  for (std::size_t b = 0; b < counts_.size(); ++b) counts_[b] += other.counts_[b];
  count_ += other.count_;
  min_ = std::min(min_, other.min_);
  max_ = std::max(max_, other.max_);
}

TauSet summarize(const TauHistogram& h) {
  if (h.count() == 0) throw EmptyAdmissible("no admissible models: epsilon too tight or constraints contradictory");
  return TauSet{h.min(), h.max(), h.max() - h.min(), h.counts(), h.count()};
}

double entropy_bits(std::span<const std::uint64_t> histogram) {
  std::uint64_t total = 0;
  for (auto c : histogram) total += c;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (auto c : histogram) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return std::max(0.0, h);
}

TauHistogram tau_histogram(const ModelClass& mc, std::span<const std::uint64_t> members,
                           std::size_t bins, Parallelism parallelism) {
  if (members.empty())
    throw EmptyAdmissible("no admissible models: epsilon too tight or constraints contradictory");
  auto parts = detail::run_blocks<TauHistogram>(
      members.size(), parallelism.resolved(), [&](std::uint64_t begin, std::uint64_t end) {
        TauHistogram h(bins);
        std::vector<double> params(mc.parameter_count());
        for (std::uint64_t k = begin; k < end; ++k) {
          mc.decode(members[k], params);
          h.add(mc.compiled().tau(params));
        }
        return h;
      });
  TauHistogram total(bins);
  for (const auto& p : parts) total.merge(p);
  return total;
}

TauSet tau_set(const EvidentialState& state, std::size_t bins) {
  return summarize(
      tau_histogram(state.model_class(), state.admissible().members, bins, state.parallelism()));
}

TauSet evidence_tau_set(const EvidentialState& state, std::size_t bins) {
  const auto& constraints = state.admissible().constraints;
  const auto set = admissible(state.admissible().model_class, {constraints.back()},
                              state.parallelism());
  return summarize(tau_histogram(state.model_class(), set.members, bins, state.parallelism()));
}

bool identifiable(const EvidentialState& state, double eps_id, std::size_t bins) {
  const TauSet ts = tau_set(state, bins);
  if (!(ts.width <= eps_id)) return false;
  return std::all_of(state.adjustments().begin(), state.adjustments().end(),
                     [](const AdjustmentRecord& r) { return r.valid(); });
}

EntropyReport delta_cause(const EvidentialState& state, std::size_t bins) {
  EntropyReport r;
  r.bins = bins;
  r.h_state = entropy_bits(tau_set(state, bins).histogram);
  r.h_prior = state.is_origin() ? r.h_state : entropy_bits(tau_set(state.origin(), bins).histogram);
  r.delta_cause = r.h_prior - r.h_state;
  return r;
}

// ---------------------------------------------------------------- breadth

BreadthReport kl_divergence(const JointTable& p, const JointTable& q) {
  if (p.scope() != q.scope())
    throw ScopeMismatch("KL divergence needs tables over the same observed variables");
  bool equal = true;
  for (std::size_t c = 0; c < p.cells(); ++c)
    if (std::abs(p[c] - q[c]) > 1e-12) equal = false;
  if (equal) return {0.0, true};
  double kl = 0.0;
  for (std::size_t c = 0; c < p.cells(); ++c) {
    if (p[c] <= 0.0) continue;
    if (q[c] <= 0.0) return {std::numeric_limits<double>::infinity(), false};
    kl += p[c] * std::log2(p[c] / q[c]);
  }
  return {std::max(0.0, kl), true};
}

BreadthReport delta_breadth(const EvidentialState& state) {
  return kl_divergence(state.observed(), state.origin().observed());
}

// ---------------------------------------------------------------- residual k

namespace {

struct Cell {
  std::uint64_t first = 0;
  std::vector<double> law;
  std::vector<std::uint32_t> bins;  // dense per-bin counts
};

using CellMap = std::map<Fingerprint, Cell>;

CellMap partition_with_tau(const ModelClass& mc, double quantum, std::size_t bins,
                           Parallelism parallelism) {
  const std::uint64_t n = mc.checked_size();
  const auto& cd = mc.compiled();
  auto parts = detail::run_blocks<CellMap>(
      n, parallelism.resolved(), [&](std::uint64_t begin, std::uint64_t end) {
        CellMap cells;
        std::vector<double> params(mc.parameter_count()), world(cd.cells()),
            law(cd.observed_cells());
        for (std::uint64_t i = begin; i < end; ++i) {
          mc.decode(i, params);
          cd.joint(params, world);
          cd.observed_marginal(world, law);
          auto [it, fresh] = cells.try_emplace(fingerprint(law, quantum));
          if (fresh) {
            it->second.first = i;
            it->second.law = law;
            it->second.bins.assign(bins, 0);
          }
          ++it->second.bins[TauHistogram::bin_of(cd.tau(params), bins)];
        }
        return cells;
      });
  CellMap merged;
  for (auto& part : parts) {
    for (auto& [key, cell] : part) {
      auto [it, fresh] = merged.try_emplace(key, std::move(cell));
      if (fresh) continue;
      // Blocks arrive in index order, so the existing entry has the smaller
      // first index and keeps its representative law.
      for (std::size_t b = 0; b < bins; ++b) it->second.bins[b] += cell.bins[b];
    }
  }
  return merged;
}

class NeighborSearch {
 public:
  NeighborSearch(const CellMap& cells, double epsilon) : epsilon_(epsilon) {
    for (const auto& [key, cell] : cells) sorted_.push_back(&cell);
    if (sorted_.empty()) return;
    // Window on the most spread-out coordinate: every neighbor lies within
    // 2 epsilon of the query on each coordinate.
    const std::size_t dims = sorted_.front()->law.size();
    double best = -1.0;
    for (std::size_t d = 0; d < dims; ++d) {
      double sum = 0.0, sq = 0.0;
      for (const Cell* c : sorted_) {
        sum += c->law[d];
        sq += c->law[d] * c->law[d];
      }
      const double n = static_cast<double>(sorted_.size());
      const double var = sq / n - (sum / n) * (sum / n);
      if (var > best) {
        best = var;
        axis_ = d;
      }
    }
    std::stable_sort(sorted_.begin(), sorted_.end(),
                     [&](const Cell* a, const Cell* b) { return a->law[axis_] < b->law[axis_]; });
  }

  // Entropy of tau over every cell within epsilon TV of `law`.
  double entropy_around(std::span<const double> law, std::size_t bins) const {
    const double limit = 2.0 * (epsilon_ + kMatchSlack);  // on the L1 distance
    const double x = law[axis_];
    auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), x - limit,
                               [&](const Cell* c, double v) { return c->law[axis_] < v; });
    std::vector<std::uint64_t> acc(bins, 0);
    for (auto it = lo; it != sorted_.end() && (*it)->law[axis_] <= x + limit; ++it) {
      if (!within(**it, law)) continue;
      for (std::size_t b = 0; b < bins; ++b) acc[b] += (*it)->bins[b];
    }
    return entropy_bits(acc);
  }

 private:
  bool within(const Cell& c, std::span<const double> law) const {
    const double limit = 2.0 * (epsilon_ + kMatchSlack);
    double l1 = 0.0;
    for (std::size_t d = 0; d < law.size(); ++d) {
      l1 += std::abs(c.law[d] - law[d]);
      if (l1 > limit) return false;
    }
    return 0.5 * l1 <= epsilon_ + kMatchSlack;
  }

  double epsilon_;
  std::size_t axis_ = 0;
  std::vector<const Cell*> sorted_;
};

}  // namespace

ResidualK residual_k(const ModelClass& mc, std::span<const std::uint64_t> population,
                     double quantum, std::size_t bins, double epsilon, Parallelism parallelism) {
  if (!(quantum > 0.0)) throw InvalidModel("fingerprint quantum must be positive");
  if (!(epsilon >= 0.0)) throw InvalidModel("epsilon must be non-negative");
  if (bins == 0) throw InvalidModel("histogram needs at least one bin");
  const CellMap cells = partition_with_tau(mc, quantum, bins, parallelism);
  const NeighborSearch search(cells, epsilon);

  ResidualK r;
  r.cells = cells.size();
  r.quantum = quantum;
  r.bins = bins;
  r.epsilon = epsilon;

  std::map<Fingerprint, const Cell*> chosen;
  {
    const auto& cd = mc.compiled();
    std::vector<double> params(mc.parameter_count()), world(cd.cells()), law(cd.observed_cells());
    for (std::uint64_t i : population) {
      mc.decode(i, params);
      cd.joint(params, world);
      cd.observed_marginal(world, law);
      auto key = fingerprint(law, quantum);
      chosen.emplace(key, &cells.at(key));
    }
  }
  r.population_cells = chosen.size();
  r.k = std::numeric_limits<double>::infinity();
  for (const auto& [key, cell] : chosen) r.k = std::min(r.k, search.entropy_around(cell->law, bins));

  // The population is part of the class, so k bounds k_class from above.
  // Cells whose own tau is concentrated tend to have calm neighborhoods;
  // visiting them first usually reaches zero early.
  r.k_class = r.k;
  if (r.k_class > 0.0) {
    std::vector<std::pair<double, const Cell*>> order;
    order.reserve(cells.size());
    for (const auto& [key, cell] : cells) order.emplace_back(entropy_bits(std::vector<std::uint64_t>(cell.bins.begin(), cell.bins.end())), &cell);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [own, cell] : order) {
      r.k_class = std::min(r.k_class, search.entropy_around(cell->law, bins));
      if (r.k_class == 0.0) break;  // entropy is never negative
    }
  }
  if (chosen.empty()) r.k = r.k_class;
  return r;
}

ResidualK residual_k(const ModelClass& mc, double quantum, std::size_t bins, double epsilon,
                     Parallelism parallelism) {
  return residual_k(mc, std::span<const std::uint64_t>{}, quantum, bins, epsilon, parallelism);
}

// ---------------------------------------------------------------- audit

ConstraintReport constraint_audit(std::span<const EvidentialState> states, double k,
                                  std::size_t bins, std::string label) {
  if (states.empty()) throw InvalidModel("audit needs at least the initial state");
  ConstraintReport r;
  r.label = std::move(label);
  r.k = k;
  r.bins = bins;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& s = states[i];
    StepAudit a;
    a.index = i;
    if (i > 0) a.step = describe(s.trace().back());
    a.admissible = s.admissible().size();
    a.h_state = entropy_bits(tau_set(s, bins).histogram);
    a.kl = delta_breadth(s);
    if (i > 0) {
      const auto& prev = r.steps.back();
      a.h_nonincreasing = a.h_state <= prev.h_state + 1e-12;
      a.kl_nondecreasing = a.kl.kl_bits >= prev.kl.kl_bits - 1e-12;
      r.monotonicity_violations += (a.h_nonincreasing ? 0 : 1) + (a.kl_nondecreasing ? 0 : 1);
    }
    r.steps.push_back(std::move(a));
  }
  const auto& last = states.back();
  const double h_prior = last.is_origin()
                             ? r.steps.back().h_state
                             : entropy_bits(tau_set(last.origin(), bins).histogram);
  r.delta_cause = h_prior - r.steps.back().h_state;
  r.delta_breadth = r.steps.back().kl;
  if (r.delta_breadth.dominated) {
    r.product = r.delta_cause * r.delta_breadth.kl_bits;
    r.satisfied = *r.product >= k - 1e-9;
  }
  return r;
}

}  // namespace evs
