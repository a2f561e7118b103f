#pragma once

// Seeded generators shared by the property tests and the acceptance gate.

#include <random>
#include <string>
#include <vector>

#include "evs/enumerate.hpp"
#include "evs/operation.hpp"
#include "evs/scenario.hpp"

namespace gen {

inline evs::Operation random_operation(std::mt19937_64& rng, const evs::CausalDiagram& d) {
  const auto observed = d.observed_names();
  std::uniform_int_distribution<std::size_t> pick_var(0, observed.size() - 1);
  std::uniform_int_distribution<int> bit(0, 1);
  const auto& v = observed[pick_var(rng)];
  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0:
      return evs::Restrict{evs::Event{{{v, bit(rng)}}}};
    case 1:
      return evs::Condition{v, evs::Condition::Mode::stratify, bit(rng)};
    case 2:
      return evs::Condition{v, evs::Condition::Mode::adjust, 0};
    default: {
      const double levels[] = {0.25, 0.5, 0.75};
      return evs::Intervene{v, levels[std::uniform_int_distribution<int>(0, 2)(rng)]};
    }
  }
}

// One to three match constraints whose references come from random class
// members, so that most sets are nonempty.
inline std::vector<evs::Constraint> random_constraints(std::mt19937_64& rng, const evs::ModelClass& mc) {
  std::uniform_int_distribution<std::uint64_t> pick(0, mc.size() - 1);
  const double eps_choices[] = {0.0, 0.02, 0.05, 0.1};
  std::vector<evs::Constraint> out;
  const int count = std::uniform_int_distribution<int>(1, 3)(rng);
  std::vector<evs::Operation> prefix;
  for (int i = 0; i < count; ++i) {
    if (i > 0) prefix.push_back(random_operation(rng, mc.diagram()));
    const auto source = mc.model_at(pick(rng));
    evs::JointTable reference;
    try {
      reference = evs::transformed_law(source, prefix);
    } catch (const evs::ZeroSupport&) {
      // a constraint nobody can satisfy is still a valid instance
      const auto names = mc.diagram().observed_names();
      std::vector<double> uniform(std::size_t{1} << names.size(),
                                  1.0 / static_cast<double>(std::size_t{1} << names.size()));
      reference = evs::JointTable(names, uniform);
    }
    out.push_back({evs::Constraint::Kind::match_observed, prefix, reference,
                   eps_choices[std::uniform_int_distribution<int>(0, 3)(rng)]});
  }
  return out;
}

// Small valid scenario: 2-5 variables in a random DAG (edges only from lower
// to higher declaration index), random truth values, one to three pipelines.
inline std::string random_scenario_text(std::mt19937_64& rng, int serial) {
  const int n = std::uniform_int_distribution<int>(2, 5)(rng);
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("V" + std::to_string(i));
  const int t = std::uniform_int_distribution<int>(0, n - 2)(rng);
  const int y = std::uniform_int_distribution<int>(t + 1, n - 1)(rng);
  std::vector<bool> hidden(n, false);
  std::string text = "# generated\nscenario gen" + std::to_string(serial) + "\n";
  for (int i = 0; i < n; ++i) {
    hidden[i] = i != t && i != y && std::bernoulli_distribution(0.3)(rng);
    text += "var " + names[i] + (hidden[i] ? " hidden" : " obs");
    if (i == t) text += " treatment";
    if (i == y) text += " outcome";
    if (i != t && i != y && !hidden[i] && std::bernoulli_distribution(0.3)(rng)) text += " covariate";
    text += "\n";
  }
  std::vector<std::vector<int>> parents(n);
  for (int c = 1; c < n; ++c)
    for (int p = 0; p < c; ++p)
      if (std::bernoulli_distribution(0.5)(rng)) {
        parents[c].push_back(p);
        text += "edge " + names[p] + " " + names[c] + "\n";
      }
  const char* grids[] = {"grid 0 0.5 1", "grid 0 0.25 0.5 0.75 1", "grid 1/3 2/3", "grid 0.1 0.9"};
  text += std::string(grids[std::uniform_int_distribution<int>(0, 3)(rng)]) + "\n";
  const char* probs[] = {"0.5", "1/3", "0.125", "0", "1", "0.7", "2/7"};
  for (int v = 0; v < n; ++v) {
    const std::size_t rows = std::size_t{1} << parents[v].size();
    for (std::size_t r = rows; r-- > 0;) {  // any order is accepted
      text += "truth " + names[v];
      if (!parents[v].empty()) {
        text += " ";
        for (std::size_t b = parents[v].size(); b-- > 0;) text += ((r >> b) & 1U) ? '1' : '0';
      }
      text += " = " + std::string(probs[std::uniform_int_distribution<int>(0, 6)(rng)]) + "\n";
    }
  }
  if (std::bernoulli_distribution(0.5)(rng)) text += "settings epsilon=0.05 bins=21\n";
  std::vector<std::string> observed;
  for (int i = 0; i < n; ++i)
    if (!hidden[i]) observed.push_back(names[i]);
  const int pipelines = std::uniform_int_distribution<int>(1, 3)(rng);
  for (int p = 0; p < pipelines; ++p) {
    text += "pipeline P" + std::to_string(p) + ":";
    const int steps = std::uniform_int_distribution<int>(0, 3)(rng);
    for (int s = 0; s < steps; ++s) {
      const auto& v = observed[std::uniform_int_distribution<std::size_t>(0, observed.size() - 1)(rng)];
      text += s ? " ; " : " ";
      switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
        case 0: text += "restrict " + v + "=1"; break;
        case 1: text += "stratify " + v + "=0"; break;
        case 2:
          text += (v == names[t] || v == names[y]) ? "restrict " + v + "=0" : "adjust " + v;
          break;
        default: text += "intervene " + v + " p=1/4"; break;
      }
    }
    text += "\n";
  }
  return text;
}

}  // namespace gen
