#pragma once

// Line-oriented scenario files.
//
//   scenario <name>
//   var <name> (obs|hidden) [treatment|outcome|covariate]
//   edge <parent> <child>
//   grid <p1> <p2> ...
//   truth <var> [<parent bits>] = <prob>
//   settings epsilon=<p> eps_id=<p> bins=<n> quantum=<p> cap=<n>
//   pipeline <label>: <step> ; <step> ; ...
//
// with steps `restrict V=b`, `stratify V=b`, `adjust V`, `intervene V p=<prob>`.
// Parent bits list the parents in declaration order, first parent leftmost.
// Probabilities are decimals or fractions such as 1/3. '#' starts a comment.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "evs/enumerate.hpp"
#include "evs/errors.hpp"
#include "evs/metrics.hpp"
#include "evs/model.hpp"
#include "evs/operation.hpp"

namespace evs {

struct Settings {
  double epsilon = 0.02;
  double eps_id = kDefaultEpsId;
  std::size_t bins = kDefaultBins;
  double quantum = 1e-6;
  std::uint64_t cap = kDefaultEnumerationCap;
  friend bool operator==(const Settings&, const Settings&) = default;
};

struct Scenario {
  std::string name;
  CausalDiagram diagram;
  ParameterGrid grid;
  StructuralModel ground_truth;
  std::vector<Pipeline> pipelines;
  Settings settings;

  const Pipeline* find_pipeline(std::string_view label) const;
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// Syntax error at a 1-based position.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, std::string message, std::string token);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& message() const { return message_; }
  const std::string& token() const { return token_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string message_;
  std::string token_;
};

// Well-formed text describing an invalid scenario.
class ValidationError : public Error {
 public:
  ValidationError(std::size_t line, std::string message);
  std::size_t line() const { return line_; }  // 0 when not tied to a line
  const std::string& message() const { return message_; }

 private:
  std::size_t line_;
  std::string message_;
};

Scenario parse_scenario(std::string_view text);
std::string render_scenario(const Scenario& scenario);

// Names accepted by builtin_scenario: fig1, s2, trial, independent.
const std::vector<std::string>& builtin_names();
// Throws std::out_of_range for an unknown name.
std::string_view builtin_scenario(std::string_view name);

}  // namespace evs
