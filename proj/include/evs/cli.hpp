#pragma once

// Report assembly and the command-line front end.
//
// Exit codes: 0 success, 2 usage / parse / validation errors (including a
// missing file or an unknown pipeline label or builtin name), 3 engine errors
// (SizeOverflow, EmptyAdmissible, ZeroSupport and similar).

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evs/enumerate.hpp"
#include "evs/scenario.hpp"

namespace evs {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitEngine = 3;

// Command-line values that take precedence over the scenario file.
struct Overrides {
  std::optional<double> grid_step;
  std::optional<double> epsilon;
  std::optional<double> eps_id;
  std::optional<std::size_t> bins;
  std::optional<double> quantum;
  std::optional<std::uint64_t> cap;
};

// Throws ValidationError for out-of-range values.
Scenario apply_overrides(Scenario scenario, const Overrides& overrides);

struct ReportOptions {
  Parallelism parallelism;
  bool timings = false;  // wall times vary, so they are opt-in
};

// Every pipeline, every metric, commutation reports for every pipeline pair.
nlohmann::json run_report(const Scenario& scenario, const ReportOptions& options = {});
// Throws ValidationError for an unknown label.
nlohmann::json compare_report(const Scenario& scenario, const std::string& label_a,
                              const std::string& label_b, const ReportOptions& options = {});
nlohmann::json audit_report(const Scenario& scenario, const ReportOptions& options = {});

// scenario,pipeline,metric,value rows; empty pipeline for scenario-wide rows.
std::string render_csv(const nlohmann::json& report);
std::string render_text(const nlohmann::json& report);

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            std::istream& in);

}  // namespace evs
