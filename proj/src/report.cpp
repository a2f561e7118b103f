#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "evs/cli.hpp"
#include "evs/compare.hpp"
#include "evs/format.hpp"
#include "evs/metrics.hpp"
#include "evs/operators.hpp"

namespace evs {

using nlohmann::json;

Scenario apply_overrides(Scenario s, const Overrides& o) {
  try {
    if (o.grid_step) s.grid = ParameterGrid::with_step(*o.grid_step);
  } catch (const Error& e) {
    throw ValidationError(0, std::string("--grid-step: ") + e.what());
  }
  if (o.epsilon) {
    if (!(*o.epsilon >= 0.0)) throw ValidationError(0, "--epsilon must be non-negative");
    s.settings.epsilon = *o.epsilon;
  }
  if (o.eps_id) {
    if (!(*o.eps_id >= 0.0)) throw ValidationError(0, "--eps-id must be non-negative");
    s.settings.eps_id = *o.eps_id;
  }
  if (o.bins) {
    if (*o.bins == 0 || *o.bins > 10'000) throw ValidationError(0, "--bins must lie in [1, 10000]");
    s.settings.bins = *o.bins;
  }
  if (o.quantum) {
    if (!(*o.quantum > 0.0)) throw ValidationError(0, "--quantum must be positive");
    s.settings.quantum = *o.quantum;
  }
  if (o.cap) {
    if (*o.cap == 0) throw ValidationError(0, "--cap must be positive");
    s.settings.cap = *o.cap;
  }
  return s;
}

namespace {

// ---------------------------------------------------------------- json pieces

class PhaseTimer {
 public:
  explicit PhaseTimer(bool enabled) : enabled_(enabled) {}
  template <class F>
  auto time(const std::string& phase, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    auto result = f();
    if (enabled_) {
      const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - start;
      phases_[phase] = phases_.value(phase, 0.0) + ms.count();
    }
    return result;
  }
  void attach(json& report) const {
    if (enabled_) report["timings_ms"] = phases_;
  }

 private:
  bool enabled_;
  json phases_ = json::object();
};

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json settings_json(const Scenario& s) {
  return {{"epsilon", s.settings.epsilon}, {"eps_id", s.settings.eps_id},
          {"bins", s.settings.bins},       {"quantum", s.settings.quantum},
          {"cap", s.settings.cap},         {"grid", s.grid.levels()}};
}

json tau_set_json(const TauSet& t) {
  return {{"min", t.min},     {"max", t.max},
          {"width", t.width}, {"count", t.count},
          {"histogram", t.histogram}};
}

json breadth_json(const BreadthReport& b) {
  return {{"kl_bits", number_or_null(b.kl_bits)}, {"dominated", b.dominated}};
}

json entropy_json(const EntropyReport& e) {
  return {{"h_prior", e.h_prior}, {"h_state", e.h_state}, {"delta_cause", e.delta_cause}};
}

json adjustment_json(const AdjustmentRecord& r) {
  json stratum = json::array();
  for (const auto& [name, value] : r.violating_stratum) stratum.push_back({{"variable", name}, {"value", value}});
  json j{{"step", r.step + 1}, {"variables", r.variables}, {"valid", r.valid()}};
  j["estimate"] = r.estimate ? json(*r.estimate) : json(nullptr);
  if (r.violation) {
    j["violation"] = {{"message", *r.violation},
                      {"treatment_value", r.violating_treatment},
                      {"stratum", stratum}};
  } else {
    j["violation"] = nullptr;
  }
  return j;
}

json residual_json(const ResidualK& k) {
  return {{"k", k.k},
          {"k_class", k.k_class},
          {"cells", k.cells},
          {"population_cells", k.population_cells},
          {"quantum", k.quantum},
          {"bins", k.bins},
          {"epsilon", k.epsilon}};
}

json audit_json(const ConstraintReport& r) {
  json steps = json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"index", s.index},
                     {"step", s.step},
                     {"admissible", s.admissible},
                     {"h_state", s.h_state},
                     {"kl_bits", number_or_null(s.kl.kl_bits)},
                     {"dominated", s.kl.dominated},
                     {"h_nonincreasing", s.h_nonincreasing},
                     {"kl_nondecreasing", s.kl_nondecreasing}});
  }
  return {{"delta_cause", r.delta_cause},
          {"delta_breadth", breadth_json(r.delta_breadth)},
          {"product", r.product ? json(*r.product) : json(nullptr)},
          {"k", r.k},
          {"satisfied", r.satisfied ? json(*r.satisfied) : json(nullptr)},
          {"monotonicity_violations", r.monotonicity_violations},
          {"steps", steps}};
}

json commutation_json(const CommutationReport& r) {
  const auto opt_tau = [](const std::optional<TauSet>& t) { return t ? tau_set_json(*t) : json(nullptr); };
  const auto opt_bool = [](const std::optional<bool>& b) { return b ? json(*b) : json(nullptr); };
  return {{"a", r.label_a},
          {"b", r.label_b},
          {"verdict", to_string(r.verdict)},
          {"scopes_match", r.scopes_match},
          {"table_tv", r.table_tv ? json(*r.table_tv) : json(nullptr)},
          {"set_jaccard", r.set_jaccard},
          {"members_equal", r.members_equal},
          {"admissible_a", r.state_a.admissible().size()},
          {"admissible_b", r.state_b.admissible().size()},
          {"tau_set_a", opt_tau(r.tau_set_a)},
          {"tau_set_b", opt_tau(r.tau_set_b)},
          {"identifiable_a", opt_bool(r.identifiable_a)},
          {"identifiable_b", opt_bool(r.identifiable_b)},
          {"identification_differs", r.identification_differs}};
}

json steps_json(const Pipeline& p) {
  json steps = json::array();
  for (const auto& op : p.steps) steps.push_back(describe(op));
  return steps;
}

// ---------------------------------------------------------------- engine

struct Engine {
  Scenario scenario;
  ModelClassPtr model_class;
  EvidentialState initial;
};

Engine start(const Scenario& s, const ReportOptions& options, PhaseTimer& timer) {
  auto mc = std::make_shared<const ModelClass>(s.diagram, s.grid, s.settings.cap);
  mc->checked_size();
  auto initial = timer.time("initial", [&] {
    return initial_state(mc, s.ground_truth, s.settings.epsilon, options.parallelism);
  });
  if (initial.admissible().empty())
    throw EmptyAdmissible("no grid model matches the ground truth's observed law within epsilon " +
                          format_number(s.settings.epsilon) +
                          "; widen epsilon or refine the grid");
  return Engine{s, std::move(mc), std::move(initial)};
}

json base_report(const std::string& kind, const Engine& e) {
  const auto t = tau_set(e.initial, e.scenario.settings.bins);
  return {{"report", kind},
          {"scenario", e.scenario.name},
          {"scenario_text", render_scenario(e.scenario)},
          {"settings", settings_json(e.scenario)},
          {"model_class",
           {{"parameters", e.model_class->parameter_count()}, {"size", e.model_class->size()}}},
          {"initial",
           {{"admissible", e.initial.admissible().size()},
            {"tau_set", tau_set_json(t)},
            {"h_state", entropy_bits(t.histogram)}}}};
}

ResidualK compute_k(const Engine& e, const ReportOptions& options) {
  const auto& st = e.scenario.settings;
  return residual_k(*e.model_class, e.initial.admissible().members, st.quantum, st.bins,
                    st.epsilon, options.parallelism);
}

const Pipeline& pipeline_or_throw(const Scenario& s, const std::string& label) {
  if (const auto* p = s.find_pipeline(label)) return *p;
  throw ValidationError(0, "unknown pipeline label '" + label + "'");
}

}  // namespace

json run_report(const Scenario& scenario, const ReportOptions& options) {
  PhaseTimer timer(options.timings);
  const Engine e = start(scenario, options, timer);
  const auto& st = scenario.settings;
  json report = base_report("run", e);

  const auto k = timer.time("residual_k", [&] { return compute_k(e, options); });
  report["residual_k"] = residual_json(k);

  std::vector<EvidentialState> finals;
  json pipelines = json::array();
  for (const auto& p : scenario.pipelines) {
    json pj = timer.time("pipelines", [&] {
      const auto states = run_pipeline(e.initial, p);
      const auto& last = states.back();
      finals.push_back(last);
      std::vector<json> adjustments;
      for (const auto& r : last.adjustments()) adjustments.push_back(adjustment_json(r));
      return json{{"label", p.label},
                  {"steps", steps_json(p)},
                  {"admissible", last.admissible().size()},
                  {"constraints", last.admissible().constraints.size()},
                  {"tau_set", tau_set_json(tau_set(last, st.bins))},
                  {"evidence_tau_set", tau_set_json(evidence_tau_set(last, st.bins))},
                  {"entropy", entropy_json(delta_cause(last, st.bins))},
                  {"breadth", breadth_json(delta_breadth(last))},
                  {"identifiable", identifiable(last, st.eps_id, st.bins)},
                  {"adjustments", adjustments},
                  {"audit", audit_json(constraint_audit(states, k.k, st.bins, p.label))}};
    });
    pipelines.push_back(std::move(pj));
  }
  report["pipelines"] = pipelines;

  const CommutationTolerances tol{1e-9, st.eps_id, st.bins};
  json commutations = json::array();
  for (std::size_t i = 0; i < finals.size(); ++i)
    for (std::size_t j = i + 1; j < finals.size(); ++j)
      commutations.push_back(timer.time("compare", [&] {
        return commutation_json(compare_states(scenario.pipelines[i].label, finals[i],
                                               scenario.pipelines[j].label, finals[j], tol));
      }));
  report["commutations"] = commutations;
  timer.attach(report);
  return report;
}

json compare_report(const Scenario& scenario, const std::string& label_a,
                    const std::string& label_b, const ReportOptions& options) {
  const auto& a = pipeline_or_throw(scenario, label_a);
  const auto& b = pipeline_or_throw(scenario, label_b);
  PhaseTimer timer(options.timings);
  const Engine e = start(scenario, options, timer);
  json report = base_report("compare", e);
  const CommutationTolerances tol{1e-9, scenario.settings.eps_id, scenario.settings.bins};
  report["steps_a"] = steps_json(a);
  report["steps_b"] = steps_json(b);
  report["commutation"] =
      timer.time("compare", [&] { return commutation_json(compare_orders(e.initial, a, b, tol)); });
  timer.attach(report);
  return report;
}

json audit_report(const Scenario& scenario, const ReportOptions& options) {
  PhaseTimer timer(options.timings);
  const Engine e = start(scenario, options, timer);
  json report = base_report("audit", e);
  const auto k = timer.time("residual_k", [&] { return compute_k(e, options); });
  report["residual_k"] = residual_json(k);
  json audits = json::array();
  for (const auto& p : scenario.pipelines) {
    audits.push_back(timer.time("pipelines", [&] {
      const auto states = run_pipeline(e.initial, p);
      json j = audit_json(constraint_audit(states, k.k, scenario.settings.bins, p.label));
      j["label"] = p.label;
      j["steps_text"] = steps_json(p);
      return j;
    }));
  }
  report["audits"] = audits;
  timer.attach(report);
  return report;
}

// ---------------------------------------------------------------- rendering

namespace {

std::string scalar_text(const json& v) {
  if (v.is_null()) return "none";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return format_number(v.get<double>());
  return v.dump();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvWriter {
 public:
  explicit CsvWriter(std::string scenario) : scenario_(std::move(scenario)) {
    out_ << "scenario,pipeline,metric,value\n";
  }
  void row(const std::string& pipeline, const std::string& metric, const json& value) {
    out_ << csv_field(scenario_) << ',' << csv_field(pipeline) << ',' << csv_field(metric) << ','
         << csv_field(scalar_text(value)) << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  std::string scenario_;
  std::ostringstream out_;
};

void audit_rows(CsvWriter& w, const std::string& label, const json& a) {
  w.row(label, "audit.delta_cause", a["delta_cause"]);
  w.row(label, "audit.delta_breadth", a["delta_breadth"]["kl_bits"]);
  w.row(label, "audit.product", a["product"]);
  w.row(label, "audit.k", a["k"]);
  w.row(label, "audit.satisfied", a["satisfied"]);
  w.row(label, "audit.monotonicity_violations", a["monotonicity_violations"]);
}

void commutation_rows(CsvWriter& w, const json& c) {
  const std::string pair = c["a"].get<std::string>() + "|" + c["b"].get<std::string>();
  for (const char* key : {"verdict", "table_tv", "set_jaccard", "members_equal", "identifiable_a",
                          "identifiable_b", "identification_differs"})
    w.row(pair, std::string("compare.") + key, c[key]);
}

}  // namespace

std::string render_csv(const json& r) {
  CsvWriter w(r["scenario"].get<std::string>());
  w.row("", "admissible.initial", r["initial"]["admissible"]);
  if (r.contains("residual_k")) {
    w.row("", "k", r["residual_k"]["k"]);
    w.row("", "k_class", r["residual_k"]["k_class"]);
  }
  if (r.contains("pipelines")) {
    for (const auto& p : r["pipelines"]) {
      const auto label = p["label"].get<std::string>();
      w.row(label, "admissible", p["admissible"]);
      for (const char* key : {"min", "max", "width"})
        w.row(label, std::string("tau.") + key, p["tau_set"][key]);
      w.row(label, "h_prior", p["entropy"]["h_prior"]);
      w.row(label, "h_state", p["entropy"]["h_state"]);
      w.row(label, "delta_cause", p["entropy"]["delta_cause"]);
      w.row(label, "delta_breadth", p["breadth"]["kl_bits"]);
      w.row(label, "identifiable", p["identifiable"]);
      for (const auto& adj : p["adjustments"])
        w.row(label, "adjustment.step" + adj["step"].dump(), adj["estimate"]);
      audit_rows(w, label, p["audit"]);
    }
  }
  if (r.contains("audits"))
    for (const auto& a : r["audits"]) audit_rows(w, a["label"].get<std::string>(), a);
  if (r.contains("commutations"))
    for (const auto& c : r["commutations"]) commutation_rows(w, c);
  if (r.contains("commutation")) commutation_rows(w, r["commutation"]);
  return w.str();
}

namespace {

void audit_text(std::ostringstream& o, const json& a) {
  o << "  audit: delta_cause=" << scalar_text(a["delta_cause"])
    << " delta_breadth=" << scalar_text(a["delta_breadth"]["kl_bits"])
    << " product=" << scalar_text(a["product"]) << " k=" << scalar_text(a["k"])
    << " satisfied=" << scalar_text(a["satisfied"]) << "\n";
  o << "    step  admissible  h_state  kl_bits  h_down  kl_up  operation\n";
  for (const auto& s : a["steps"]) {
    o << "    " << s["index"].get<std::size_t>() << "  " << s["admissible"].get<std::uint64_t>()
      << "  " << scalar_text(s["h_state"]) << "  " << scalar_text(s["kl_bits"]) << "  "
      << (s["h_nonincreasing"].get<bool>() ? "ok" : "FLAG") << "  "
      << (s["kl_nondecreasing"].get<bool>() ? "ok" : "FLAG") << "  "
      << (s["step"].get<std::string>().empty() ? "(initial)" : s["step"].get<std::string>())
      << "\n";
  }
  o << "    monotonicity violations: " << a["monotonicity_violations"].get<std::size_t>() << "\n";
}

void commutation_text(std::ostringstream& o, const json& c) {
  o << "compare " << c["a"].get<std::string>() << " vs " << c["b"].get<std::string>() << ": "
    << c["verdict"].get<std::string>() << "\n"
    << "  table_tv=" << scalar_text(c["table_tv"])
    << " set_jaccard=" << scalar_text(c["set_jaccard"])
    << " members_equal=" << scalar_text(c["members_equal"])
    << " identifiable=" << scalar_text(c["identifiable_a"]) << "/"
    << scalar_text(c["identifiable_b"]) << "\n";
}

}  // namespace

std::string render_text(const json& r) {
  std::ostringstream o;
  o << "scenario " << r["scenario"].get<std::string>() << " ("
    << r["model_class"]["size"].get<std::uint64_t>() << " models, "
    << r["initial"]["admissible"].get<std::uint64_t>() << " admissible at origin)\n";
  if (r.contains("residual_k"))
    o << "k=" << scalar_text(r["residual_k"]["k"])
      << " k_class=" << scalar_text(r["residual_k"]["k_class"]) << "\n";
  if (r.contains("pipelines")) {
    for (const auto& p : r["pipelines"]) {
      o << "pipeline " << p["label"].get<std::string>() << ":";
      for (const auto& s : p["steps"]) o << " [" << s.get<std::string>() << "]";
      o << "\n  admissible=" << p["admissible"].get<std::uint64_t>()
        << " tau in [" << scalar_text(p["tau_set"]["min"]) << ", "
        << scalar_text(p["tau_set"]["max"]) << "] width=" << scalar_text(p["tau_set"]["width"])
        << " identifiable=" << scalar_text(p["identifiable"]) << "\n";
      for (const auto& adj : p["adjustments"]) {
        o << "  adjust at step " << adj["step"].get<std::size_t>() << ": ";
        if (adj["valid"].get<bool>())
          o << "estimate " << scalar_text(adj["estimate"]) << "\n";
        else
          o << "positivity violation: " << adj["violation"]["message"].get<std::string>() << "\n";
      }
      audit_text(o, p["audit"]);
    }
  }
  if (r.contains("audits")) {
    for (const auto& a : r["audits"]) {
      o << "pipeline " << a["label"].get<std::string>() << "\n";
      audit_text(o, a);
    }
  }
  if (r.contains("commutations"))
    for (const auto& c : r["commutations"]) commutation_text(o, c);
  if (r.contains("commutation")) commutation_text(o, r["commutation"]);
  if (r.contains("timings_ms"))
    for (const auto& [phase, ms] : r["timings_ms"].items())
      o << "time " << phase << ": " << scalar_text(ms) << " ms\n";
  return o.str();
}

// ---------------------------------------------------------------- cli

namespace {

struct Common {
  std::string input;
  Overrides overrides;
  unsigned parallel = 0;
  std::string format = "json";
  std::string out_path;
  bool timings = false;
};

void add_common(CLI::App& cmd, Common& c) {
  cmd.add_option("input", c.input, "scenario file, '-' for stdin, or builtin:NAME")->required();
  cmd.add_option("--grid-step", c.overrides.grid_step, "grid 0, step, ..., 1");
  cmd.add_option("--epsilon", c.overrides.epsilon, "total-variation tolerance");
  cmd.add_option("--eps-id", c.overrides.eps_id, "identifiability width threshold");
  cmd.add_option("--bins", c.overrides.bins, "tau histogram bins");
  cmd.add_option("--quantum", c.overrides.quantum, "fingerprint quantum");
  cmd.add_option("--cap", c.overrides.cap, "enumeration cap");
  cmd.add_option("--parallel", c.parallel, "worker threads (0 = hardware)");
  cmd.add_option("--format", c.format, "json, csv or text")
      ->check(CLI::IsMember({"json", "csv", "text"}));
  cmd.add_option("--out", c.out_path, "write the report here instead of stdout");
  cmd.add_flag("--timings", c.timings, "add wall time per phase");
}

std::string load_input(const std::string& input, std::istream& in) {
  constexpr std::string_view prefix = "builtin:";
  if (input.rfind(prefix, 0) == 0) {
    try {
      return std::string(builtin_scenario(input.substr(prefix.size())));
    } catch (const std::out_of_range& e) {
      throw ValidationError(0, e.what());
    }
  }
  std::ostringstream buf;
  if (input == "-") {
    buf << in.rdbuf();
    return buf.str();
  }
  std::ifstream file(input, std::ios::binary);
  if (!file) throw ValidationError(0, "cannot open scenario file '" + input + "'");
  buf << file.rdbuf();
  return buf.str();
}

void emit(const Common& c, const json& report, std::ostream& out) {
  std::string text;
  if (c.format == "csv")
    text = render_csv(report);
  else if (c.format == "text")
    text = render_text(report);
  else
    text = report.dump(2) + "\n";
  if (c.out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(c.out_path, std::ios::binary);
  if (!file) throw ValidationError(0, "cannot write '" + c.out_path + "'");
  file << text;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            std::istream& in) {
  CLI::App app{"Evidential-state engine for binary causal models"};
  app.require_subcommand(1);

  Common run_opts, compare_opts, audit_opts;
  std::string label_a, label_b, builtin_name;

  auto* run = app.add_subcommand("run", "run every pipeline and report all metrics");
  add_common(*run, run_opts);
  auto* compare = app.add_subcommand("compare", "compare two pipelines from the same origin");
  add_common(*compare, compare_opts);
  compare->add_option("a", label_a, "first pipeline label")->required();
  compare->add_option("b", label_b, "second pipeline label")->required();
  auto* audit = app.add_subcommand("audit", "residual k and the per-pipeline constraint audit");
  add_common(*audit, audit_opts);
  auto* builtin = app.add_subcommand("builtin", "print a builtin scenario");
  builtin->add_option("name", builtin_name, "fig1, s2, trial or independent")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  std::string stage = "input";
  try {
    if (builtin->parsed()) {
      try {
        out << builtin_scenario(builtin_name);
      } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
      }
      return kExitOk;
    }
    Common& c = run->parsed() ? run_opts : compare->parsed() ? compare_opts : audit_opts;
    Scenario s = apply_overrides(parse_scenario(load_input(c.input, in)), c.overrides);
    const ReportOptions options{Parallelism{c.parallel}, c.timings};
    stage = "engine";
    json report;
    if (run->parsed())
      report = run_report(s, options);
    else if (compare->parsed())
      report = compare_report(s, label_a, label_b, options);
    else
      report = audit_report(s, options);
    emit(c, report, out);
    return kExitOk;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitInput;
  } catch (const StepError& e) {
    err << (e.engine() ? "engine error: " : "invalid input: ") << e.what() << "\n";
    return e.engine() ? kExitEngine : kExitInput;
  } catch (const SizeOverflow& e) {
    err << "engine error: SizeOverflow: " << e.what() << "\n";
    return kExitEngine;
  } catch (const EmptyAdmissible& e) {
    err << "engine error: EmptyAdmissible: " << e.what() << "\n";
    return kExitEngine;
  } catch (const std::exception& e) {
    err << (stage == "engine" ? "engine error: " : "invalid input: ") << e.what() << "\n";
    return stage == "engine" ? kExitEngine : kExitInput;
  }
}

}  // namespace evs
