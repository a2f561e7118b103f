#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "evs/cli.hpp"

using namespace evs;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(const std::vector<std::string>& args, const std::string& stdin_text = "") {
  std::ostringstream out, err;
  std::istringstream in(stdin_text);
  const int code = run_cli(args, out, err, in);
  return {code, out.str(), err.str()};
}

const json& pipeline(const json& report, const std::string& label) {
  for (const auto& p : report["pipelines"])
    if (p["label"] == label) return p;
  throw std::runtime_error("missing pipeline " + label);
}

}  // namespace

TEST(Cli, RunFig1Json) {
  const auto r = cli({"run", "builtin:fig1", "--grid-step", "0.25", "--epsilon", "0.02"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_EQ(report["report"], "run");
  EXPECT_EQ(report["scenario"], "fig1");
  EXPECT_TRUE(pipeline(report, "CR")["identifiable"].get<bool>());
  EXPECT_FALSE(pipeline(report, "RC")["identifiable"].get<bool>());
  EXPECT_FALSE(pipeline(report, "RC")["adjustments"][0]["valid"].get<bool>());
  ASSERT_EQ(report["commutations"].size(), 1u);
  EXPECT_EQ(report["commutations"][0]["verdict"], "diverge");
  EXPECT_FALSE(report.contains("timings_ms"));
  EXPECT_EQ(report["settings"]["grid"], json({0, 0.25, 0.5, 0.75, 1}));
}

TEST(Cli, ReportIsSelfContained) {
  const auto first = json::parse(cli({"run", "builtin:s2", "--epsilon", "0.03"}).out);
  const auto text = first["scenario_text"].get<std::string>();
  EXPECT_NE(text.find("epsilon=0.03"), std::string::npos);
  const auto again = cli({"run", "-"}, text);
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(json::parse(again.out), first);
}

TEST(Cli, ParallelismDoesNotChangeTheReport) {
  const auto a = cli({"run", "builtin:s2", "--parallel", "1"});
  const auto b = cli({"run", "builtin:s2", "--parallel", "5"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, BuiltinPipesIntoRun) {
  const auto text = cli({"builtin", "independent"});
  ASSERT_EQ(text.code, 0);
  EXPECT_EQ(cli({"run", "-"}, text.out).code, 0);
  EXPECT_EQ(cli({"builtin", "nope"}).code, 2);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli({"run", "nonexistent.scn"}).code, 2);
  EXPECT_EQ(cli({"run", "builtin:nope"}).code, 2);
  EXPECT_EQ(cli({"run", "-"}, "scenario x\nbogus\n").code, 2);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"run", "builtin:fig1", "--format", "xml"}).code, 2);
  EXPECT_EQ(cli({"run", "builtin:fig1", "--grid-step", "0.3"}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);

  const auto overflow = cli({"run", "builtin:fig1", "--cap", "1000"});
  EXPECT_EQ(overflow.code, 3);
  EXPECT_NE(overflow.err.find("SizeOverflow"), std::string::npos);

  // The fig1 truth is off the step-0.5 grid, so nothing matches at epsilon 0.
  const auto empty = cli({"run", "builtin:fig1", "--grid-step", "0.5", "--epsilon", "0"});
  EXPECT_EQ(empty.code, 3);
  EXPECT_NE(empty.err.find("EmptyAdmissible"), std::string::npos);
}

TEST(Cli, ParseErrorIsRendered) {
  const auto r = cli({"run", "-"}, "scenario x\nvar T obs sideways\n");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 2, column 11"), std::string::npos) << r.err;
}

TEST(Cli, Compare) {
  const auto self = cli({"compare", "builtin:fig1", "CR", "CR"});
  ASSERT_EQ(self.code, 0);
  EXPECT_EQ(json::parse(self.out)["commutation"]["verdict"], "commute");
  const auto diverge = cli({"compare", "builtin:fig1", "CR", "RC"});
  ASSERT_EQ(diverge.code, 0);
  EXPECT_EQ(json::parse(diverge.out)["commutation"]["verdict"], "diverge");
  const auto commute = cli({"compare", "builtin:independent", "AB", "BA", "--format", "text"});
  ASSERT_EQ(commute.code, 0);
  EXPECT_NE(commute.out.find("commute"), std::string::npos);
  EXPECT_EQ(cli({"compare", "builtin:fig1", "CR", "XX"}).code, 2);
}

TEST(Cli, AuditParentlessTreatment) {
  const auto r = cli({"audit", "builtin:independent"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_EQ(report["residual_k"]["k"], 0.0);
  for (const auto& a : report["audits"]) {
    EXPECT_TRUE(a["satisfied"].get<bool>());
    EXPECT_EQ(a["steps"].size(), 3u);
  }
}

TEST(Cli, AuditS2) {
  const auto r = cli({"audit", "builtin:s2", "--format", "text"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("k=1.584962500721156"), std::string::npos) << r.out;
}

TEST(Cli, CsvHasFixedColumns) {
  const auto r = cli({"run", "builtin:independent", "--format", "csv"});
  ASSERT_EQ(r.code, 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "scenario,pipeline,metric,value");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3) << line;
    EXPECT_EQ(line.rfind("independent,", 0), 0u);
  }
  EXPECT_GT(rows, 10);
  EXPECT_NE(r.out.find("independent,AB|BA,compare.verdict,commute"), std::string::npos);
}

TEST(Cli, OutFileAndTimings) {
  const std::string path = ::testing::TempDir() + "evs_cli_report.json";
  const auto r = cli({"run", "builtin:independent", "--out", path, "--timings"});
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  std::ifstream file(path);
  const auto report = json::parse(file);
  EXPECT_TRUE(report.contains("timings_ms"));
  std::remove(path.c_str());
}

TEST(Cli, OverridesValidate) {
  Scenario s = parse_scenario(builtin_scenario("fig1"));
  EXPECT_THROW(apply_overrides(s, Overrides{.epsilon = -1.0}), ValidationError);
  EXPECT_THROW(apply_overrides(s, Overrides{.bins = 0}), ValidationError);
  EXPECT_THROW(apply_overrides(s, Overrides{.quantum = 0.0}), ValidationError);
  const auto t = apply_overrides(s, Overrides{.grid_step = 0.5, .bins = 11});
  EXPECT_EQ(t.grid.size(), 3u);
  EXPECT_EQ(t.settings.bins, 11u);
}
