#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evs/metrics.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace evs;

TEST(Histogram, BinBoundaries) {
  EXPECT_EQ(TauHistogram::bin_of(-1.0, 41), 0u);
  EXPECT_EQ(TauHistogram::bin_of(1.0, 41), 40u);
  EXPECT_EQ(TauHistogram::bin_of(0.0, 41), 20u);
  EXPECT_EQ(TauHistogram::bin_of(0.25, 41), 25u);  // floor(1.25 / 2 * 41)
  EXPECT_EQ(TauHistogram::bin_of(-3.0, 41), 0u);
  EXPECT_EQ(TauHistogram::bin_of(3.0, 41), 40u);
}

TEST(Histogram, MergeIsAdditionInAnyGrouping) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> taus(500);
  for (auto& t : taus) t = u(rng);
  TauHistogram all;
  for (double t : taus) all.add(t);
  for (std::size_t split : {0u, 1u, 137u, 499u, 500u}) {
    TauHistogram a, b;
    for (std::size_t i = 0; i < taus.size(); ++i) (i < split ? a : b).add(taus[i]);
    TauHistogram ab = a, ba = b;
    ab.merge(b);
    ba.merge(a);
    EXPECT_EQ(ab, all);
    EXPECT_EQ(ba, all);
  }
  TauHistogram other(10);
  EXPECT_THROW(all.merge(other), InvalidModel);
  EXPECT_THROW(TauHistogram(0), InvalidModel);
  EXPECT_THROW(summarize(TauHistogram()), EmptyAdmissible);
}

TEST(Entropy, Landmarks) {
  EXPECT_EQ(entropy_bits(std::vector<std::uint64_t>{5}), 0.0);
  EXPECT_DOUBLE_EQ(entropy_bits(std::vector<std::uint64_t>{3, 0, 3}), 1.0);
  EXPECT_DOUBLE_EQ(entropy_bits(std::vector<std::uint64_t>{1, 1, 1, 1}), 2.0);
  EXPECT_EQ(entropy_bits(std::vector<std::uint64_t>{0, 0}), 0.0);
}

TEST(Kl, PointMassAgainstHalf) {
  const JointTable p({"A"}, {0.0, 1.0}), q({"A"}, {0.5, 0.5});
  const auto r = kl_divergence(p, q);
  EXPECT_TRUE(r.dominated);
  EXPECT_NEAR(r.kl_bits, 1.0, 1e-12);
  const auto inf = kl_divergence(q, p);
  EXPECT_FALSE(inf.dominated);
  EXPECT_TRUE(std::isinf(inf.kl_bits));
  EXPECT_EQ(kl_divergence(q, q).kl_bits, 0.0);
  EXPECT_THROW(kl_divergence(p, JointTable({"B"}, {0.5, 0.5})), ScopeMismatch);
}

TEST(OriginMetrics, AreZero) {
  for (const auto& name : builtin_names()) {
    const auto e = fixtures::origin(fixtures::builtin(name));
    EXPECT_EQ(delta_breadth(e).kl_bits, 0.0) << name;
    EXPECT_EQ(delta_cause(e).delta_cause, 0.0) << name;
  }
}

TEST(TauSets, Fig1PipelinesAndEvidence) {
  const auto s = fixtures::builtin("fig1");
  const auto e = fixtures::origin(s);
  const auto cr = run_pipeline(e, fixtures::pipeline(s, "CR")).back();
  const auto rc = run_pipeline(e, fixtures::pipeline(s, "RC")).back();
  const auto tcr = tau_set(cr);
  EXPECT_EQ(tcr.min, 0.25);
  EXPECT_EQ(tcr.width, 0.0);
  EXPECT_EQ(tcr.count, 2u);
  EXPECT_EQ(entropy_bits(tcr.histogram), 0.0);  // singleton tau support
  // frozen from tests/oracle/derive.py: what the restricted table alone allows
  const auto ev = evidence_tau_set(rc);
  EXPECT_EQ(ev.count, 820u);
  EXPECT_DOUBLE_EQ(ev.min, -0.3125);
  EXPECT_DOUBLE_EQ(ev.max, 0.5625);
  EXPECT_NEAR(entropy_bits(ev.histogram), 2.761766022573338, 1e-12);
  EXPECT_NEAR(delta_breadth(rc).kl_bits, 1.0, 1e-12);
}

TEST(TauSets, HistogramMatchesOracleEntropy) {
  const auto s = fixtures::builtin("s2");
  const auto e = fixtures::origin(s);
  std::vector<double> taus;
  for (auto i : e.admissible().members) taus.push_back(oracle::tau(e.model_class().model_at(i)));
  const auto t = tau_set(e);
  EXPECT_EQ(t.count, 18u);
  EXPECT_DOUBLE_EQ(t.min, 0.0);
  EXPECT_DOUBLE_EQ(t.max, 0.5);
  EXPECT_NEAR(entropy_bits(t.histogram), oracle::entropy_of_taus(taus), 1e-12);
  EXPECT_NEAR(entropy_bits(t.histogram), std::log2(3.0), 1e-12);
  EXPECT_FALSE(identifiable(e, 0.05));
  EXPECT_TRUE(identifiable(e, 0.5));
}

TEST(Breadth, RestrictionKlGrowsAlongChains) {
  const auto s = fixtures::builtin("trial");
  auto e = fixtures::origin(s);
  double last = 0.0;
  for (const auto& [v, b] : std::vector<std::pair<std::string, int>>{{"V", 1}, {"A", 1}, {"T", 0}}) {
    e = apply(e, Restrict{Event{{{v, b}}}});
    const double kl = delta_breadth(e).kl_bits;
    EXPECT_GE(kl, last - 1e-12);
    last = kl;
  }
}

TEST(ResidualKTest, S2IsPositive) {
  const auto s = fixtures::builtin("s2");
  const auto e = fixtures::origin(s);
  const auto k = residual_k(e.model_class(), e.admissible().members, 1e-6, 41, 0.02);
  // frozen from tests/oracle/derive.py
  EXPECT_NEAR(k.k, 1.584962500721156, 1e-12);
  EXPECT_EQ(k.k_class, 0.0);
  EXPECT_EQ(k.cells, 3761u);
  EXPECT_EQ(k.population_cells, 1u);
  const auto again = residual_k(e.model_class(), e.admissible().members, 1e-6, 41, 0.02, Parallelism{3});
  EXPECT_EQ(again.k, k.k);
  EXPECT_EQ(again.cells, k.cells);
}

TEST(ResidualKTest, ParentlessTreatmentIsZero) {
  const auto s = fixtures::builtin("independent");
  const auto e = fixtures::origin(s);
  const auto k = residual_k(e.model_class(), e.admissible().members, 1e-6, 41, 0.02);
  EXPECT_EQ(k.k, 0.0);
  const auto whole = residual_k(e.model_class(), 1e-6, 41, 0.02);
  EXPECT_EQ(whole.k, whole.k_class);
  EXPECT_EQ(whole.k_class, 0.0);
}

TEST(ResidualKTest, RejectsBadArguments) {
  const auto s = fixtures::builtin("independent");
  const ModelClass mc(s.diagram, s.grid);
  EXPECT_THROW(residual_k(mc, 0.0, 41, 0.02), InvalidModel);
  EXPECT_THROW(residual_k(mc, 1e-6, 0, 0.02), InvalidModel);
  EXPECT_THROW(residual_k(mc, 1e-6, 41, -1.0), InvalidModel);
}

TEST(Audit, TrialReportShape) {
  const auto s = fixtures::builtin("trial");
  const auto states = run_pipeline(fixtures::origin(s), fixtures::pipeline(s, "RIR"));
  const auto r = constraint_audit(states, 0.0, 41, "RIR");
  ASSERT_EQ(r.steps.size(), 4u);
  EXPECT_EQ(r.steps[0].step, "");
  EXPECT_EQ(r.steps[1].step, "restrict V=1");
  EXPECT_EQ(r.steps[2].step, "intervene T p=0.5");
  EXPECT_GT(r.delta_breadth.kl_bits, 0.0);
  ASSERT_TRUE(r.product.has_value());
  EXPECT_NEAR(*r.product, r.delta_cause * r.delta_breadth.kl_bits, 1e-15);
  ASSERT_TRUE(r.satisfied.has_value());
  EXPECT_TRUE(*r.satisfied);
}

TEST(Audit, S2ProductBelowK) {
  const auto s = fixtures::builtin("s2");
  const auto e = fixtures::origin(s);
  const auto states = run_pipeline(e, fixtures::pipeline(s, "RC"));
  const auto r = constraint_audit(states, std::log2(3.0), 41, "RC");
  EXPECT_EQ(r.monotonicity_violations, 0u);
  ASSERT_TRUE(r.satisfied.has_value());
  EXPECT_FALSE(*r.satisfied);
  EXPECT_EQ(r.delta_cause, 0.0);
  EXPECT_THROW(constraint_audit({}, 0.0), InvalidModel);
}
