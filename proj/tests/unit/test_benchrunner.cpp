#include <gtest/gtest.h>

#include <cmath>

#include "joulebench/benchrunner.hpp"
#include "joulebench/errors.hpp"
#include "test_util.hpp"

using namespace joulebench;

namespace {

BenchPlan::Settings settings(std::vector<std::int64_t> sizes) {
  BenchPlan::Settings s;
  s.sizes = std::move(sizes);
  s.min_measure_time_s = 0.05;
  return s;
}

std::vector<Verdict> verify(const BuildArtifact& art, const KernelSpec& kernel, const BenchPlan& plan) {
  std::vector<WorkloadSpec> w;
  for (auto n : plan.sizes()) w.push_back(plan.workload(kernel, n));
  return run_correctness(art, kernel, w, default_policy(kernel, w));
}

Measurement m(double elapsed, std::optional<double> joules = std::nullopt, int rep = 0) {
  Measurement x;
  x.size = 8;
  x.rep_index = rep;
  x.elapsed_s = elapsed;
  if (joules) x.energy = EnergyReading{*joules, EnergyMethod::Proxy, "nominal 5 W"};
  return x;
}

}  // namespace

TEST(Plan, Validation) {
  auto s = settings({1 << 20});
  s.measured_reps = 2;
  EXPECT_THROW(BenchPlan{s}, SpecError);
  s.measured_reps = 3;
  EXPECT_NO_THROW(BenchPlan{s});
  s.warmup_reps = 0;
  EXPECT_THROW(BenchPlan{s}, SpecError);
  EXPECT_THROW(BenchPlan{settings({})}, SpecError);
  EXPECT_THROW(BenchPlan{settings({0})}, SpecError);
  auto t = settings({4});
  t.min_measure_time_s = 0;
  EXPECT_THROW(BenchPlan{t}, SpecError);
}

TEST(Stats, MedianAndMad) {
  EXPECT_EQ(median({1, 2, 100}), 2.0);
  EXPECT_EQ(mad({1, 2, 100}), 1.0);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_THROW(median({}), SpecError);
}

TEST(Stats, ConstantValuesCollapse) {
  const std::vector<Measurement> ms = {m(0.5, 2.0, 0), m(0.5, 2.0, 1), m(0.5, 2.0, 2), m(0.5, 2.0, 3)};
  const auto s = reduce_stats(ms);
  EXPECT_EQ(s.n_reps, 4);
  EXPECT_EQ(s.median_elapsed_s, 0.5);
  EXPECT_EQ(s.mad_elapsed_s, 0.0);
  EXPECT_EQ(s.ci95_lo, 0.5);
  EXPECT_EQ(s.ci95_hi, 0.5);
  EXPECT_EQ(s.median_energy_j, 2.0);
}

TEST(Stats, EnergyMedianOnlyWhenEveryRepHasEnergy) {
  const std::vector<Measurement> ms = {m(1, 1.0), m(2, std::nullopt), m(3, 3.0)};
  EXPECT_FALSE(reduce_stats(ms).median_energy_j);
}

TEST(Stats, RejectsTooFewOrMixed) {
  EXPECT_THROW(reduce_stats(std::vector<Measurement>{m(1), m(2)}), SpecError);
  auto ms = std::vector<Measurement>{m(1), m(2), m(3)};
  ms[2].size = 9;
  EXPECT_THROW(reduce_stats(ms), SpecError);
}

TEST(Stats, BootstrapIsSeededAndPinned) {
  const std::vector<double> v = {0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 10.0, 0.95};
  const auto a = bootstrap_median_ci(v, kDefaultBootstrapSeed);
  const auto b = bootstrap_median_ci(v, kDefaultBootstrapSeed);
  EXPECT_EQ(a.lo, b.lo);
  EXPECT_EQ(a.hi, b.hi);
  EXPECT_LE(a.lo, 1.2);
  EXPECT_GE(a.hi, 1.2);
  // Reference values from the multiply-shift resampler on mt19937_64.
  EXPECT_EQ(a.lo, 0.95);
  EXPECT_EQ(a.hi, 1.5);
}

TEST(Stats, PercentChange) {
  Stats base, var;
  base.median_elapsed_s = 10;
  var.median_elapsed_s = 3;
  EXPECT_NEAR(percent_change(base, var, Metric::Elapsed), 70.0, 1e-12);
  var.median_elapsed_s = 10;
  EXPECT_EQ(percent_change(base, var, Metric::Elapsed), 0.0);
  var.median_elapsed_s = 12;
  EXPECT_NEAR(percent_change(base, var, Metric::Elapsed), -20.0, 1e-12);
  base.median_energy_j = 10;
  var.median_energy_j = 3;
  EXPECT_NEAR(percent_change(base, var, Metric::Energy), 70.0, 1e-12);
  var.median_energy_j.reset();
  EXPECT_THROW(percent_change(base, var, Metric::Energy), SpecError);
}

TEST(Checksum, SumsOutputsWithInheritedTolerance) {
  const std::vector<double> oracle = {1.0, -2.0, 3.0};
  const auto c = oracle_checksum(oracle, TolerancePolicy{0.5, 0.25});
  EXPECT_EQ(c.value, 2.0);
  EXPECT_GE(c.tolerance, 0.75 + 0.5 * 6.0);
  EXPECT_LT(c.tolerance, 0.75 + 0.5 * 6.0 + 1e-12);
}

TEST(Ndjson, RoundTrip) {
  jbtest::TempDir tmp;
  auto a = m(0.001234567890123, 0.1 / 3);
  a.kernel = KernelId::Matmul;
  a.kind = VariantKind::OpenMP;
  a.checksum = -12.5;
  a.loop_count = 17;
  a.window_start_s = 123.25;
  a.window_end_s = 124.75;
  auto b = m(2e-9);
  b.rep_index = 1;
  const std::vector<Measurement> ms = {a, b};
  write_measurements(ms, tmp / "m.ndjson");
  EXPECT_EQ(read_measurements(tmp / "m.ndjson"), ms);
  EXPECT_THROW(write_measurements(ms, "/proc/nonexistent/m.ndjson"), StoreError);
}

TEST(Bench, UnverifiedArtifactIsRefused) {
  jbtest::TempDir tmp;
  const auto art = jbtest::build_corpus(KernelId::Dot, VariantKind::Scalar, tmp.path());
  const auto& dot = kernel_spec(KernelId::Dot);
  const BenchPlan plan(settings({1024}));
  EXPECT_THROW(run_bench(art, dot, plan, {}, {}), ProtocolError);

  // A verdict for a different seed does not count.
  auto s = settings({1024});
  s.seed = 99;
  const auto other = verify(art, dot, BenchPlan(s));
  EXPECT_THROW(run_bench(art, dot, plan, {}, other), ProtocolError);

  // Nor does a failing verdict on the right workload.
  auto failing = verify(art, dot, plan);
  failing[0].passed = false;
  EXPECT_THROW(run_bench(art, dot, plan, {}, failing), ProtocolError);
}

TEST(Bench, ScalarDotFiveMeasurementsWithProxyEnergy) {
  jbtest::TempDir tmp;
  const auto art = jbtest::build_corpus(KernelId::Dot, VariantKind::Scalar, tmp.path());
  const auto& dot = kernel_spec(KernelId::Dot);
  auto s = settings({1 << 20});
  s.energy_method = EnergyMethod::Proxy;
  const BenchPlan plan(s);
  MeterContext meter;
  meter.nominal_power_w = 5.0;
  const auto r = run_bench(art, dot, plan, meter, verify(art, dot, plan));
  ASSERT_EQ(r.measurements.size(), 5u);
  EXPECT_EQ(r.energy_method, EnergyMethod::Proxy);
  EXPECT_TRUE(r.warnings.empty());

  const auto inputs = generate_inputs(dot, plan.workload(dot, 1 << 20));
  const double oracle = reference_eval(dot, inputs, {{"n", 1 << 20}})[0];
  for (int i = 0; i < 5; ++i) {
    const auto& x = r.measurements[static_cast<std::size_t>(i)];
    EXPECT_EQ(x.rep_index, i);
    EXPECT_EQ(x.size, 1 << 20);
    EXPECT_GT(x.elapsed_s, 0);
    EXPECT_GE(x.loop_count, 1);
    EXPECT_GE((x.window_end_s - x.window_start_s), 0.05 * 0.99);
    EXPECT_NEAR(x.checksum, oracle, 1e-6 * std::fabs(oracle) + 1e-9);
    ASSERT_TRUE(x.energy);
    EXPECT_NEAR(x.energy->joules, 5.0 * x.elapsed_s, 1e-15);
  }
  const auto st = reduce_stats(r.measurements);
  EXPECT_LE(st.ci95_lo, st.median_elapsed_s);
  EXPECT_GE(st.ci95_hi, st.median_elapsed_s);
}

TEST(Bench, RaplWithoutPowercapReportsLatencyOnly) {
  jbtest::TempDir tmp;
  const auto art = jbtest::build_corpus(KernelId::Dot, VariantKind::Scalar, tmp.path());
  const auto& dot = kernel_spec(KernelId::Dot);
  auto s = settings({4096});
  s.energy_method = EnergyMethod::Rapl;
  const BenchPlan plan(s);
  MeterContext meter;
  meter.rapl_domains = discover_rapl_domains(tmp / "no-powercap");
  const auto r = run_bench(art, dot, plan, meter, verify(art, dot, plan));
  EXPECT_EQ(r.energy_method, EnergyMethod::None);
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_NE(r.warnings[0].find("rapl"), std::string::npos);
  ASSERT_EQ(r.measurements.size(), 5u);
  for (const auto& x : r.measurements) EXPECT_FALSE(x.energy);
}

TEST(Bench, TraceEnergyIntegratesWindow) {
  jbtest::TempDir tmp;
  const auto art = jbtest::build_corpus(KernelId::Dot, VariantKind::Scalar, tmp.path());
  const auto& dot = kernel_spec(KernelId::Dot);
  auto s = settings({4096});
  s.energy_method = EnergyMethod::Trace;
  s.measured_reps = 3;
  const BenchPlan plan(s);
  MeterContext meter;
  const double now = monotonic_seconds();
  meter.trace = PowerTrace({{0, 8.0}, {3600, 8.0}});
  meter.trace_offset_s = now - 1;
  const auto r = run_bench(art, dot, plan, meter, verify(art, dot, plan));
  ASSERT_EQ(r.measurements.size(), 3u);
  for (const auto& x : r.measurements) {
    ASSERT_TRUE(x.energy);
    EXPECT_EQ(x.energy->method, EnergyMethod::Trace);
    EXPECT_NEAR(x.energy->joules, 8.0 * x.elapsed_s, 1e-9 * 8.0 * x.elapsed_s + 1e-15);
  }
}
