#include <gtest/gtest.h>

#include <cfloat>
#include <cmath>

#include "joulebench/difftest.hpp"
#include "joulebench/errors.hpp"
#include "test_util.hpp"

using namespace joulebench;

namespace {

constexpr double kEps = FLT_EPSILON;

std::string mutant(const std::string& name) { return jbtest::slurp(jbtest::data_path("mutants/" + name)); }

std::vector<WorkloadSpec> dot_workloads(std::vector<std::int64_t> sizes, std::uint64_t seed = 1) {
  std::vector<WorkloadSpec> out;
  for (auto n : sizes) out.push_back(square_workload(kernel_spec(KernelId::Dot), n, seed));
  return out;
}

}  // namespace

TEST(Policy, DotFormula) {
  const auto& dot = kernel_spec(KernelId::Dot);
  const auto p = default_policy(dot, std::int64_t{1} << 20);
  EXPECT_DOUBLE_EQ(p.rtol, 16 * kEps * 20);
  EXPECT_DOUBLE_EQ(p.atol, 1e-12);
  const auto p1 = default_policy(dot, 1);
  EXPECT_EQ(p1.rtol, 0.0);
  EXPECT_DOUBLE_EQ(p1.atol, 1e-12);
  EXPECT_DOUBLE_EQ(default_policy(dot, 1003).rtol, 16 * kEps * 10);
}

TEST(Policy, AxpyAndMatmul) {
  const auto pa = default_policy(kernel_spec(KernelId::Axpy), std::int64_t{1} << 20);
  EXPECT_DOUBLE_EQ(pa.rtol, 16 * kEps);
  EXPECT_DOUBLE_EQ(pa.atol, kEps);
  const auto pm = default_policy(kernel_spec(KernelId::Matmul), 1024);
  EXPECT_DOUBLE_EQ(pm.rtol, 16 * kEps * 10);
  EXPECT_DOUBLE_EQ(pm.atol, 16 * kEps * 10 * 32);
}

TEST(Policy, SweepUsesDeepestReduction) {
  const auto& dot = kernel_spec(KernelId::Dot);
  const auto w = dot_workloads({4, 1003, 3});
  EXPECT_EQ(default_policy(dot, w), default_policy(dot, 1003));
}

TEST(Policy, Validation) {
  EXPECT_THROW(validate(TolerancePolicy{-1, 0}), SpecError);
  EXPECT_THROW(validate(TolerancePolicy{0, 0}), SpecError);
  EXPECT_NO_THROW(validate(TolerancePolicy{0, 1e-12}));
}

TEST(Policy, AcceptsRule) {
  TolerancePolicy p{1e-3, 1e-6};
  EXPECT_TRUE(p.accepts(1000.9, 1000));
  EXPECT_FALSE(p.accepts(1001.1, 1000));
  EXPECT_TRUE(p.accepts(5e-7, 0));
  EXPECT_FALSE(p.accepts(NAN, 1));
}

TEST(Compare, AlwaysZeroAgainstTwenty) {
  const auto w = square_workload(kernel_spec(KernelId::Dot), 4, 1);
  const std::vector<double> variant{0.0}, oracle{20.0};
  const auto v = compare_outputs(variant, oracle, TolerancePolicy{16 * kEps * 2, 1e-12}, w);
  EXPECT_FALSE(v.passed);
  EXPECT_EQ(v.status, VerdictStatus::Failed);
  EXPECT_EQ(v.max_abs_err, 20.0);
  EXPECT_EQ(v.first_failure_index, 0u);
}

TEST(Compare, ExactMatchPasses) {
  const auto w = square_workload(kernel_spec(KernelId::Dot), 4, 1);
  const std::vector<double> out{20.0};
  const auto v = compare_outputs(out, out, TolerancePolicy{0, 1e-12}, w);
  EXPECT_TRUE(v.passed);
  EXPECT_EQ(v.status, VerdictStatus::Passed);
  EXPECT_EQ(v.max_abs_err, 0.0);
  EXPECT_FALSE(v.first_failure_index);
}

TEST(Compare, LengthMismatchFails) {
  const auto w = square_workload(kernel_spec(KernelId::Axpy), 3, 1);
  const std::vector<double> a{1, 2}, b{1, 2, 3};
  const auto v = compare_outputs(a, b, TolerancePolicy{0, 1e-6}, w);
  EXPECT_FALSE(v.passed);
  EXPECT_FALSE(v.detail.empty());
}

TEST(Sweep, StandardShape) {
  const auto& dot = kernel_spec(KernelId::Dot);
  EXPECT_EQ(standard_sweep_sizes(dot),
            (std::vector<std::int64_t>{1, 3, 4, 1003, 1 << 16, (1 << 20) - 1}));
  EXPECT_EQ(standard_sweep_sizes(kernel_spec(KernelId::Matmul)),
            (std::vector<std::int64_t>{1, 3, 4, 33, 64, 127}));
  const auto sweep = standard_sweep(dot, 7);
  ASSERT_EQ(sweep.size(), 30u);
  EXPECT_EQ(sweep[0].seed, 7u);
  EXPECT_EQ(sweep[4].seed, 11u);
  EXPECT_EQ(sweep, standard_sweep(dot, 7));
}

TEST(Correctness, ScalarDotExactOnFour) {
  jbtest::TempDir tmp;
  const auto art = jbtest::build_corpus(KernelId::Dot, VariantKind::Scalar, tmp.path());
  const auto& dot = kernel_spec(KernelId::Dot);
  const auto w = dot_workloads({4});
  const auto v = run_correctness(art, dot, w, default_policy(dot, 4));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_TRUE(v[0].passed);
  EXPECT_EQ(v[0].max_abs_err, 0.0);
  EXPECT_EQ(v[0].artifact_hash, art.source_hash);
}

TEST(Correctness, AlwaysZeroMutantFails) {
  jbtest::TempDir tmp;
  const auto art = jbtest::build(
      jbtest::descriptor(KernelId::Dot, VariantKind::Scalar, mutant("dot_always_zero.c")), tmp.path());
  const auto& dot = kernel_spec(KernelId::Dot);
  const auto w = dot_workloads({4, 1003});
  const auto v = run_correctness(art, dot, w, default_policy(dot, w));
  EXPECT_FALSE(all_passed(v));
  for (const auto& x : v) EXPECT_EQ(x.status, VerdictStatus::Failed);
}

TEST(Correctness, SegfaultIsCrashedNotFatal) {
  jbtest::TempDir tmp;
  const auto art = jbtest::build(
      jbtest::descriptor(KernelId::Dot, VariantKind::Scalar, mutant("dot_segfault.c")), tmp.path());
  const auto& dot = kernel_spec(KernelId::Dot);
  const auto w = dot_workloads({4, 3});
  const auto v = run_correctness(art, dot, w, default_policy(dot, w));
  ASSERT_EQ(v.size(), 2u);
  for (const auto& x : v) {
    EXPECT_EQ(x.status, VerdictStatus::Crashed);
    EXPECT_FALSE(x.passed);
    EXPECT_NE(x.detail.find("signal"), std::string::npos);
  }
}

TEST(Correctness, CorpusVariantsPassFullSweep) {
  const auto& tc = jbtest::toolchain();
  for (auto kernel : {KernelId::Dot, KernelId::Axpy, KernelId::Matmul}) {
    const auto& spec = kernel_spec(kernel);
    const auto sweep = standard_sweep(spec);
    const auto policy = default_policy(spec, sweep);
    for (auto kind : kinds_for(host_arch())) {
      if (!tc.supports(kind)) continue;
      const auto manifest = corpus_manifest();
      if (!find_entry(manifest, kernel, kind, host_arch())) continue;
      jbtest::TempDir tmp;
      const auto art = jbtest::build_corpus(kernel, kind, tmp.path());
      const auto v = run_correctness(art, spec, sweep, policy);
      for (const auto& x : v) {
        EXPECT_TRUE(x.passed) << to_string(kernel) << "/" << to_string(kind) << " failed at "
                              << reduction_depth(spec, x.workload.sizes) << " seed " << x.workload.seed
                              << " max_abs " << x.max_abs_err;
      }
    }
  }
}

TEST(Correctness, NoTailMutantFailsAt1003) {
  jbtest::TempDir tmp;
  const bool amd = host_arch() == TargetArch::AMD64;
  if (amd && !jbtest::toolchain().supports(VariantKind::SimdAvx2)) GTEST_SKIP() << "no AVX2";
  if (!amd && !jbtest::toolchain().supports(VariantKind::SimdNeon)) GTEST_SKIP() << "no NEON";
  const auto art = jbtest::build(
      jbtest::descriptor(KernelId::Dot, amd ? VariantKind::SimdAvx2 : VariantKind::SimdNeon,
                         mutant(amd ? "dot_avx2_no_tail.c" : "dot_neon_no_tail.c")),
      tmp.path());
  const auto& dot = kernel_spec(KernelId::Dot);
  const auto w = dot_workloads({1003});
  const auto v = run_correctness(art, dot, w, default_policy(dot, w));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_FALSE(v[0].passed);
  EXPECT_EQ(v[0].status, VerdictStatus::Failed);
}

TEST(Correctness, NeonCorpusDotPassesAt1003) {
  if (host_arch() != TargetArch::ARM64) GTEST_SKIP() << "NEON needs an ARM64 host";
  jbtest::TempDir tmp;
  const auto art = jbtest::build_corpus(KernelId::Dot, VariantKind::SimdNeon, tmp.path());
  const auto& dot = kernel_spec(KernelId::Dot);
  const auto w = dot_workloads({1003});
  EXPECT_TRUE(all_passed(run_correctness(art, dot, w, default_policy(dot, w))));
}

TEST(Correctness, MissingObjectIsAbiError) {
  const auto& dot = kernel_spec(KernelId::Dot);
  const auto w = dot_workloads({4});
  EXPECT_THROW(run_correctness(std::filesystem::path("/nonexistent/variant.so"), dot, w,
                               default_policy(dot, 4)),
               AbiError);
}

TEST(Driver, RenderIsDeterministic) {
  const auto& dot = kernel_spec(KernelId::Dot);
  const auto w = dot_workloads({1, 4, 1003});
  const auto p = default_policy(dot, w);
  EXPECT_EQ(render_unit_tests(dot, w, p), render_unit_tests(dot, w, p));
  EXPECT_NE(render_unit_tests(dot, w, p).find("kernel_entry"), std::string::npos);
}

namespace {

/// Compiles the driver against `impl` and returns its exit status.
int run_driver(KernelId kernel, const std::string& impl, const std::vector<WorkloadSpec>& w) {
  jbtest::TempDir tmp;
  const auto& spec = kernel_spec(kernel);
  emit_unit_tests(spec, w, default_policy(spec, w), tmp / "driver.c");
  jbtest::spit(tmp / "impl.c", impl);
  const auto cc = jbtest::toolchain().compiler_path.string();
  const auto exe = (tmp / "driver").string();
  auto r = run_process({cc, "-O2", "-o", exe, (tmp / "driver.c").string(), (tmp / "impl.c").string(),
                        "-lm"});
  if (!r.ok()) {
    ADD_FAILURE() << r.output;
    return -1;
  }
  return run_process({exe}).exit_code;
}

}  // namespace

TEST(Driver, PassesCorrectStubFailsWrongStub) {
  const auto good = jbtest::slurp(jbtest::data_path("../../corpus/dot/scalar_" +
                                                    std::string(slug(host_arch())) + ".c"));
  const auto w = dot_workloads({1, 3, 4, 1003});
  EXPECT_EQ(run_driver(KernelId::Dot, good, w), 0);
  EXPECT_NE(run_driver(KernelId::Dot, mutant("dot_always_zero.c"), w), 0);
}

TEST(Driver, AxpyAndMatmulDriversPassScalarCorpus) {
  for (auto kernel : {KernelId::Axpy, KernelId::Matmul}) {
    const auto src = jbtest::slurp(jbtest::data_path("../../corpus/" + std::string(to_string(kernel)) +
                                                     "/scalar_" + std::string(slug(host_arch())) + ".c"));
    const auto& spec = kernel_spec(kernel);
    std::vector<WorkloadSpec> w;
    for (auto n : {1, 3, 4, 33}) w.push_back(square_workload(spec, n, 2));
    EXPECT_EQ(run_driver(kernel, src, w), 0) << to_string(kernel);
  }
}

TEST(Driver, EmitToUnwritablePathIsStoreError) {
  const auto& dot = kernel_spec(KernelId::Dot);
  const auto w = dot_workloads({4});
  EXPECT_THROW(emit_unit_tests(dot, w, default_policy(dot, 4), "/proc/nonexistent/driver.c"), StoreError);
}
