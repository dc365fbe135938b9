#include <gtest/gtest.h>

#include <json.hpp>
#include <sstream>

#include "joulebench/data_dir.hpp"
#include "joulebench/errors.hpp"
#include "joulebench/pipeline.hpp"
#include "joulebench/prompt_catalog.hpp"
#include "test_util.hpp"

using namespace joulebench;

namespace fs = std::filesystem;

namespace {

RunConfig offline_config(const fs::path& out) {
  ConfigOverrides o;
  o.offline = true;
  o.out_dir = out;
  return resolve_config(o);
}

int count_lines(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

ProcessResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), JOULEBENCH_CLI_PATH);
  return run_process(args, {{}, 120, {}});
}

}  // namespace

TEST(Pipeline, ListKernelsPrintsThreeSignatures) {
  std::ostringstream out;
  EXPECT_EQ(cmd_list_kernels(out), kExitOk);
  EXPECT_EQ(count_lines(out.str()), 3);
  EXPECT_NE(out.str().find("kernel_entry"), std::string::npos);
  EXPECT_NE(out.str().find("matmul"), std::string::npos);
}

TEST(Pipeline, ExitCodeMapping) {
  EXPECT_EQ(exit_code_for(ConfigError("x")), kExitUsage);
  EXPECT_EQ(exit_code_for(CatalogError("x")), kExitUsage);
  EXPECT_EQ(exit_code_for(ToolchainError("x")), kExitEnvironment);
  EXPECT_EQ(exit_code_for(MeterError("x")), kExitPartial);
}

TEST(Pipeline, GenArm64WritesFourDeterministicSources) {
  jbtest::TempDir a, b;
  for (const auto* dir : {&a, &b}) {
    auto c = offline_config(dir->path());
    c.arch = TargetArch::ARM64;
    std::ostringstream out, err;
    EXPECT_EQ(cmd_gen(c, {out, err}), kExitOk) << err.str();
  }
  int files = 0;
  for (auto kind : kinds_for(TargetArch::ARM64)) {
    const auto pa = generated_source_path(a.path(), KernelId::Dot, kind, TargetArch::ARM64);
    const auto pb = generated_source_path(b.path(), KernelId::Dot, kind, TargetArch::ARM64);
    ASSERT_TRUE(fs::exists(pa)) << pa;
    EXPECT_EQ(jbtest::slurp(pa), jbtest::slurp(pb));
    ++files;
  }
  EXPECT_EQ(files, 4);
  const auto scalar =
      jbtest::slurp(generated_source_path(a.path(), KernelId::Dot, VariantKind::Scalar, TargetArch::ARM64));
  EXPECT_NE(scalar.find("result += a[i] * b[i];"), std::string::npos);
  EXPECT_EQ(count_lines(jbtest::slurp(records_path(a.path()))), 4);
}

TEST(Pipeline, FixtureMissAtStepThreeKeepsEarlierSteps) {
  jbtest::TempDir tmp;
  const auto fixtures = tmp / "fixtures";
  fs::copy(data_dir() / "fixtures", fixtures, fs::copy_options::recursive);
  const auto index = nlohmann::json::parse(jbtest::slurp(fixtures / "index.json"));
  std::string missing;
  for (const auto& [hash, label] : index.items()) {
    if (label.get<std::string>().starts_with("dot step 3 (SimdNeon, ARM64")) missing = hash;
  }
  ASSERT_FALSE(missing.empty());
  fs::remove(fixtures / (missing + ".txt"));

  auto c = offline_config(tmp / "out");
  c.arch = TargetArch::ARM64;
  c.backend.fixture_dir = fixtures;
  std::ostringstream out, err;
  EXPECT_NE(cmd_gen(c, {out, err}), kExitOk);
  EXPECT_NE(err.str().find(missing), std::string::npos);
  EXPECT_TRUE(fs::exists(generated_source_path(c.out_dir, KernelId::Dot, VariantKind::Scalar, c.arch)));
  EXPECT_TRUE(fs::exists(generated_source_path(c.out_dir, KernelId::Dot, VariantKind::OpenMP, c.arch)));
  EXPECT_FALSE(fs::exists(generated_source_path(c.out_dir, KernelId::Dot, VariantKind::SimdNeon, c.arch)));
  EXPECT_FALSE(
      fs::exists(generated_source_path(c.out_dir, KernelId::Dot, VariantKind::OpenMpSimdNeon, c.arch)));
}

TEST(Pipeline, DoctorReportsFixturePowercap) {
  auto c = offline_config("/tmp/unused");
  c.powercap_root = jbtest::data_path("powercap");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_doctor(c, {out, err}), kExitOk);
  const auto s = out.str();
  EXPECT_NE(s.find("rapl domain package-0"), std::string::npos);
  EXPECT_NE(s.find("max_range_uj=262143328850 readable"), std::string::npos);
  EXPECT_NE(s.find("Scalar: available"), std::string::npos);
  EXPECT_NE(s.find("backend: "), std::string::npos);
}

TEST(Cli, ListKernelsAndUsageErrors) {
  auto r = cli({"list-kernels"});
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(count_lines(r.output), 3);
  EXPECT_EQ(cli({}).exit_code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).exit_code, kExitUsage);
  const char* foreign = host_arch() == TargetArch::AMD64 ? "SimdNeon" : "SimdAvx2";
  r = cli({"--offline", "--kind", foreign, "build"});
  EXPECT_EQ(r.exit_code, kExitUsage) << r.output;
  EXPECT_NE(r.output.find("config"), std::string::npos);
}

TEST(Cli, DoctorWithoutCompilerStillSucceeds) {
  auto r = run_process({JOULEBENCH_CLI_PATH, "--offline", "doctor"},
                       {{{kCompilerEnv, "/nonexistent/cc"}}, 60, {}});
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("compiler: NOT FOUND"), std::string::npos);
}

TEST(Cli, BuildWithoutCompilerIsEnvironmentError) {
  jbtest::TempDir tmp;
  auto r = run_process({JOULEBENCH_CLI_PATH, "--offline", "--out", tmp.path().string(), "build"},
                       {{{kCompilerEnv, "/nonexistent/cc"}}, 60, {}});
  EXPECT_EQ(r.exit_code, kExitEnvironment) << r.output;
}

TEST(Cli, ReportReemitsFromJson) {
  jbtest::TempDir tmp;
  Report rep;
  rep.run_id = "r1";
  rep.created_at = "2026-10-16T00:00:00Z";
  rep.host.arch = "AMD64";
  rep.host.energy_method = "none";
  emit(rep, ReportFormat::Json, tmp / "report.json");
  auto r = cli({"report", "--run", tmp.path().string(), "--format", "csv"});
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(jbtest::slurp(tmp / "report.csv"), to_csv(rep));
  EXPECT_NE(cli({"report", "--run", (tmp / "missing").string()}).exit_code, 0);
}
