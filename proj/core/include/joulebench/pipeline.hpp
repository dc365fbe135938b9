#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "joulebench/benchrunner.hpp"
#include "joulebench/config.hpp"
#include "joulebench/report.hpp"

namespace joulebench {

enum ExitCode : int { kExitOk = 0, kExitPartial = 1, kExitUsage = 2, kExitEnvironment = 3 };

/// Usage/config errors map to 2, a missing toolchain to 3, anything else to 1.
int exit_code_for(const std::exception& e);

struct Console {
  std::ostream& out;
  std::ostream& err;
};

std::filesystem::path generated_source_path(const std::filesystem::path& out_dir, KernelId kernel,
                                            VariantKind kind, TargetArch arch);
std::filesystem::path records_path(const std::filesystem::path& out_dir);
std::filesystem::path work_dir(const std::filesystem::path& out_dir);
std::filesystem::path results_dir(const std::filesystem::path& out_dir, const std::string& run_id);
std::string new_run_id();

/// Correctness workloads for `kernel`: the standard sweep, or config.test_sizes
/// with the same seed scheme.
std::vector<WorkloadSpec> test_workloads(const KernelSpec& kernel, const RunConfig& config);

int cmd_list_kernels(std::ostream& out);
int cmd_gen(const RunConfig& config, Console io);
int cmd_build(const RunConfig& config, Console io);
int cmd_test(const RunConfig& config, Console io);
int cmd_bench(const RunConfig& config, Console io);
/// Re-emits <run_dir>/report.json in the requested formats next to it.
int cmd_report(const std::filesystem::path& run_dir, const std::vector<ReportFormat>& formats,
               Console io);
int cmd_doctor(const RunConfig& config, Console io);

struct BenchRun {
  Report report;
  std::filesystem::path dir;
  std::vector<Measurement> measurements;
  int exit_code = kExitOk;
};

/// probe -> build -> difftest (every variant) -> bench (passing variants
/// only) -> report in all three formats under results/<run_id>/.
BenchRun run_bench_pipeline(const RunConfig& config, Console io);

}  // namespace joulebench
