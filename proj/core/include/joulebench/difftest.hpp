#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "joulebench/build_harness.hpp"
#include "joulebench/kernel_model.hpp"

namespace joulebench {

/// Elementwise acceptance rule |v - o| <= atol + rtol * |o|.
struct TolerancePolicy {
  double rtol = 0;
  double atol = 0;

  bool accepts(double variant, double oracle) const;
  bool operator==(const TolerancePolicy&) const = default;
};

/// Throws SpecError on negative or all-zero tolerances.
void validate(const TolerancePolicy& policy);

/// rtol = 16 * eps_f32 * ceil(log2(depth)). For dot and matmul the depth is
/// `max_n` (pass k for matmul); axpy has depth 2. atol is 1e-12 for dot,
/// eps_f32 for axpy and rtol * sqrt(k) for matmul (floored at 1e-12).
TolerancePolicy default_policy(const KernelSpec& kernel, std::int64_t max_n);

/// Policy for a sweep: default_policy at the sweep's largest reduction depth.
TolerancePolicy default_policy(const KernelSpec& kernel, std::span<const WorkloadSpec> workloads);

enum class VerdictStatus { Passed, Failed, Crashed };

struct Verdict {
  WorkloadSpec workload;
  bool passed = false;
  VerdictStatus status = VerdictStatus::Failed;
  double max_abs_err = 0;
  double max_rel_err = 0;
  std::optional<std::size_t> first_failure_index;  // set iff status == Failed
  std::string detail;                               // crash/timeout description
  std::string artifact_hash;                        // source hash of the checked artifact
};

std::string_view to_string(VerdictStatus status);

/// Compares variant outputs against oracle outputs under `policy`.
Verdict compare_outputs(std::span<const double> variant, std::span<const double> oracle,
                        const TolerancePolicy& policy, const WorkloadSpec& workload);

struct CorrectnessOptions {
  double timeout_s = 120;  // per workload
};

/// One verdict per workload, in order. Each workload runs in a forked child
/// so a crashing variant yields a Crashed verdict. Throws AbiError when the
/// artifact cannot be loaded.
std::vector<Verdict> run_correctness(const BuildArtifact& artifact, const KernelSpec& kernel,
                                     std::span<const WorkloadSpec> workloads,
                                     const TolerancePolicy& policy,
                                     const CorrectnessOptions& options = {});

/// Same, for an object file that is not wrapped in a BuildArtifact.
std::vector<Verdict> run_correctness(const std::filesystem::path& object_path,
                                     const KernelSpec& kernel,
                                     std::span<const WorkloadSpec> workloads,
                                     const TolerancePolicy& policy,
                                     const CorrectnessOptions& options = {});

bool all_passed(std::span<const Verdict> verdicts);

/// Standalone C test driver for `kernel` with expected outputs embedded as
/// hex float literals.
std::string render_unit_tests(const KernelSpec& kernel, std::span<const WorkloadSpec> workloads,
                              const TolerancePolicy& policy);

/// Writes render_unit_tests(...) to `out_path`; throws StoreError on I/O failure.
void emit_unit_tests(const KernelSpec& kernel, std::span<const WorkloadSpec> workloads,
                     const TolerancePolicy& policy, const std::filesystem::path& out_path);

/// Standard correctness sweep: five seeds per size. Vector kernels use
/// {1, 3, 4, 1003, 2^16, 2^20-1}; matmul uses square dims {1, 3, 4, 33, 64, 127}.
std::vector<WorkloadSpec> standard_sweep(const KernelSpec& kernel, std::uint64_t base_seed = 1,
                                         int seeds = 5);
std::vector<std::int64_t> standard_sweep_sizes(const KernelSpec& kernel);

}  // namespace joulebench
