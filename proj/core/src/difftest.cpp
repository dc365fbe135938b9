#include "joulebench/difftest.hpp"

#include <signal.h>
#include <string.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "joulebench/errors.hpp"
#include "joulebench/process.hpp"
#include "joulebench/variant_loader.hpp"

namespace joulebench {

namespace {

constexpr double kEpsF32 = std::numeric_limits<float>::epsilon();

int ceil_log2(std::int64_t n) {
  if (n <= 1) return 0;
  return std::bit_width(static_cast<std::uint64_t>(n - 1));
}

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

std::string hex_u64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%016llxULL", static_cast<unsigned long long>(v));
  return buf;
}

std::string sizes_text(const Sizes& sizes) {
  std::string out;
  for (const auto& [k, v] : sizes) {
    if (!out.empty()) out += ' ';
    out += k + "=" + std::to_string(v);
  }
  return out;
}

}  // namespace

bool TolerancePolicy::accepts(double variant, double oracle) const {
  return std::fabs(variant - oracle) <= atol + rtol * std::fabs(oracle);
}

void validate(const TolerancePolicy& policy) {
  if (!(policy.rtol >= 0) || !(policy.atol >= 0)) {
    throw SpecError("tolerances must be non-negative");
  }
  if (policy.rtol == 0 && policy.atol == 0) {
    throw SpecError("rtol and atol cannot both be zero for floating-point kernels");
  }
}

TolerancePolicy default_policy(const KernelSpec& kernel, std::int64_t max_n) {
  if (max_n < 1) throw SpecError("max_n must be >= 1");
  const std::int64_t depth = kernel.id == KernelId::Axpy ? 2 : max_n;
  const double eps =
      kernel.element_type == ElementType::F32 ? kEpsF32 : std::numeric_limits<double>::epsilon();
  TolerancePolicy p;
  p.rtol = 16.0 * eps * ceil_log2(depth);
  switch (kernel.id) {
    case KernelId::Dot: p.atol = 1e-12; break;
    case KernelId::Axpy: p.atol = eps; break;
    case KernelId::Matmul:
      p.atol = std::max(p.rtol * std::sqrt(static_cast<double>(max_n)), 1e-12);
      break;
  }
  return p;
}

TolerancePolicy default_policy(const KernelSpec& kernel, std::span<const WorkloadSpec> workloads) {
  std::int64_t depth = 1;
  for (const auto& w : workloads) {
    depth = std::max(depth, kernel.id == KernelId::Axpy ? w.sizes.at("n")
                                                        : reduction_depth(kernel, w.sizes));
  }
  return default_policy(kernel, depth);
}

std::string_view to_string(VerdictStatus status) {
  switch (status) {
    case VerdictStatus::Passed: return "passed";
    case VerdictStatus::Failed: return "failed";
    case VerdictStatus::Crashed: return "crashed";
  }
  return "?";
}

Verdict compare_outputs(std::span<const double> variant, std::span<const double> oracle,
                        const TolerancePolicy& policy, const WorkloadSpec& workload) {
  Verdict v;
  v.workload = workload;
  if (variant.size() != oracle.size()) {
    v.status = VerdictStatus::Failed;
    v.first_failure_index = std::min(variant.size(), oracle.size());
    v.max_abs_err = v.max_rel_err = std::numeric_limits<double>::infinity();
    v.detail = "output length " + std::to_string(variant.size()) + " != expected " +
               std::to_string(oracle.size());
    return v;
  }
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    const double abs_err = std::fabs(variant[i] - oracle[i]);
    double rel_err = 0;
    if (abs_err != 0 || std::isnan(abs_err)) {
      rel_err = oracle[i] != 0 ? abs_err / std::fabs(oracle[i])
                               : std::numeric_limits<double>::infinity();
    }
    if (std::isnan(abs_err)) {
      v.max_abs_err = v.max_rel_err = std::numeric_limits<double>::infinity();
    } else {
      v.max_abs_err = std::max(v.max_abs_err, abs_err);
      v.max_rel_err = std::max(v.max_rel_err, rel_err);
    }
    if (!v.first_failure_index && !policy.accepts(variant[i], oracle[i])) {
      v.first_failure_index = i;
    }
  }
  v.passed = !v.first_failure_index;
  v.status = v.passed ? VerdictStatus::Passed : VerdictStatus::Failed;
  return v;
}

std::vector<Verdict> run_correctness(const BuildArtifact& artifact, const KernelSpec& kernel,
                                     std::span<const WorkloadSpec> workloads,
                                     const TolerancePolicy& policy,
                                     const CorrectnessOptions& options) {
  if (artifact.descriptor.kernel_id != kernel.id) {
    throw SpecError("artifact implements " + std::string(to_string(artifact.descriptor.kernel_id)) +
                    ", not " + kernel.name);
  }
  auto verdicts = run_correctness(artifact.object_path, kernel, workloads, policy, options);
  for (auto& v : verdicts) v.artifact_hash = artifact.source_hash;
  return verdicts;
}

std::vector<Verdict> run_correctness(const std::filesystem::path& object_path,
                                     const KernelSpec& kernel,
                                     std::span<const WorkloadSpec> workloads,
                                     const TolerancePolicy& policy,
                                     const CorrectnessOptions& options) {
  validate(policy);
  if (workloads.empty()) throw SpecError("run_correctness needs at least one workload");
  check_entry_symbol(object_path);

  std::vector<Verdict> verdicts;
  verdicts.reserve(workloads.size());
  for (const auto& workload : workloads) {
    const auto inputs = generate_inputs(kernel, workload);
    const auto oracle = reference_eval(kernel, inputs, workload.sizes);

    const auto child = run_in_child(
        [&](int fd) {
          LoadedVariant variant(object_path);
          KernelCall call(variant, kernel, inputs, workload.sizes);
          call.invoke();
          const auto out = call.outputs();
          write_all(fd, out.data(), out.size() * sizeof(double));
        },
        options.timeout_s);

    Verdict v;
    v.workload = workload;
    v.max_abs_err = v.max_rel_err = std::numeric_limits<double>::infinity();
    if (child.status == ChildResult::Status::Signaled) {
      v.status = VerdictStatus::Crashed;
      v.detail = std::string("variant crashed with signal ") + std::to_string(child.term_signal) +
                 " (" + ::strsignal(child.term_signal) + ")";
    } else if (child.status == ChildResult::Status::TimedOut) {
      v.status = VerdictStatus::Crashed;
      v.detail = "variant exceeded the " + std::to_string(options.timeout_s) + " s time limit";
    } else if (child.exit_code != 0) {
      v.status = VerdictStatus::Crashed;
      v.detail = "variant process exited with status " + std::to_string(child.exit_code);
    } else {
      std::vector<double> out(child.payload.size() / sizeof(double));
      std::memcpy(out.data(), child.payload.data(), out.size() * sizeof(double));
      v = compare_outputs(out, oracle, policy, workload);
    }
    verdicts.push_back(std::move(v));
  }
  return verdicts;
}

bool all_passed(std::span<const Verdict> verdicts) {
  for (const auto& v : verdicts) {
    if (!v.passed) return false;
  }
  return !verdicts.empty();
}

std::string render_unit_tests(const KernelSpec& kernel, std::span<const WorkloadSpec> workloads,
                              const TolerancePolicy& policy) {
  validate(policy);
  if (workloads.empty()) throw SpecError("emit_unit_tests needs at least one workload");

  std::ostringstream os;
  os << "/*\n"
     << " * Generated unit test for kernel `" << kernel.name << "`.\n"
     << " *\n"
     << " * Links against any variant exporting:\n"
     << " *   " << kernel.signature << ";\n"
     << " * Inputs are regenerated from a SplitMix64 stream (24-bit uniforms scaled to\n"
     << " * [lo, hi]); expected outputs come from the double-accumulating reference\n"
     << " * and are embedded as hex float literals.\n"
     << " *\n"
     << " * Policy: |v - o| <= atol + rtol * |o| elementwise, rtol = " << hex(policy.rtol)
     << ", atol = " << hex(policy.atol) << "\n"
     << " * Workloads:\n";
  for (std::size_t i = 0; i < workloads.size(); ++i) {
    const auto& w = workloads[i];
    os << " *   [" << i << "] seed=" << w.seed << " " << sizes_text(w.sizes)
       << " uniform(" << w.distribution.lo << ", " << w.distribution.hi << ")\n";
  }
  os << " *\n"
     << " * Build: cc -O2 <variant flags> this_file.c variant.c -o unit_test -lm\n"
     << " * Exit status is nonzero on the first policy violation.\n"
     << " */\n"
     << "#include <math.h>\n#include <stdint.h>\n#include <stdio.h>\n#include <stdlib.h>\n\n"
     << kernel.signature << ";\n\n"
     << "static uint64_t rng_state;\n\n"
     << "static uint64_t rng_next(void) {\n"
     << "  uint64_t z = (rng_state += 0x9E3779B97F4A7C15ULL);\n"
     << "  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;\n"
     << "  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;\n"
     << "  return z ^ (z >> 31);\n"
     << "}\n\n"
     << "static float draw(double lo, double hi) {\n"
     << "  volatile double u = (double)(rng_next() >> 40) * 0x1p-24;\n"
     << "  volatile double scaled = (hi - lo) * u;\n"
     << "  float f = (float)(lo + scaled);\n"
     << "  if (f < (float)lo) f = (float)lo;\n"
     << "  if (f > (float)hi) f = (float)hi;\n"
     << "  return f;\n"
     << "}\n\n"
     << "static float* fill(size_t count, double lo, double hi) {\n"
     << "  float* p = (float*)malloc((count ? count : 1) * sizeof(float));\n"
     << "  if (!p) { fprintf(stderr, \"out of memory\\n\"); exit(2); }\n"
     << "  for (size_t i = 0; i < count; ++i) p[i] = draw(lo, hi);\n"
     << "  return p;\n"
     << "}\n\n"
     << "static const double tol_rel = " << hex(policy.rtol) << ";\n"
     << "static const double tol_abs = " << hex(policy.atol) << ";\n\n"
     << "static int check(int workload, size_t index, double got, double want) {\n"
     << "  if (fabs(got - want) <= tol_abs + tol_rel * fabs(want)) return 0;\n"
     << "  fprintf(stderr, \"workload %d: element %zu = %a, expected %a (rtol %a, atol %a)\\n\",\n"
     << "          workload, index, got, want, tol_rel, tol_abs);\n"
     << "  return 1;\n"
     << "}\n\n";

  for (std::size_t i = 0; i < workloads.size(); ++i) {
    const auto inputs = generate_inputs(kernel, workloads[i]);
    const auto expected = reference_eval(kernel, inputs, workloads[i].sizes);
    os << "static const double expected_" << i << "[" << expected.size() << "] = {\n";
    for (std::size_t j = 0; j < expected.size(); ++j) {
      os << (j % 4 == 0 ? "  " : " ") << hex(expected[j]) << ',';
      if (j % 4 == 3 || j + 1 == expected.size()) os << '\n';
    }
    os << "};\n\n";
  }

  os << "int main(void) {\n";
  for (std::size_t i = 0; i < workloads.size(); ++i) {
    const auto& w = workloads[i];
    const auto lo = hex(w.distribution.lo);
    const auto hi = hex(w.distribution.hi);
    os << "  {\n"
       << "    rng_state = " << hex_u64(w.seed) << ";\n";
    switch (kernel.id) {
      case KernelId::Dot:
        os << "    const int64_t n = " << w.sizes.at("n") << ";\n"
           << "    float* a = fill((size_t)n, " << lo << ", " << hi << ");\n"
           << "    float* b = fill((size_t)n, " << lo << ", " << hi << ");\n"
           << "    double got = kernel_entry(a, b, n);\n"
           << "    if (check(" << i << ", 0, got, expected_" << i << "[0])) return 1;\n"
           << "    free(a);\n    free(b);\n";
        break;
      case KernelId::Axpy:
        os << "    const int64_t n = " << w.sizes.at("n") << ";\n"
           << "    float alpha = draw(" << lo << ", " << hi << ");\n"
           << "    float* x = fill((size_t)n, " << lo << ", " << hi << ");\n"
           << "    float* y = fill((size_t)n, " << lo << ", " << hi << ");\n"
           << "    kernel_entry(alpha, x, y, n);\n"
           << "    for (int64_t i = 0; i < n; ++i)\n"
           << "      if (check(" << i << ", (size_t)i, y[i], expected_" << i << "[i])) return 1;\n"
           << "    free(x);\n    free(y);\n";
        break;
      case KernelId::Matmul:
        os << "    const int64_t m = " << w.sizes.at("m") << ", n = " << w.sizes.at("n")
           << ", k = " << w.sizes.at("k") << ";\n"
           << "    float* A = fill((size_t)(m * k), " << lo << ", " << hi << ");\n"
           << "    float* B = fill((size_t)(k * n), " << lo << ", " << hi << ");\n"
           << "    float* C = (float*)malloc((size_t)(m * n) * sizeof(float));\n"
           << "    if (!C) return 2;\n"
           << "    for (int64_t i = 0; i < m * n; ++i) C[i] = NAN;\n"
           << "    kernel_entry(A, B, C, m, n, k);\n"
           << "    for (int64_t i = 0; i < m * n; ++i)\n"
           << "      if (check(" << i << ", (size_t)i, C[i], expected_" << i << "[i])) return 1;\n"
           << "    free(A);\n    free(B);\n    free(C);\n";
        break;
    }
    os << "  }\n";
  }
  os << "  printf(\"" << kernel.name << ": " << workloads.size() << " workload(s) passed\\n\");\n"
     << "  return 0;\n"
     << "}\n";
  return os.str();
}

void emit_unit_tests(const KernelSpec& kernel, std::span<const WorkloadSpec> workloads,
                     const TolerancePolicy& policy, const std::filesystem::path& out_path) {
  const auto text = render_unit_tests(kernel, workloads, policy);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot open " + out_path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw StoreError("write to " + out_path.string() + " failed");
}

std::vector<std::int64_t> standard_sweep_sizes(const KernelSpec& kernel) {
  if (kernel.id == KernelId::Matmul) return {1, 3, 4, 33, 64, 127};
  return {1, 3, 4, 1003, std::int64_t{1} << 16, (std::int64_t{1} << 20) - 1};
}

std::vector<WorkloadSpec> standard_sweep(const KernelSpec& kernel, std::uint64_t base_seed,
                                         int seeds) {
  std::vector<WorkloadSpec> out;
  for (auto size : standard_sweep_sizes(kernel)) {
    for (int s = 0; s < seeds; ++s) {
      out.push_back(square_workload(kernel, size, base_seed + static_cast<std::uint64_t>(s)));
    }
  }
  return out;
}

}  // namespace joulebench
