#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "joulebench/benchrunner.hpp"
#include "joulebench/energymeter.hpp"
#include "joulebench/kernel_model.hpp"
#include "joulebench/llm_client.hpp"

namespace joulebench {

enum class SourceMode { Corpus, Generated };
std::string_view to_string(SourceMode mode);

struct RunConfig {
  std::vector<KernelId> kernels = {KernelId::Dot};
  std::vector<VariantKind> kinds;  // empty: every kind valid for `arch`
  TargetArch arch = host_arch();
  std::vector<std::int64_t> sizes = {1 << 20};  // dot, axpy: n
  std::vector<std::int64_t> matmul_sizes = {128};  // square m = n = k
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "joulebench-out";
  SourceMode source = SourceMode::Corpus;
  std::filesystem::path corpus_dir;

  BackendConfig backend;
  std::filesystem::path catalog_path;
  bool offline = false;

  int warmup_reps = kDefaultWarmupReps;
  int measured_reps = kDefaultMeasuredReps;
  double min_measure_time_s = kDefaultMinMeasureTimeS;
  double sample_interval_s = kDefaultSampleIntervalS;
  std::optional<int> threads;
  EnergyMethod energy = EnergyMethod::Proxy;
  double nominal_power_w = 5.0;
  std::filesystem::path powercap_root = "/sys/class/powercap";
  std::filesystem::path trace_path;

  int test_seeds = 5;
  std::vector<std::int64_t> test_sizes;  // empty: the standard sweep

  const std::vector<std::int64_t>& sizes_for(KernelId kernel) const {
    return kernel == KernelId::Matmul ? matmul_sizes : sizes;
  }
  /// Kinds to process: `kinds`, or all kinds valid for `arch`.
  std::vector<VariantKind> resolved_kinds() const;
};

/// Values given on the command line; each set field beats the config file.
struct ConfigOverrides {
  std::optional<std::filesystem::path> config_path;
  bool offline = false;
  std::optional<std::filesystem::path> powercap_root;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> kernels;
  std::vector<std::string> kinds;
  std::vector<std::int64_t> sizes;
  std::optional<std::string> energy;
  std::optional<double> nominal_power_w;
  std::optional<std::string> source;
};

/// Applies a config document's [run], [backend], [bench] and [test] tables
/// on top of `base`. Unknown tables or keys and ill-typed values throw
/// ConfigError.
RunConfig apply_config_text(RunConfig base, std::string_view toml_text);

/// default < file < flags. Relative paths in the file resolve against the
/// file's directory. Validates the result (ConfigError); NEON kinds on an
/// AMD64 target and vice versa are rejected here, before any build.
RunConfig resolve_config(const ConfigOverrides& overrides);

void validate(const RunConfig& config);

}  // namespace joulebench
