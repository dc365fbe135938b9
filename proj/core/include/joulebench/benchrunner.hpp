#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "joulebench/build_harness.hpp"
#include "joulebench/difftest.hpp"
#include "joulebench/energymeter.hpp"
#include "joulebench/kernel_model.hpp"

namespace joulebench {

inline constexpr int kDefaultWarmupReps = 3;
inline constexpr int kDefaultMeasuredReps = 5;
inline constexpr double kDefaultMinMeasureTimeS = 0.2;
inline constexpr double kDefaultSampleIntervalS = 0.1;
inline constexpr int kBootstrapResamples = 10000;
inline constexpr std::uint64_t kDefaultBootstrapSeed = 0x5EEDB007u;

class BenchPlan {
 public:
  struct Settings {
    std::vector<std::int64_t> sizes;
    int warmup_reps = kDefaultWarmupReps;
    int measured_reps = kDefaultMeasuredReps;
    double min_measure_time_s = kDefaultMinMeasureTimeS;
    std::uint64_t seed = 1;
    std::optional<int> pin_threads;
    EnergyMethod energy_method = EnergyMethod::None;
  };

  /// Throws SpecError unless measured_reps >= 3, warmup_reps >= 1, sizes is
  /// non-empty with every size >= 1, and min_measure_time_s > 0.
  explicit BenchPlan(Settings settings);

  const Settings& settings() const { return s_; }
  const std::vector<std::int64_t>& sizes() const { return s_.sizes; }
  int warmup_reps() const { return s_.warmup_reps; }
  int measured_reps() const { return s_.measured_reps; }
  double min_measure_time_s() const { return s_.min_measure_time_s; }
  std::uint64_t seed() const { return s_.seed; }
  std::optional<int> pin_threads() const { return s_.pin_threads; }
  EnergyMethod energy_method() const { return s_.energy_method; }

  /// The workload benchmarked at `size`; it must have been verified.
  WorkloadSpec workload(const KernelSpec& kernel, std::int64_t size) const;

 private:
  Settings s_;
};

/// Everything needed to attribute energy to a measurement window.
struct MeterContext {
  double nominal_power_w = 0;          // proxy
  std::vector<RaplDomain> rapl_domains;  // rapl; the first package-* domain is used
  std::optional<PowerTrace> trace;     // trace
  double trace_offset_s = 0;           // trace time = monotonic time - offset
  double sample_interval_s = kDefaultSampleIntervalS;
};

struct Measurement {
  KernelId kernel = KernelId::Dot;
  VariantKind kind = VariantKind::Scalar;
  std::int64_t size = 0;
  int rep_index = 0;
  double elapsed_s = 0;  // per single invocation
  std::optional<EnergyReading> energy;  // per single invocation
  double checksum = 0;
  std::int64_t loop_count = 0;
  double window_start_s = 0;  // monotonic
  double window_end_s = 0;

  std::string variant() const;
  bool operator==(const Measurement&) const = default;
};

struct BenchResult {
  std::vector<Measurement> measurements;
  EnergyMethod energy_method = EnergyMethod::None;  // after any downgrade
  std::vector<std::string> warnings;
};

/// Times `artifact` on every plan size. Refuses (ProtocolError) unless
/// `verdicts` holds a passing verdict for this artifact on each benchmarked
/// workload. Runs in a forked child; energy is attributed in the caller.
BenchResult run_bench(const BuildArtifact& artifact, const KernelSpec& kernel,
                      const BenchPlan& plan, const MeterContext& meter,
                      std::span<const Verdict> verdicts);

/// Sum of outputs and the tolerance it inherits from the elementwise policy.
struct Checksum {
  double value = 0;
  double tolerance = 0;
};
Checksum oracle_checksum(std::span<const double> oracle, const TolerancePolicy& policy);

struct Stats {
  int n_reps = 0;
  double median_elapsed_s = 0;
  double mad_elapsed_s = 0;
  double ci95_lo = 0;
  double ci95_hi = 0;
  std::optional<double> median_energy_j;

  bool operator==(const Stats&) const = default;
};

double median(std::vector<double> values);
/// Median absolute deviation (unscaled).
double mad(const std::vector<double>& values);

struct BootstrapCi {
  double lo = 0;
  double hi = 0;
};
/// Percentile bootstrap of the median with a seeded mt19937_64.
BootstrapCi bootstrap_median_ci(const std::vector<double>& values, std::uint64_t seed,
                                int resamples = kBootstrapResamples);

/// Throws SpecError for fewer than 3 measurements or mixed (kernel, kind, size).
Stats reduce_stats(std::span<const Measurement> ms, std::uint64_t seed = kDefaultBootstrapSeed);

enum class Metric { Elapsed, Energy };

/// 100 * (1 - variant / baseline); positive means savings.
double percent_change(const Stats& baseline, const Stats& variant, Metric metric);

void write_measurements(std::span<const Measurement> ms, const std::filesystem::path& path);
std::vector<Measurement> read_measurements(const std::filesystem::path& path);

}  // namespace joulebench
