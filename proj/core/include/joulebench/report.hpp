#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "joulebench/benchrunner.hpp"
#include "joulebench/build_harness.hpp"
#include "joulebench/difftest.hpp"

namespace joulebench {

inline constexpr int kReportSchemaVersion = 1;

struct HostInfo {
  std::string arch;
  std::string compiler;
  bool openmp_available = false;
  std::string energy_method;  // method actually used
  double nominal_power_w = 0;  // proxy only
  // Protocol parameters, reported with every run.
  int warmup_reps = kDefaultWarmupReps;
  int measured_reps = kDefaultMeasuredReps;
  double min_measure_time_s = kDefaultMinMeasureTimeS;
  int bootstrap_resamples = kBootstrapResamples;
  std::uint64_t seed = 1;

  bool operator==(const HostInfo&) const = default;
};

struct CorrectnessSummary {
  int workloads = 0;
  int passed = 0;
  double max_abs_err = 0;
  double max_rel_err = 0;
  double rtol = 0;
  double atol = 0;

  bool operator==(const CorrectnessSummary&) const = default;
};

struct ReportRow {
  KernelId kernel = KernelId::Dot;
  std::int64_t size = 0;
  VariantKind kind = VariantKind::Scalar;
  bool failed = false;
  std::optional<Stats> stats;  // absent iff failed
  std::optional<double> latency_savings_pct;  // absent for the baseline row
  std::optional<double> energy_savings_pct;   // absent without energy data
  CorrectnessSummary correctness;
  std::string provenance;  // prompt hash or corpus path

  bool operator==(const ReportRow&) const = default;
};

struct Report {
  int schema_version = kReportSchemaVersion;
  std::string run_id;
  std::string created_at;
  HostInfo host;
  std::vector<ReportRow> rows;
  std::vector<std::string> warnings;

  bool operator==(const Report&) const = default;
};

/// Inputs for one variant: its correctness verdicts and per-size stats.
struct VariantOutcome {
  VariantDescriptor descriptor;
  std::vector<std::int64_t> sizes;
  std::vector<Verdict> verdicts;
  TolerancePolicy policy;
  std::vector<std::pair<std::int64_t, Stats>> stats;  // empty when not benchmarked
};

/// Builds a report whose rows are sorted by (kernel, size, kind). Variants
/// with any failing verdict appear FAILED without numbers. Throws
/// ReportError when a benchmarked (kernel, size) lacks a Scalar baseline.
Report aggregate(const std::vector<VariantOutcome>& outcomes, const HostInfo& host,
                 std::string run_id, std::string created_at);

enum class ReportFormat { Json, Csv, Markdown };
ReportFormat parse_report_format(std::string_view s);
std::string_view extension(ReportFormat format);

inline constexpr const char* kCsvHeader =
    "kernel,size,kind,median_s,mad_s,ci95_lo,ci95_hi,median_j,latency_savings_pct,"
    "energy_savings_pct,status";

std::string to_json(const Report& report);
Report report_from_json(std::string_view text);
std::string to_csv(const Report& report);
std::string to_markdown(const Report& report);

void emit(const Report& report, ReportFormat format, const std::filesystem::path& out_path);
Report load_report(const std::filesystem::path& json_path);

}  // namespace joulebench
