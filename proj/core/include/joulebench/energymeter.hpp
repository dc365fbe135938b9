#pragma once

#include <atomic>
#include <condition_variable>
#include <memory>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace joulebench {

enum class EnergyMethod { Rapl, Trace, Proxy, None };

std::string_view to_string(EnergyMethod method);
EnergyMethod parse_energy_method(std::string_view s);

struct RaplDomain {
  std::string name;  // contents of the `name` file, e.g. package-0
  std::filesystem::path energy_path;
  std::uint64_t max_range_uj = 0;

  /// Current counter value; throws MeterError on read failure or a value
  /// outside [0, max_range_uj).
  std::uint64_t read_uj() const;
};

inline constexpr const char* kDefaultPowercapRoot = "/sys/class/powercap";

/// Domains under `root` following <root>/intel-rapl:<i>[/intel-rapl:<i>:<j>].
/// A missing root yields an empty list.
std::vector<RaplDomain> discover_rapl_domains(const std::filesystem::path& powercap_root);

/// ((after - before) mod max_range) / 1e6, assuming at most one wrap.
double delta_energy(std::uint64_t before_uj, std::uint64_t after_uj, std::uint64_t max_range_uj);

struct EnergyReading {
  double joules = 0;
  EnergyMethod method = EnergyMethod::None;
  std::string source;  // domain name, trace file or "nominal N W"

  bool operator==(const EnergyReading&) const = default;
};

EnergyReading proxy_energy(double avg_power_w, double elapsed_s);

struct PowerPoint {
  double t = 0;  // seconds
  double p = 0;  // watts
  bool operator==(const PowerPoint&) const = default;
};

/// Strictly increasing t, non-negative p (enforced at construction).
class PowerTrace {
 public:
  PowerTrace() = default;
  explicit PowerTrace(std::vector<PowerPoint> points);

  const std::vector<PowerPoint>& points() const { return points_; }
  bool empty() const { return points_.empty(); }
  double start() const { return points_.front().t; }
  double end() const { return points_.back().t; }

  /// Reads the `t_s,p_w` CSV format.
  static PowerTrace parse_csv(std::string_view text);
  static PowerTrace load_csv(const std::filesystem::path& path);
  std::string to_csv() const;

 private:
  std::vector<PowerPoint> points_;
};

/// Trapezoidal integral of power over [t0, t1], interpolating linearly at
/// the window edges. Throws MeterError when the trace does not cover it.
double integrate_trace(const PowerTrace& trace, double t0, double t1);

struct EnergySample {
  double t = 0;  // monotonic seconds
  std::uint64_t e_uj = 0;
  bool operator==(const EnergySample&) const = default;
};

/// Seconds on the system-wide monotonic clock (shared with child processes).
double monotonic_seconds();

/// Energy accumulated between consecutive samples, wrap-corrected.
double session_energy(const std::vector<EnergySample>& samples, std::uint64_t max_range_uj);

/// Energy over [t0, t1] from a sampled counter, interpolating the cumulative
/// energy linearly between samples. Throws MeterError if the samples do not
/// cover the window.
double window_energy(const std::vector<EnergySample>& samples, std::uint64_t max_range_uj,
                     double t0, double t1);

/// Background counter sampler. The reader runs on its own thread until
/// stop(), which joins it and hands over the samples.
class SamplingSession {
 public:
  using CounterReader = std::function<std::uint64_t()>;

  SamplingSession(CounterReader reader, std::uint64_t max_range_uj, double interval_s);
  ~SamplingSession();
  SamplingSession(const SamplingSession&) = delete;
  SamplingSession& operator=(const SamplingSession&) = delete;

  std::uint64_t max_range_uj() const { return max_range_uj_; }

  /// Idempotent. The first call returns the samples; later calls return empty.
  std::vector<EnergySample> stop();
  /// Error that ended the session early, if any.
  std::optional<std::string> error() const;

 private:
  void run();

  CounterReader reader_;
  std::uint64_t max_range_uj_;
  double interval_s_;
  mutable std::mutex mutex_;
  std::condition_variable wake_;
  bool stop_requested_ = false;
  std::vector<EnergySample> samples_;
  std::optional<std::string> error_;
  std::thread thread_;
  bool stopped_ = false;
};

/// Starts sampling `domain`. interval_s must be >= 0.001. The initial read
/// happens before this returns, so a stopped session always holds >= 1 sample
/// unless that read failed.
std::unique_ptr<SamplingSession> sample_session(const RaplDomain& domain, double interval_s);

}  // namespace joulebench
