#include "joulebench/benchrunner.hpp"

#include <stdlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <random>

#include "joulebench/errors.hpp"
#include "joulebench/process.hpp"
#include "joulebench/variant_loader.hpp"

namespace joulebench {

namespace {

constexpr double kBenchTimeoutS = 1800;

/// Fixed-layout record sent from the benchmark child.
struct RepRecord {
  std::int64_t size;
  std::int32_t rep_index;
  std::int32_t pad;
  double t_start;
  double t_end;
  std::int64_t loops;
  double checksum;
};

volatile double g_sink;

double sum(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s;
}

/// Runs `loops` invocations; returns the monotonic window.
std::pair<double, double> timed_loop(KernelCall& call, std::int64_t loops) {
  double acc = 0;
  const double t0 = monotonic_seconds();
  for (std::int64_t i = 0; i < loops; ++i) acc += call.invoke();
  const double t1 = monotonic_seconds();
  g_sink = acc;
  return {t0, t1};
}

void bench_child(int fd, const BuildArtifact& artifact, const KernelSpec& kernel,
                 const BenchPlan& plan, const std::vector<KernelInputs>& inputs) {
  if (plan.pin_threads()) ::setenv("OMP_NUM_THREADS", std::to_string(*plan.pin_threads()).c_str(), 1);
  LoadedVariant variant(artifact.object_path);
  for (std::size_t s = 0; s < plan.sizes().size(); ++s) {
    const auto size = plan.sizes()[s];
    const auto sizes = plan.workload(kernel, size).sizes;
    KernelCall call(variant, kernel, inputs[s], sizes);

    // Warmups double as loop-count calibration.
    std::int64_t loops = 1;
    for (int w = 0; w < plan.warmup_reps(); ++w) {
      call.reset();
      auto [t0, t1] = timed_loop(call, loops);
      const double elapsed = t1 - t0;
      if (elapsed < plan.min_measure_time_s()) {
        const double per_call = std::max(elapsed / static_cast<double>(loops), 1e-9);
        loops = std::max<std::int64_t>(
            loops + 1,
            static_cast<std::int64_t>(std::ceil(1.1 * plan.min_measure_time_s() / per_call)));
      }
    }
    for (int r = 0; r < plan.measured_reps(); ++r) {
      call.reset();
      auto [t0, t1] = timed_loop(call, loops);
      // Grow the loop if this rep still fell short of the minimum window.
      while (t1 - t0 < plan.min_measure_time_s()) {
        loops *= 2;
        call.reset();
        std::tie(t0, t1) = timed_loop(call, loops);
      }
      call.reset();
      call.invoke();
      RepRecord rec{size, r, 0, t0, t1, loops, sum(call.outputs())};
      write_all(fd, &rec, sizeof rec);
    }
  }
}

const RaplDomain* package_domain(const std::vector<RaplDomain>& domains) {
  for (const auto& d : domains) {
    if (d.name.starts_with("package")) return &d;
  }
  return domains.empty() ? nullptr : &domains.front();
}

}  // namespace

BenchPlan::BenchPlan(Settings settings) : s_(std::move(settings)) {
  if (s_.measured_reps < 3) {
    throw SpecError("bench plan needs measured_reps >= 3, got " + std::to_string(s_.measured_reps));
  }
  if (s_.warmup_reps < 1) {
    throw SpecError("bench plan needs warmup_reps >= 1, got " + std::to_string(s_.warmup_reps));
  }
  if (s_.sizes.empty()) throw SpecError("bench plan needs at least one size");
  for (auto size : s_.sizes) {
    if (size < 1) throw SpecError("bench sizes must be >= 1");
  }
  if (!(s_.min_measure_time_s > 0)) throw SpecError("min_measure_time_s must be > 0");
  if (s_.pin_threads && *s_.pin_threads < 1) throw SpecError("pin_threads must be >= 1");
}

WorkloadSpec BenchPlan::workload(const KernelSpec& kernel, std::int64_t size) const {
  return square_workload(kernel, size, s_.seed);
}

std::string Measurement::variant() const {
  return std::string(to_string(kernel)) + "/" + std::string(to_string(kind));
}

Checksum oracle_checksum(std::span<const double> oracle, const TolerancePolicy& policy) {
  Checksum c;
  for (double o : oracle) {
    c.value += o;
    c.tolerance += policy.atol + policy.rtol * std::fabs(o);
  }
  // Summing the outputs in double adds its own rounding.
  c.tolerance += 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(oracle.size()) *
                 [&] {
                   double a = 0;
                   for (double o : oracle) a += std::fabs(o);
                   return a;
                 }();
  return c;
}

BenchResult run_bench(const BuildArtifact& artifact, const KernelSpec& kernel,
                      const BenchPlan& plan, const MeterContext& meter,
                      std::span<const Verdict> verdicts) {
  if (artifact.descriptor.kernel_id != kernel.id) {
    throw SpecError("artifact does not implement " + kernel.name);
  }
  // Never benchmark what has not been verified on the exact inputs.
  std::vector<KernelInputs> inputs;
  std::vector<Checksum> expected;
  for (auto size : plan.sizes()) {
    const auto w = plan.workload(kernel, size);
    const bool verified = std::ranges::any_of(verdicts, [&](const Verdict& v) {
      return v.passed && v.workload == w && v.artifact_hash == artifact.source_hash;
    });
    if (!verified) {
      throw ProtocolError(std::string(to_string(kernel.id)) + "/" +
                          std::string(to_string(artifact.descriptor.kind)) + " has no passing " +
                          "correctness verdict for size " + std::to_string(size) + " seed " +
                          std::to_string(plan.seed()) + "; refusing to benchmark");
    }
    inputs.push_back(generate_inputs(kernel, w));
    const auto oracle = reference_eval(kernel, inputs.back(), w.sizes);
    std::int64_t depth = kernel.id == KernelId::Axpy ? size : reduction_depth(kernel, w.sizes);
    expected.push_back(oracle_checksum(oracle, default_policy(kernel, depth)));
  }

  BenchResult result;
  result.energy_method = plan.energy_method();
  const RaplDomain* domain = nullptr;
  switch (plan.energy_method()) {
    case EnergyMethod::Rapl:
      domain = package_domain(meter.rapl_domains);
      if (domain == nullptr) {
        result.warnings.push_back("energy method rapl requested but no powercap domains were "
                                  "found; reporting latency only");
        result.energy_method = EnergyMethod::None;
      }
      break;
    case EnergyMethod::Trace:
      if (!meter.trace || meter.trace->empty()) {
        result.warnings.push_back("energy method trace requested but no power trace was "
                                  "supplied; reporting latency only");
        result.energy_method = EnergyMethod::None;
      }
      break;
    case EnergyMethod::Proxy:
      if (!(meter.nominal_power_w > 0)) {
        result.warnings.push_back("energy method proxy requested without a positive nominal "
                                  "power; reporting latency only");
        result.energy_method = EnergyMethod::None;
      }
      break;
    case EnergyMethod::None: break;
  }

  // Fork before the sampler thread exists; warmups cover sampler start-up.
  ChildProcess process([&](int fd) { bench_child(fd, artifact, kernel, plan, inputs); });
  std::unique_ptr<SamplingSession> session;
  if (result.energy_method == EnergyMethod::Rapl) {
    session = sample_session(*domain, meter.sample_interval_s);
  }
  const ChildResult child = process.wait(kBenchTimeoutS);
  std::vector<EnergySample> samples;
  if (session) {
    samples = session->stop();
    if (auto err = session->error()) {
      result.warnings.push_back("energy sampling ended early: " + *err);
    }
  }

  if (child.status != ChildResult::Status::Exited || child.exit_code != 0) {
    throw ProtocolError(artifact.descriptor.source_origin.ref + ": benchmark process failed (" +
                        (child.status == ChildResult::Status::Signaled
                             ? "signal " + std::to_string(child.term_signal)
                             : child.status == ChildResult::Status::TimedOut
                                   ? std::string("timeout")
                                   : "exit " + std::to_string(child.exit_code)) +
                        ")");
  }
  const std::size_t count = child.payload.size() / sizeof(RepRecord);
  if (count != plan.sizes().size() * static_cast<std::size_t>(plan.measured_reps())) {
    throw ProtocolError("benchmark process returned " + std::to_string(count) + " records");
  }

  bool warned_energy = false;
  for (std::size_t i = 0; i < count; ++i) {
    RepRecord rec;
    std::memcpy(&rec, child.payload.data() + i * sizeof rec, sizeof rec);
    const std::size_t size_index = i / static_cast<std::size_t>(plan.measured_reps());
    const auto& want = expected[size_index];
    if (!(std::fabs(rec.checksum - want.value) <= want.tolerance)) {
      throw ProtocolError("checksum mismatch for size " + std::to_string(rec.size) + ": got " +
                          std::to_string(rec.checksum) + ", verified value " +
                          std::to_string(want.value));
    }
    Measurement m;
    m.kernel = kernel.id;
    m.kind = artifact.descriptor.kind;
    m.size = rec.size;
    m.rep_index = rec.rep_index;
    m.loop_count = rec.loops;
    m.window_start_s = rec.t_start;
    m.window_end_s = rec.t_end;
    m.elapsed_s = (rec.t_end - rec.t_start) / static_cast<double>(rec.loops);
    m.checksum = rec.checksum;
    const double per_call = 1.0 / static_cast<double>(rec.loops);
    try {
      switch (result.energy_method) {
        case EnergyMethod::Proxy:
          m.energy = proxy_energy(meter.nominal_power_w, m.elapsed_s);
          break;
        case EnergyMethod::Rapl:
          m.energy = EnergyReading{
              window_energy(samples, domain->max_range_uj, rec.t_start, rec.t_end) * per_call,
              EnergyMethod::Rapl, domain->name};
          break;
        case EnergyMethod::Trace:
          m.energy = EnergyReading{integrate_trace(*meter.trace, rec.t_start - meter.trace_offset_s,
                                                   rec.t_end - meter.trace_offset_s) *
                                       per_call,
                                   EnergyMethod::Trace, "trace"};
          break;
        case EnergyMethod::None: break;
      }
    } catch (const MeterError& e) {
      if (!warned_energy) result.warnings.push_back(std::string("energy unavailable: ") + e.what());
      warned_energy = true;
    }
    if (m.elapsed_s <= 0) throw ProtocolError("non-positive elapsed time");
    result.measurements.push_back(std::move(m));
  }
  return result;
}

double median(std::vector<double> values) {
  if (values.empty()) throw SpecError("median of an empty set");
  const auto n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

double mad(const std::vector<double>& values) {
  const double m = median(values);
  std::vector<double> dev;
  dev.reserve(values.size());
  for (double v : values) dev.push_back(std::fabs(v - m));
  return median(std::move(dev));
}

BootstrapCi bootstrap_median_ci(const std::vector<double>& values, std::uint64_t seed,
                                int resamples) {
  if (values.empty()) throw SpecError("bootstrap of an empty set");
  if (resamples < 1) throw SpecError("bootstrap needs at least one resample");
  std::mt19937_64 rng(seed);
  const auto n = values.size();
  std::vector<double> medians;
  medians.reserve(static_cast<std::size_t>(resamples));
  std::vector<double> sample(n);
  for (int r = 0; r < resamples; ++r) {
    for (auto& x : sample) {
      // Multiply-shift index: portable, unlike std::uniform_int_distribution.
      const auto idx = static_cast<std::size_t>(
          (static_cast<unsigned __int128>(rng()) * n) >> 64);
      x = values[idx];
    }
    medians.push_back(median(sample));
  }
  std::ranges::sort(medians);
  const auto b = medians.size();
  const auto lo_idx = static_cast<std::size_t>(std::floor(0.025 * static_cast<double>(b)));
  const auto hi_idx = std::min(b - 1, static_cast<std::size_t>(std::ceil(0.975 * static_cast<double>(b))) - 1);
  return {medians[lo_idx], medians[hi_idx]};
}

Stats reduce_stats(std::span<const Measurement> ms, std::uint64_t seed) {
  if (ms.size() < 3) throw SpecError("reduce_stats needs at least 3 measurements");
  std::vector<double> elapsed;
  std::vector<double> energy;
  for (const auto& m : ms) {
    if (m.kernel != ms[0].kernel || m.kind != ms[0].kind || m.size != ms[0].size) {
      throw SpecError("reduce_stats: measurements mix " + ms[0].variant() + " size " +
                      std::to_string(ms[0].size) + " with " + m.variant() + " size " +
                      std::to_string(m.size));
    }
    elapsed.push_back(m.elapsed_s);
    if (m.energy) energy.push_back(m.energy->joules);
  }
  Stats s;
  s.n_reps = static_cast<int>(ms.size());
  s.median_elapsed_s = median(elapsed);
  s.mad_elapsed_s = mad(elapsed);
  const auto ci = bootstrap_median_ci(elapsed, seed);
  // A percentile interval can exclude the sample median on tiny samples.
  s.ci95_lo = std::min(ci.lo, s.median_elapsed_s);
  s.ci95_hi = std::max(ci.hi, s.median_elapsed_s);
  if (energy.size() == ms.size()) s.median_energy_j = median(energy);
  return s;
}

double percent_change(const Stats& baseline, const Stats& variant, Metric metric) {
  double b = baseline.median_elapsed_s;
  double v = variant.median_elapsed_s;
  if (metric == Metric::Energy) {
    if (!baseline.median_energy_j || !variant.median_energy_j) {
      throw SpecError("percent_change(energy) needs energy medians on both sides");
    }
    b = *baseline.median_energy_j;
    v = *variant.median_energy_j;
  }
  if (b == 0) throw SpecError("percent_change: baseline median is zero");
  return 100.0 * (1.0 - v / b);
}

namespace {

nlohmann::json to_json(const Measurement& m) {
  nlohmann::json j = {{"kernel", to_string(m.kernel)},
                      {"kind", to_string(m.kind)},
                      {"size", m.size},
                      {"rep_index", m.rep_index},
                      {"elapsed_s", m.elapsed_s},
                      {"checksum", m.checksum},
                      {"loop_count", m.loop_count},
                      {"window_start_s", m.window_start_s},
                      {"window_end_s", m.window_end_s}};
  if (m.energy) {
    j["energy"] = {{"joules", m.energy->joules},
                   {"method", to_string(m.energy->method)},
                   {"source", m.energy->source}};
  } else {
    j["energy"] = nullptr;
  }
  return j;
}

Measurement from_json(const nlohmann::json& j) {
  Measurement m;
  m.kernel = parse_kernel_id(j.at("kernel").get<std::string>());
  m.kind = parse_variant_kind(j.at("kind").get<std::string>());
  m.size = j.at("size").get<std::int64_t>();
  m.rep_index = j.at("rep_index").get<int>();
  m.elapsed_s = j.at("elapsed_s").get<double>();
  m.checksum = j.at("checksum").get<double>();
  m.loop_count = j.at("loop_count").get<std::int64_t>();
  m.window_start_s = j.at("window_start_s").get<double>();
  m.window_end_s = j.at("window_end_s").get<double>();
  if (!j.at("energy").is_null()) {
    const auto& e = j["energy"];
    m.energy = EnergyReading{e.at("joules").get<double>(),
                             parse_energy_method(e.at("method").get<std::string>()),
                             e.at("source").get<std::string>()};
  }
  return m;
}

}  // namespace

void write_measurements(std::span<const Measurement> ms, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw StoreError("cannot open " + path.string());
  for (const auto& m : ms) out << to_json(m).dump() << '\n';
  if (!out) throw StoreError("write to " + path.string() + " failed");
}

std::vector<Measurement> read_measurements(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("cannot open " + path.string());
  std::vector<Measurement> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(from_json(nlohmann::json::parse(line)));
  }
  return out;
}

}  // namespace joulebench
