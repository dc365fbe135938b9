#include "joulebench/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "joulebench/corpus.hpp"
#include "joulebench/difftest.hpp"
#include "joulebench/errors.hpp"
#include "joulebench/llm_client.hpp"
#include "joulebench/process.hpp"
#include "joulebench/prompt_catalog.hpp"

namespace joulebench {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const SpecError*>(&e) ||
      dynamic_cast<const CatalogError*>(&e)) {
    return kExitUsage;
  }
  if (dynamic_cast<const ToolchainError*>(&e)) return kExitEnvironment;
  return kExitPartial;
}

fs::path generated_source_path(const fs::path& out_dir, KernelId kernel, VariantKind kind,
                               TargetArch arch) {
  return out_dir / "sources" / std::string(to_string(kernel)) /
         (std::string(slug(kind)) + "_" + std::string(slug(arch)) + ".c");
}

fs::path records_path(const fs::path& out_dir) { return out_dir / "prompt_records.ndjson"; }
fs::path work_dir(const fs::path& out_dir) { return out_dir / "work"; }
fs::path results_dir(const fs::path& out_dir, const std::string& run_id) {
  return out_dir / "results" / run_id;
}

std::string new_run_id() {
  auto stamp = utc_timestamp_now();
  stamp.erase(std::remove_if(stamp.begin(), stamp.end(), [](char c) { return c == '-' || c == ':'; }),
              stamp.end());
  std::random_device rd;
  std::ostringstream os;
  os << stamp << "-" << std::hex << std::setw(6) << std::setfill('0') << (rd() & 0xffffff);
  return os.str();
}

std::vector<WorkloadSpec> test_workloads(const KernelSpec& kernel, const RunConfig& config) {
  if (config.test_sizes.empty()) return standard_sweep(kernel, config.seed, config.test_seeds);
  std::vector<WorkloadSpec> out;
  for (auto size : config.test_sizes) {
    for (int s = 0; s < config.test_seeds; ++s) {
      out.push_back(square_workload(kernel, size, config.seed + static_cast<std::uint64_t>(s)));
    }
  }
  return out;
}

namespace {

std::string label(KernelId kernel, VariantKind kind) {
  return std::string(to_string(kernel)) + "/" + std::string(to_string(kind));
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out.flush()) throw StoreError("write to " + path.string() + " failed");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

/// Kinds in processing order; bench always needs the Scalar baseline.
std::vector<VariantKind> kinds_with_baseline(const RunConfig& config) {
  auto kinds = config.resolved_kinds();
  if (std::ranges::find(kinds, VariantKind::Scalar) == kinds.end()) {
    kinds.insert(kinds.begin(), VariantKind::Scalar);
  }
  std::ranges::sort(kinds);
  return kinds;
}

fs::path hash_sidecar(const fs::path& source) { return fs::path(source.string() + ".prompt_hash"); }

std::string prompt_hash_of_source(const fs::path& source) {
  std::ifstream in(hash_sidecar(source));
  std::string hash;
  if (!(in >> hash)) return "unknown";
  return hash;
}

/// Sources for (kernel, kind) from the corpus or the gen output. Returns
/// nullopt (after a message) when absent.
std::optional<VariantDescriptor> find_source(const RunConfig& config, KernelId kernel,
                                             VariantKind kind,
                                             const std::vector<CorpusEntry>& manifest,
                                             Console io) {
  if (config.source == SourceMode::Corpus) {
    const auto* entry = find_entry(manifest, kernel, kind, config.arch);
    if (!entry) {
      io.err << "source: no corpus entry for " << label(kernel, kind) << " on "
             << to_string(config.arch) << "\n";
      return std::nullopt;
    }
    return to_descriptor(*entry);
  }
  const auto path = generated_source_path(config.out_dir, kernel, kind, config.arch);
  if (!fs::is_regular_file(path)) {
    io.err << "source: " << path.string() << " not found (run `gen` first)\n";
    return std::nullopt;
  }
  VariantDescriptor d;
  d.kernel_id = kernel;
  d.kind = kind;
  d.arch = config.arch;
  d.source_text = read_file(path);
  d.source_origin = {SourceOrigin::Kind::Llm, prompt_hash_of_source(path)};
  return d;
}

struct Candidate {
  KernelSpec kernel;
  VariantDescriptor descriptor;
  std::optional<BuildArtifact> artifact;
  std::vector<Verdict> verdicts;
  TolerancePolicy policy;
};

/// Collects and compiles every requested variant. Problems are reported
/// and flagged in `partial`; a variant that fails to build is kept without
/// an artifact so it can be reported FAILED.
std::vector<Candidate> build_stage(const RunConfig& config, const std::vector<VariantKind>& kinds,
                                   const ToolchainReport& toolchain, Console io, bool& partial) {
  std::vector<CorpusEntry> manifest;
  if (config.source == SourceMode::Corpus) manifest = corpus_manifest(config.corpus_dir);

  std::vector<Candidate> out;
  for (auto kernel_id : config.kernels) {
    const auto& kernel = kernel_spec(kernel_id);
    for (auto kind : kinds) {
      if (!toolchain.supports(kind)) {
        io.err << "build: " << label(kernel_id, kind) << " skipped, toolchain or CPU cannot run "
               << to_string(kind) << "\n";
        partial = true;
        continue;
      }
      auto d = find_source(config, kernel_id, kind, manifest, io);
      if (!d) {
        partial = true;
        continue;
      }
      Candidate c{kernel, std::move(*d), std::nullopt, {}, {}};
      try {
        c.artifact = compile_variant(c.descriptor, work_dir(config.out_dir), toolchain);
        io.out << "built " << label(kernel_id, kind) << " -> " << c.artifact->object_path.string()
               << "\n";
      } catch (const CompileError& e) {
        io.err << "build: " << label(kernel_id, kind) << ": " << e.what() << "\n"
               << e.diagnostics() << "\n";
        partial = true;
      } catch (const AbiError& e) {
        io.err << "abi: " << label(kernel_id, kind) << ": " << e.what() << "\n";
        partial = true;
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

void print_verdicts(const Candidate& c, Console io) {
  const auto& d = c.descriptor;
  const auto passed = std::ranges::count_if(c.verdicts, [](const Verdict& v) { return v.passed; });
  double max_abs = 0, max_rel = 0;
  for (const auto& v : c.verdicts) {
    max_abs = std::max(max_abs, v.max_abs_err);
    max_rel = std::max(max_rel, v.max_rel_err);
  }
  io.out << (all_passed(c.verdicts) ? "PASS " : "FAIL ") << label(d.kernel_id, d.kind) << " "
         << passed << "/" << c.verdicts.size() << " workloads, max_abs_err=" << sci(max_abs)
         << " max_rel_err=" << sci(max_rel) << " (rtol=" << sci(c.policy.rtol)
         << " atol=" << sci(c.policy.atol) << ")\n";
  for (const auto& v : c.verdicts) {
    if (v.passed) continue;
    io.out << "  first failure: n=" << reduction_depth(c.kernel, v.workload.sizes)
           << " seed=" << v.workload.seed << " " << to_string(v.status) << ": " << v.detail << "\n";
    break;
  }
}

void difftest_stage(std::vector<Candidate>& candidates,
                    const std::function<std::vector<WorkloadSpec>(const KernelSpec&)>& workloads,
                    Console io, bool& partial) {
  for (auto& c : candidates) {
    if (!c.artifact) continue;
    const auto ws = workloads(c.kernel);
    c.policy = default_policy(c.kernel, ws);
    try {
      c.verdicts = run_correctness(*c.artifact, c.kernel, ws, c.policy);
    } catch (const AbiError& e) {
      io.err << "abi: " << label(c.descriptor.kernel_id, c.descriptor.kind) << ": " << e.what()
             << "\n";
      partial = true;
      continue;
    }
    print_verdicts(c, io);
    if (!all_passed(c.verdicts)) partial = true;
  }
}

/// Small workloads only, so the embedded expected values stay compact.
std::vector<WorkloadSpec> driver_workloads(const KernelSpec& kernel, const RunConfig& config) {
  const std::int64_t limit = kernel.id == KernelId::Matmul ? 33 : 1003;
  std::vector<WorkloadSpec> out;
  for (auto& w : test_workloads(kernel, config)) {
    if (w.sizes.begin()->second <= limit) out.push_back(std::move(w));
  }
  return out;
}

}  // namespace

int cmd_list_kernels(std::ostream& out) {
  for (const auto& k : builtin_kernels()) {
    out << k.name << "\t" << k.signature << "\n";
  }
  return kExitOk;
}

int cmd_gen(const RunConfig& config, Console io) {
  const auto catalog = load_catalog(config.catalog_path);
  fs::create_directories(config.out_dir);
  int max_step = kFirstStep;
  for (auto kind : config.resolved_kinds()) max_step = std::max(max_step, step_for(kind));

  bool partial = false;
  for (auto kernel_id : config.kernels) {
    const auto& kernel = kernel_spec(kernel_id);
    std::optional<std::string> prior;
    for (int step = kFirstStep; step <= max_step; ++step) {
      const auto kind = kind_for_step(step, config.arch);
      const auto* tmpl = catalog.find(kind, config.arch);
      if (!tmpl) {
        io.err << "gen: " << label(kernel_id, kind) << ": catalog has no template for step " << step
               << " on " << to_string(config.arch) << "\n";
        partial = true;
        break;
      }
      const auto prompt = render_prompt(*tmpl, kernel, config.arch, prior);
      PromptRecord record;
      record.template_id = tmpl->id;
      record.template_version = tmpl->version;
      record.rendered_prompt = prompt;
      record.backend_id = backend_id(config.backend);
      record.model_name = config.backend.model_name;
      record.prompt_hash = prompt_hash(prompt);

      CompletionResult result;
      try {
        result = request_completion(config.backend, prompt);
      } catch (const FixtureMissError& e) {
        io.err << "gen: " << label(kernel_id, kind) << " (step " << step << "): " << e.what()
               << "\n";
        partial = true;
        break;
      } catch (const BackendError& e) {
        io.err << "gen: " << label(kernel_id, kind) << " (step " << step << "): " << e.what();
        if (!e.body_excerpt().empty()) io.err << "\n  response: " << e.body_excerpt();
        io.err << "\n";
        partial = true;
        break;
      }
      record.response = result.raw_response;
      record.timestamp = utc_timestamp_now();
      record.extracted_source_count = static_cast<int>(result.code_blocks.size());
      record_exchange(record, records_path(config.out_dir));

      if (result.code_blocks.empty()) {
        io.err << "gen: " << label(kernel_id, kind) << " (step " << step
               << "): response has no code block; variant skipped\n";
        partial = true;
        break;
      }
      const auto& source = primary_source_block(result.code_blocks).source;
      const auto path = generated_source_path(config.out_dir, kernel_id, kind, config.arch);
      write_file(path, source);
      write_file(hash_sidecar(path), record.prompt_hash + "\n");
      io.out << "wrote " << path.string() << " (prompt " << record.prompt_hash.substr(0, 12)
             << ")\n";
      prior = source;
    }
  }
  return partial ? kExitPartial : kExitOk;
}

int cmd_build(const RunConfig& config, Console io) {
  const auto toolchain = probe_toolchain();
  bool partial = false;
  build_stage(config, config.resolved_kinds(), toolchain, io, partial);
  return partial ? kExitPartial : kExitOk;
}

int cmd_test(const RunConfig& config, Console io) {
  const auto toolchain = probe_toolchain();
  bool partial = false;
  auto candidates = build_stage(config, config.resolved_kinds(), toolchain, io, partial);
  difftest_stage(candidates, [&](const KernelSpec& k) { return test_workloads(k, config); }, io,
                 partial);

  const auto tests_dir = config.out_dir / "tests";
  fs::create_directories(tests_dir);
  for (auto kernel_id : config.kernels) {
    const auto& kernel = kernel_spec(kernel_id);
    const auto ws = driver_workloads(kernel, config);
    const auto driver = tests_dir / (std::string(to_string(kernel_id)) + "_driver.c");
    emit_unit_tests(kernel, ws, default_policy(kernel, ws), driver);
    io.out << "wrote " << driver.string() << "\n";
    for (const auto& c : candidates) {
      if (c.descriptor.kernel_id != kernel_id || !c.artifact) continue;
      const auto exe = tests_dir / (std::string(to_string(kernel_id)) + "_" +
                                    std::string(slug(c.descriptor.kind)));
      std::vector<std::string> cmd = {toolchain.compiler_path.string()};
      for (const auto& f : default_flags(c.descriptor.kind, c.descriptor.arch)) cmd.push_back(f);
      cmd.insert(cmd.end(), {"-o", exe.string(), driver.string(),
                             c.artifact->object_path.string(), "-lm"});
      const auto built = run_process(cmd, {{}, 300, {}});
      if (!built.ok()) {
        io.out << "FAIL driver " << label(kernel_id, c.descriptor.kind) << ": does not compile\n"
               << built.output;
        partial = true;
        continue;
      }
      const auto ran = run_process({exe.string()}, {{}, 300, {}});
      io.out << (ran.ok() ? "PASS" : "FAIL") << " driver " << label(kernel_id, c.descriptor.kind)
             << "\n";
      if (!ran.ok()) {
        io.out << ran.output;
        partial = true;
      }
    }
  }
  return partial ? kExitPartial : kExitOk;
}

BenchRun run_bench_pipeline(const RunConfig& config, Console io) {
  const auto toolchain = probe_toolchain();
  BenchRun run;
  bool partial = false;
  std::vector<std::string> warnings;

  MeterContext meter;
  meter.nominal_power_w = config.nominal_power_w;
  meter.sample_interval_s = config.sample_interval_s;
  if (config.energy == EnergyMethod::Rapl) {
    try {
      meter.rapl_domains = discover_rapl_domains(config.powercap_root);
    } catch (const MeterError& e) {
      warnings.push_back(std::string("RAPL discovery failed: ") + e.what());
    }
  }
  if (config.energy == EnergyMethod::Trace) meter.trace = PowerTrace::load_csv(config.trace_path);

  auto candidates = build_stage(config, kinds_with_baseline(config), toolchain, io, partial);

  // Every variant is verified before anything is timed; the benchmark
  // workloads join the sweep so each measured size has a passing verdict.
  difftest_stage(
      candidates,
      [&](const KernelSpec& k) {
        auto ws = test_workloads(k, config);
        for (auto size : config.sizes_for(k.id)) {
          auto w = square_workload(k, size, config.seed);
          if (std::ranges::find(ws, w) == ws.end()) ws.push_back(std::move(w));
        }
        return ws;
      },
      io, partial);

  std::optional<EnergyMethod> used;
  std::vector<VariantOutcome> outcomes;
  for (const auto& c : candidates) {
    VariantOutcome o;
    o.descriptor = c.descriptor;
    o.sizes = config.sizes_for(c.kernel.id);
    o.verdicts = c.verdicts;
    o.policy = c.policy;
    if (c.artifact && !c.verdicts.empty() && all_passed(c.verdicts)) {
      BenchPlan plan({o.sizes, config.warmup_reps, config.measured_reps, config.min_measure_time_s,
                      config.seed, config.threads, config.energy});
      auto result = run_bench(*c.artifact, c.kernel, plan, meter, c.verdicts);
      if (!used || result.energy_method < *used) used = result.energy_method;
      for (auto& w : result.warnings) {
        if (std::ranges::find(warnings, w) == warnings.end()) warnings.push_back(std::move(w));
      }
      for (auto size : o.sizes) {
        std::vector<Measurement> ms;
        for (const auto& m : result.measurements) {
          if (m.size == size) ms.push_back(m);
        }
        o.stats.emplace_back(size, reduce_stats(ms, config.seed));
      }
      run.measurements.insert(run.measurements.end(), result.measurements.begin(),
                              result.measurements.end());
      io.out << "benchmarked " << label(c.descriptor.kernel_id, c.descriptor.kind) << "\n";
    }
    outcomes.push_back(std::move(o));
  }

  HostInfo host;
  host.arch = std::string(to_string(toolchain.host_arch));
  host.compiler = toolchain.compiler_id();
  host.openmp_available = toolchain.openmp_available;
  const auto method = used.value_or(config.energy);
  host.energy_method = std::string(to_string(method));
  host.nominal_power_w = method == EnergyMethod::Proxy ? config.nominal_power_w : 0.0;
  host.warmup_reps = config.warmup_reps;
  host.measured_reps = config.measured_reps;
  host.min_measure_time_s = config.min_measure_time_s;
  host.seed = config.seed;

  const auto run_id = new_run_id();
  run.report = aggregate(outcomes, host, run_id, utc_timestamp_now());
  run.report.warnings = warnings;
  run.dir = results_dir(config.out_dir, run_id);
  fs::create_directories(run.dir);
  write_measurements(run.measurements, run.dir / "measurements.ndjson");
  for (auto f : {ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown}) {
    const auto path = run.dir / ("report." + std::string(extension(f)));
    emit(run.report, f, path);
    io.out << "wrote " << path.string() << "\n";
  }
  for (const auto& w : warnings) io.err << "warning: " << w << "\n";
  for (const auto& row : run.report.rows) {
    if (row.latency_savings_pct) {
      io.out << label(row.kernel, row.kind) << " n=" << row.size << ": latency savings "
             << std::fixed << std::setprecision(1) << *row.latency_savings_pct << "%"
             << std::defaultfloat << "\n";
    }
  }
  run.exit_code = partial ? kExitPartial : kExitOk;
  return run;
}

int cmd_bench(const RunConfig& config, Console io) { return run_bench_pipeline(config, io).exit_code; }

int cmd_report(const fs::path& run_dir, const std::vector<ReportFormat>& formats, Console io) {
  const auto report = load_report(run_dir / "report.json");
  for (auto f : formats) {
    const auto path = run_dir / ("report." + std::string(extension(f)));
    emit(report, f, path);
    io.out << "wrote " << path.string() << "\n";
  }
  return kExitOk;
}

int cmd_doctor(const RunConfig& config, Console io) {
  auto& out = io.out;
  out << "host arch: " << to_string(host_arch()) << "\n";
  try {
    const auto t = probe_toolchain();
    out << "compiler: " << t.compiler_path.string() << " (" << t.compiler_version << ")\n"
        << "openmp: " << (t.openmp_available ? "available" : "NOT AVAILABLE") << "\n";
    for (auto kind : kAllVariantKinds) {
      out << to_string(kind) << ": ";
      if (t.supports(kind)) {
        out << "available\n";
      } else if (!kind_valid_for(kind, t.host_arch)) {
        out << "not applicable on " << to_string(t.host_arch) << "\n";
      } else {
        out << (t.simd_flags_accepted.at(kind) ? "compiles, CPU lacks support" : "unavailable")
            << "\n";
      }
    }
  } catch (const ToolchainError& e) {
    out << "compiler: NOT FOUND (" << e.what() << ")\n";
    for (auto kind : kAllVariantKinds) out << to_string(kind) << ": unavailable\n";
  }

  out << "powercap root: " << config.powercap_root.string() << "\n";
  try {
    const auto domains = discover_rapl_domains(config.powercap_root);
    if (domains.empty()) out << "rapl: no domains (energy falls back to proxy or none)\n";
    for (const auto& d : domains) {
      out << "rapl domain " << d.name << ": " << d.energy_path.string()
          << " max_range_uj=" << d.max_range_uj;
      try {
        d.read_uj();
        out << " readable\n";
      } catch (const MeterError& e) {
        out << " NOT READABLE (" << e.what() << ")\n";
      }
    }
  } catch (const MeterError& e) {
    out << "rapl: " << e.what() << "\n";
  }

  out << "backend: " << describe_backend(config.backend) << "\n";
  return kExitOk;
}

}  // namespace joulebench
