// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any criterion fails.
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "joulebench/benchrunner.hpp"
#include "joulebench/config.hpp"
#include "joulebench/difftest.hpp"
#include "joulebench/energymeter.hpp"
#include "joulebench/errors.hpp"
#include "joulebench/llm_client.hpp"
#include "joulebench/pipeline.hpp"
#include "joulebench/prompt_catalog.hpp"
#include "test_util.hpp"

using namespace joulebench;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

/// Collects failed checks for one criterion.
struct Check {
  std::vector<std::string> failures;
  std::ostringstream note;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// --- offline end-to-end -------------------------------------------------

struct E2eRun {
  ProcessResult process;
  double seconds = 0;
  fs::path results;
};

E2eRun run_offline_bench(const fs::path& out) {
  E2eRun r;
  const auto t0 = std::chrono::steady_clock::now();
  r.process = run_process({JOULEBENCH_CLI_PATH, "--offline", "--out", out.string(), "--seed", "3",
                           "--kernel", "dot", "axpy", "matmul", "bench"},
                          {{}, 600, {}});
  r.seconds = seconds_since(t0);
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(out / "results", ec)) r.results = e.path();
  return r;
}

json masked(json j) {
  j.erase("run_id");
  j.erase("created_at");
  for (auto& row : j["rows"]) {
    row.erase("latency_savings_pct");
    row.erase("energy_savings_pct");
    if (row["stats"].is_object()) {
      for (const char* k : {"median_elapsed_s", "mad_elapsed_s", "ci95_lo", "ci95_hi", "median_energy_j"}) {
        row["stats"].erase(k);
      }
    }
  }
  return j;
}

void offline_e2e(Check& c) {
  jbtest::TempDir tmp;
  const auto a = run_offline_bench(tmp / "a");
  const auto b = run_offline_bench(tmp / "b");
  for (const auto* r : {&a, &b}) {
    c.expect(r->process.ok(), "bench exited " + std::to_string(r->process.exit_code) + ": " +
                                  r->process.output.substr(0, 400));
    c.expect(r->seconds < 300, "run took " + fmt(r->seconds) + " s");
    for (const char* f : {"report.json", "report.csv", "report.md", "measurements.ndjson"}) {
      c.expect(fs::exists(r->results / f), "missing " + (r->results / f).string());
    }
  }
  if (!c.failures.empty()) return;

  const auto ja = json::parse(jbtest::slurp(a.results / "report.json"));
  const auto jb = json::parse(jbtest::slurp(b.results / "report.json"));
  const auto kinds = kinds_for(host_arch());
  const auto& tc = jbtest::toolchain();
  const auto manifest = corpus_manifest();
  std::size_t expected_rows = 0;
  for (auto k : {KernelId::Dot, KernelId::Axpy, KernelId::Matmul}) {
    for (auto kind : kinds) {
      if (tc.supports(kind) && find_entry(manifest, k, kind, host_arch())) ++expected_rows;
    }
  }
  c.expect(ja["rows"].size() == expected_rows,
           "expected " + std::to_string(expected_rows) + " rows, got " + std::to_string(ja["rows"].size()));
  for (const auto& row : ja["rows"]) {
    c.expect(row["status"] != "FAILED", "variant failed: " + row["kernel"].get<std::string>() + "/" +
                                            row["kind"].get<std::string>());
  }
  c.expect(ja["run_id"] != jb["run_id"], "run ids should differ");
  c.expect(masked(ja) == masked(jb), "reports differ beyond run_id/timestamps/measured values");
  c.note << ja["rows"].size() << " rows, runs took " << fmt(a.seconds) << " s and " << fmt(b.seconds)
         << " s, masked JSON identical";
}

// --- savings band ----------------------------------------------------------

long physical_cores() {
  const long n = sysconf(_SC_NPROCESSORS_ONLN);
  return n > 0 ? n : 1;
}

void savings_band(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const bool many = physical_cores() >= 4;
  const bool amd = host_arch() == TargetArch::AMD64;
  const VariantKind kind = many ? (amd ? VariantKind::OpenMpSimdAvx2 : VariantKind::OpenMpSimdNeon)
                                : (amd ? VariantKind::SimdAvx2 : VariantKind::SimdNeon);
  const auto& tc = jbtest::toolchain();
  if (!tc.supports(kind)) {
    c.expect(false, std::string(to_string(kind)) + " is not runnable on this host");
    return;
  }
  const auto& dot = kernel_spec(KernelId::Dot);
  BenchPlan::Settings s;
  s.sizes = {std::int64_t{1} << 22};
  s.energy_method = EnergyMethod::Proxy;
  const BenchPlan plan(s);
  MeterContext meter;
  meter.nominal_power_w = 5.0;
  const std::vector<WorkloadSpec> w = {plan.workload(dot, s.sizes[0])};

  jbtest::TempDir tmp;
  auto stats_for = [&](VariantKind k) {
    const auto art = jbtest::build_corpus(KernelId::Dot, k, tmp.path());
    const auto verdicts = run_correctness(art, dot, w, default_policy(dot, w));
    const auto r = run_bench(art, dot, plan, meter, verdicts);
    return reduce_stats(r.measurements);
  };
  const auto base = stats_for(VariantKind::Scalar);
  const auto var = stats_for(kind);
  const double latency = percent_change(base, var, Metric::Elapsed);
  const double energy = percent_change(base, var, Metric::Energy);
  const double elapsed = seconds_since(t0);
  if (many) {
    c.expect(energy >= 30, "energy savings " + fmt(energy) + "% < 30%");
  } else {
    c.expect(latency >= 25, "latency savings " + fmt(latency) + "% < 25%");
  }
  c.expect(elapsed < 120, "took " + fmt(elapsed) + " s");
  c.note << physical_cores() << " core(s), dot n=2^22 " << to_string(kind) << " vs Scalar: latency "
         << fmt(latency) << "%, energy " << fmt(energy) << "% (threshold "
         << (many ? "energy >= 30%" : "latency >= 25%") << ", " << fmt(elapsed) << " s)";
}

// --- oracle / differential suite --------------------------------------------

void oracle_suite(Check& c) {
  const auto& tc = jbtest::toolchain();
  const auto manifest = corpus_manifest();
  int variants = 0;
  double worst_rel = 0;
  for (auto kernel : {KernelId::Dot, KernelId::Axpy, KernelId::Matmul}) {
    const auto& spec = kernel_spec(kernel);
    const auto sweep = standard_sweep(spec);
    const auto policy = default_policy(spec, sweep);
    for (const auto& e : entries_for(manifest, host_arch())) {
      if (e.kernel_id != kernel || !tc.supports(e.kind)) continue;
      jbtest::TempDir tmp;
      const auto art = jbtest::build(to_descriptor(e), tmp.path());
      const auto v = run_correctness(art, spec, sweep, policy);
      ++variants;
      int passed = 0;
      for (const auto& x : v) {
        passed += x.passed;
        worst_rel = std::max(worst_rel, x.max_rel_err);
      }
      c.expect(passed == static_cast<int>(sweep.size()),
               e.relative_path + " passed " + std::to_string(passed) + "/" + std::to_string(sweep.size()));
    }
  }

  const bool amd = host_arch() == TargetArch::AMD64;
  const auto mutant_kind = amd ? VariantKind::SimdAvx2 : VariantKind::SimdNeon;
  const auto mutant = jbtest::slurp(jbtest::data_path(amd ? "mutants/dot_avx2_no_tail.c"
                                                          : "mutants/dot_neon_no_tail.c"));
  const auto& dot = kernel_spec(KernelId::Dot);
  bool mutant_failed = false;
  if (tc.supports(mutant_kind)) {
    jbtest::TempDir tmp;
    const auto art = jbtest::build(jbtest::descriptor(KernelId::Dot, mutant_kind, mutant), tmp.path());
    std::vector<WorkloadSpec> w;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) w.push_back(square_workload(dot, 1003, seed));
    const auto v = run_correctness(art, dot, w, default_policy(dot, w));
    mutant_failed = !v.empty();
    for (const auto& x : v) mutant_failed = mutant_failed && x.status == VerdictStatus::Failed;
  }
  c.expect(mutant_failed, "dropped-tail mutant was not rejected at n=1003");
  c.note << variants << " corpus variants x 30 workloads passed (max_rel_err " << fmt(worst_rel)
         << "); no-tail mutant failed at n=1003";
}

// --- energy arithmetic --------------------------------------------------------

void energy_arithmetic(Check& c) {
  c.expect(delta_energy(9'500'000, 500'000, 10'000'000) == 1.0, "wrap example != 1.0 J");
  c.expect(delta_energy(4'242, 4'242, 10'000'000) == 0.0, "identity != 0");

  const PowerTrace constant({{0, 7.5}, {1, 7.5}, {2.5, 7.5}, {4, 7.5}});
  const double ci = integrate_trace(constant, 0.3, 3.7);
  c.expect(std::fabs(ci - 7.5 * 3.4) <= 1e-9 * 7.5 * 3.4, "constant trace integral " + fmt(ci));
  const PowerTrace ramp({{0, 0}, {1, 2}, {2, 4}, {3, 6}});  // p = 2t
  const double li = integrate_trace(ramp, 0.5, 2.5);        // t^2 over [0.5, 2.5]
  c.expect(std::fabs(li - 6.0) <= 1e-9 * 6.0, "linear trace integral " + fmt(li));

  // Proxy and trace agree exactly for constant power.
  const double p = 5.0, dt = 0.37;
  const PowerTrace flat({{0, p}, {10, p}});
  c.expect(proxy_energy(p, dt).joules == integrate_trace(flat, 0, dt), "proxy/trace mismatch");

  // Counter with a mid-session wrap: 300 uJ per read, modulus 10^4, starting near the top.
  std::uint64_t value = 9'000;
  int reads = 0;
  SamplingSession session(
      [&] {
        ++reads;
        const auto v = value;
        value = (value + 300) % 10'000;
        return v;
      },
      10'000, 0.005);
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  const auto samples = session.stop();
  bool monotone = samples.size() >= 5;
  double cumulative = 0;
  bool wrapped = false;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    monotone = monotone && samples[i].t > samples[i - 1].t;
    wrapped = wrapped || samples[i].e_uj < samples[i - 1].e_uj;
    const double next = cumulative + delta_energy(samples[i - 1].e_uj, samples[i].e_uj, 10'000);
    monotone = monotone && next >= cumulative;
    cumulative = next;
  }
  c.expect(monotone, "session samples not monotone");
  c.expect(wrapped, "session did not cross the counter wrap");
  c.expect(std::fabs(cumulative - 300e-6 * static_cast<double>(samples.size() - 1)) < 1e-12,
           "session energy across wrap " + fmt(cumulative));

  // Static fixture counter: monotone timestamps, zero energy.
  const auto domains = discover_rapl_domains(jbtest::data_path("powercap"));
  if (!domains.empty()) {
    auto s = sample_session(domains[0], 0.005);
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    const auto fs_samples = s->stop();
    c.expect(fs_samples.size() >= 2, "fixture session too short");
    c.expect(session_energy(fs_samples, domains[0].max_range_uj) == 0.0, "fixture session energy != 0");
  } else {
    c.expect(false, "no fixture domains");
  }
  c.note << "wrap 1.0 J, identity 0, trapezoid exact, proxy==trace, " << samples.size()
         << " samples across a wrap";
}

// --- statistics -------------------------------------------------------------------

void statistics(Check& c) {
  c.expect(median({1, 2, 100}) == 2.0, "median([1,2,100]) != 2");
  c.expect(mad({1, 2, 100}) == 1.0, "mad([1,2,100]) != 1");
  const auto ci = bootstrap_median_ci({0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 10.0, 0.95}, kDefaultBootstrapSeed);
  c.expect(ci.lo == 0.95 && ci.hi == 1.5, "bootstrap CI [" + fmt(ci.lo) + ", " + fmt(ci.hi) +
                                              "] != pinned [0.95, 1.5]");
  Stats base, v70, v0, vm20;
  base.median_elapsed_s = 10;
  v70.median_elapsed_s = 3;
  v0.median_elapsed_s = 10;
  vm20.median_elapsed_s = 12;
  c.expect(std::fabs(percent_change(base, v70, Metric::Elapsed) - 70) < 1e-12, "70% case");
  c.expect(percent_change(base, v0, Metric::Elapsed) == 0, "0% case");
  c.expect(std::fabs(percent_change(base, vm20, Metric::Elapsed) + 20) < 1e-12, "-20% case");
  c.note << "median/MAD 2/1, CI [0.95, 1.5], percent_change 70/0/-20";
}

// --- fixture determinism -------------------------------------------------------------

void fixture_determinism(Check& c) {
  jbtest::TempDir a, b;
  int files = 0;
  for (const auto* dir : {&a, &b}) {
    ConfigOverrides o;
    o.offline = true;
    o.out_dir = dir->path();
    o.kernels = {"dot"};
    const auto cfg = resolve_config(o);
    std::ostringstream out, err;
    c.expect(cmd_gen(cfg, {out, err}) == kExitOk, "gen failed: " + err.str());
  }
  for (auto kind : kinds_for(host_arch())) {
    const auto pa = generated_source_path(a.path(), KernelId::Dot, kind, host_arch());
    const auto pb = generated_source_path(b.path(), KernelId::Dot, kind, host_arch());
    c.expect(fs::exists(pa) && jbtest::slurp(pa) == jbtest::slurp(pb),
             "sources differ: " + pa.filename().string());
    ++files;
  }

  BackendConfig cfg;
  cfg.fixture_dir = a.path();
  const std::string prompt = "a prompt with no fixture";
  try {
    request_completion(cfg, prompt);
    c.expect(false, "no FixtureMissError");
  } catch (const FixtureMissError& e) {
    c.expect(e.prompt_hash() == prompt_hash(prompt), "miss carries the wrong hash");
    c.expect(std::string(e.what()).find(prompt_hash(prompt)) != std::string::npos,
             "miss message lacks the hash");
  }
  c.note << files << " sources byte-identical across two gen runs; FixtureMissError carries the hash";
}

// --- RAPL fixture ---------------------------------------------------------------------

void rapl_fixture(Check& c) {
  const auto d = discover_rapl_domains(jbtest::data_path("powercap"));
  std::vector<std::string> names;
  for (const auto& x : d) names.push_back(x.name);
  c.expect(names == std::vector<std::string>{"package-0", "core", "uncore", "package-1"},
           "unexpected domain list");
  bool moduli = d.size() == 4;
  for (const auto& x : d) moduli = moduli && x.max_range_uj == 262143328850u;
  c.expect(moduli, "unexpected moduli");
  try {
    discover_rapl_domains(jbtest::data_path("powercap_missing_range"));
    c.expect(false, "missing max_energy_range_uj accepted");
  } catch (const MeterError&) {
  }
  c.note << "domains package-0, core, uncore, package-1 (modulus 262143328850); missing range -> MeterError";
}

// --- corpus validity (secondary) -------------------------------------------------------

void corpus_validity(Check& c) {
  const auto& tc = jbtest::toolchain();
  int built = 0;
  for (const auto& e : entries_for(corpus_manifest(), host_arch())) {
    if (!tc.supports(e.kind)) continue;
    jbtest::TempDir tmp;
    try {
      jbtest::build(to_descriptor(e), tmp.path());
      ++built;
    } catch (const Error& err) {
      c.expect(false, e.relative_path + ": " + err.what());
    }
  }
  jbtest::TempDir tmp;
  const auto art = jbtest::build_corpus(KernelId::Dot, VariantKind::Scalar, tmp.path());
  KernelInputs in;
  in.arrays = {{1, 2, 3, 4}, {4, 3, 2, 1}};
  const auto out = jbtest::call_in_child(art.object_path, kernel_spec(KernelId::Dot), in, {{"n", 4}});
  c.expect(out.size() == 1 && out[0] == 20.0, "dot([1,2,3,4],[4,3,2,1]) != 20");

  const auto& dot = kernel_spec(KernelId::Dot);
  std::vector<WorkloadSpec> w;
  for (std::int64_t n : {1, 3, 4, 1003}) w.push_back(square_workload(dot, n, 1));
  emit_unit_tests(dot, w, default_policy(dot, w), tmp / "driver.c");
  auto driver_status = [&](const fs::path& impl) {
    const auto exe = (tmp / "driver").string();
    auto r = run_process({tc.compiler_path.string(), "-O2", "-o", exe, (tmp / "driver.c").string(),
                          impl.string(), "-lm"});
    return r.ok() ? run_process({exe}).exit_code : -1;
  };
  const auto manifest = corpus_manifest();
  const auto* scalar = find_entry(manifest, KernelId::Dot, VariantKind::Scalar, host_arch());
  c.expect(driver_status(scalar->path) == 0, "driver fails against the corpus");
  const int stub = driver_status(jbtest::data_path("mutants/dot_always_zero.c"));
  c.expect(stub > 0, "driver does not fail against an always-zero stub");
  c.note << built << " entries build and export kernel_entry; dot=20; driver passes corpus, fails stub";
}

}  // namespace

int main() {
  struct Criterion {
    const char* tier;
    const char* name;
    std::function<void(Check&)> run;
  };
  const std::vector<Criterion> criteria = {
      {"PRIMARY", "offline end-to-end", offline_e2e},
      {"PRIMARY", "savings band", savings_band},
      {"PRIMARY", "oracle/differential suite", oracle_suite},
      {"PRIMARY", "energy arithmetic", energy_arithmetic},
      {"PRIMARY", "statistics", statistics},
      {"PRIMARY", "fixture-backend determinism", fixture_determinism},
      {"PRIMARY", "RAPL fixture parsing", rapl_fixture},
      {"SECONDARY", "corpus validity", corpus_validity},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool ok = c.failures.empty();
    failed += !ok;
    std::cout << (ok ? "PASS" : "FAIL") << " [" << cr.tier << "] " << cr.name << ": ";
    if (ok) {
      std::cout << c.note.str();
    } else {
      for (std::size_t i = 0; i < c.failures.size(); ++i) std::cout << (i ? "; " : "") << c.failures[i];
    }
    std::cout << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
