#include <CLI11.hpp>

#include <iostream>

#include "joulebench/errors.hpp"
#include "joulebench/pipeline.hpp"

using namespace joulebench;

int main(int argc, char** argv) {
  CLI::App app{"joulebench: generate, verify and measure kernel variants"};
  app.require_subcommand(1);
  app.fallthrough();

  ConfigOverrides o;
  std::string config_path, powercap_root, out_dir, energy, source;
  std::uint64_t seed = 0;
  double nominal_power = 0;
  app.add_option("--config", config_path, "TOML run configuration")->check(CLI::ExistingFile);
  app.add_flag("--offline", o.offline, "use the fixture backend only; never call a live endpoint");
  app.add_option("--powercap-root", powercap_root, "powercap sysfs root (default /sys/class/powercap)");
  app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "workload seed");
  app.add_option("--kernel", o.kernels, "kernel(s): dot, axpy, matmul");
  app.add_option("--kind", o.kinds, "variant kind(s), e.g. scalar openmp simd_avx2");
  app.add_option("--size", o.sizes, "benchmark size(s) for vector kernels");
  app.add_option("--energy", energy, "energy method: rapl, trace, proxy, none");
  auto* power_opt = app.add_option("--nominal-power", nominal_power, "proxy power in watts");
  app.add_option("--source", source, "variant sources: corpus or generated");

  auto* list = app.add_subcommand("list-kernels", "print the builtin kernels");
  auto* gen = app.add_subcommand("gen", "generate variant sources through the prompt chain");
  auto* build = app.add_subcommand("build", "compile variants into shared objects");
  auto* test = app.add_subcommand("test", "differentially test variants against the oracle");
  auto* bench = app.add_subcommand("bench", "verify, time and report all variants");
  auto* report = app.add_subcommand("report", "re-emit a stored report");
  auto* doctor = app.add_subcommand("doctor", "diagnose toolchain, energy counters and backend");

  std::string run_dir;
  std::vector<std::string> formats = {"json", "csv", "markdown"};
  report->add_option("--run", run_dir, "results/<run_id> directory")->required();
  report->add_option("--format", formats, "json, csv and/or markdown");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Console io{std::cout, std::cerr};
  try {
    if (list->parsed()) return cmd_list_kernels(std::cout);
    if (report->parsed()) {
      std::vector<ReportFormat> fs;
      for (const auto& f : formats) fs.push_back(parse_report_format(f));
      return cmd_report(run_dir, fs, io);
    }

    if (!config_path.empty()) o.config_path = config_path;
    if (!powercap_root.empty()) o.powercap_root = powercap_root;
    if (!out_dir.empty()) o.out_dir = out_dir;
    if (seed_opt->count()) o.seed = seed;
    if (!energy.empty()) o.energy = energy;
    if (power_opt->count()) o.nominal_power_w = nominal_power;
    if (!source.empty()) o.source = source;

    if (doctor->parsed()) {
      // Informational: an unusable config still gets a report.
      RunConfig config;
      try {
        config = resolve_config(o);
      } catch (const Error& e) {
        std::cout << "config: " << e.what() << "\n";
        if (o.powercap_root) config.powercap_root = *o.powercap_root;
      }
      return cmd_doctor(config, io);
    }

    const auto config = resolve_config(o);
    if (gen->parsed()) return cmd_gen(config, io);
    if (build->parsed()) return cmd_build(config, io);
    if (test->parsed()) return cmd_test(config, io);
    if (bench->parsed()) return cmd_bench(config, io);
  } catch (const Error& e) {
    std::cerr << e.stage() << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitUsage;
}
