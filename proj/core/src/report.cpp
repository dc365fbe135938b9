#include "joulebench/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "joulebench/errors.hpp"

namespace joulebench {

namespace {

using nlohmann::json;

/// Shortest round-trip decimal form.
std::string num(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string pretty(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string pct(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f%%", v);
  return buf;
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> opt_get(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

json stats_json(const Stats& s) {
  return {{"n_reps", s.n_reps},
          {"median_elapsed_s", s.median_elapsed_s},
          {"mad_elapsed_s", s.mad_elapsed_s},
          {"ci95_lo", s.ci95_lo},
          {"ci95_hi", s.ci95_hi},
          {"median_energy_j", opt(s.median_energy_j)}};
}

Stats stats_from(const json& j) {
  Stats s;
  s.n_reps = j.at("n_reps").get<int>();
  s.median_elapsed_s = j.at("median_elapsed_s").get<double>();
  s.mad_elapsed_s = j.at("mad_elapsed_s").get<double>();
  s.ci95_lo = j.at("ci95_lo").get<double>();
  s.ci95_hi = j.at("ci95_hi").get<double>();
  s.median_energy_j = opt_get<double>(j, "median_energy_j");
  return s;
}

std::string status_of(const ReportRow& row) {
  if (row.failed) return "FAILED";
  return row.kind == VariantKind::Scalar ? "BASELINE" : "PASSED";
}

bool has_energy(const Report& r) { return r.host.energy_method != "none"; }

}  // namespace

Report aggregate(const std::vector<VariantOutcome>& outcomes, const HostInfo& host,
                 std::string run_id, std::string created_at) {
  Report report;
  report.run_id = std::move(run_id);
  report.created_at = std::move(created_at);
  report.host = host;

  for (const auto& o : outcomes) {
    const auto& d = o.descriptor;
    CorrectnessSummary summary;
    summary.workloads = static_cast<int>(o.verdicts.size());
    summary.rtol = o.policy.rtol;
    summary.atol = o.policy.atol;
    for (const auto& v : o.verdicts) {
      if (v.passed) ++summary.passed;
      summary.max_abs_err = std::max(summary.max_abs_err, v.max_abs_err);
      summary.max_rel_err = std::max(summary.max_rel_err, v.max_rel_err);
    }
    const bool failed = o.verdicts.empty() || summary.passed != summary.workloads;
    for (auto size : o.sizes) {
      ReportRow row;
      row.kernel = d.kernel_id;
      row.size = size;
      row.kind = d.kind;
      row.failed = failed;
      row.correctness = summary;
      row.provenance = (d.source_origin.kind == SourceOrigin::Kind::Llm ? "llm:" : "corpus:") +
                       d.source_origin.ref;
      if (!failed) {
        auto it = std::ranges::find_if(o.stats, [&](const auto& p) { return p.first == size; });
        if (it == o.stats.end()) {
          throw ReportError(std::string(to_string(d.kernel_id)) + "/" +
                            std::string(to_string(d.kind)) + " passed correctness but has no " +
                            "statistics for size " + std::to_string(size));
        }
        row.stats = it->second;
      }
      report.rows.push_back(std::move(row));
    }
  }

  std::ranges::sort(report.rows, [](const ReportRow& a, const ReportRow& b) {
    return std::tuple(a.kernel, a.size, a.kind) < std::tuple(b.kernel, b.size, b.kind);
  });

  std::map<std::pair<KernelId, std::int64_t>, const ReportRow*> baselines;
  for (const auto& row : report.rows) {
    if (row.kind == VariantKind::Scalar && row.stats) baselines[{row.kernel, row.size}] = &row;
  }
  for (auto& row : report.rows) {
    if (row.kind == VariantKind::Scalar || !row.stats) continue;
    auto it = baselines.find({row.kernel, row.size});
    if (it == baselines.end()) {
      throw ReportError("no Scalar baseline for (" + std::string(to_string(row.kernel)) + ", " +
                        std::to_string(row.size) + ")");
    }
    const auto& base = *it->second->stats;
    row.latency_savings_pct = percent_change(base, *row.stats, Metric::Elapsed);
    if (base.median_energy_j && row.stats->median_energy_j) {
      row.energy_savings_pct = percent_change(base, *row.stats, Metric::Energy);
    }
  }
  return report;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "json") return ReportFormat::Json;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  throw SpecError("unknown report format '" + std::string(s) + "' (json, csv, markdown)");
}

std::string_view extension(ReportFormat format) {
  switch (format) {
    case ReportFormat::Json: return "json";
    case ReportFormat::Csv: return "csv";
    case ReportFormat::Markdown: return "md";
  }
  return "";
}

std::string to_json(const Report& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"kernel", std::string(to_string(row.kernel))},
                    {"size", row.size},
                    {"kind", std::string(to_string(row.kind))},
                    {"status", status_of(row)},
                    {"stats", row.stats ? stats_json(*row.stats) : json(nullptr)},
                    {"latency_savings_pct", opt(row.latency_savings_pct)},
                    {"energy_savings_pct", opt(row.energy_savings_pct)},
                    {"correctness",
                     {{"workloads", row.correctness.workloads},
                      {"passed", row.correctness.passed},
                      {"max_abs_err", row.correctness.max_abs_err},
                      {"max_rel_err", row.correctness.max_rel_err},
                      {"rtol", row.correctness.rtol},
                      {"atol", row.correctness.atol}}},
                    {"provenance", row.provenance}});
  }
  const auto& h = r.host;
  json j = {{"schema_version", r.schema_version},
            {"run_id", r.run_id},
            {"created_at", r.created_at},
            {"host",
             {{"arch", h.arch},
              {"compiler", h.compiler},
              {"openmp_available", h.openmp_available},
              {"energy_method", h.energy_method},
              {"nominal_power_w", h.nominal_power_w},
              {"protocol",
               {{"warmup_reps", h.warmup_reps},
                {"measured_reps", h.measured_reps},
                {"min_measure_time_s", h.min_measure_time_s},
                {"bootstrap_resamples", h.bootstrap_resamples},
                {"seed", h.seed}}}}},
            {"rows", rows},
            {"warnings", r.warnings}};
  // Infinite errors (crashed variants) are not representable in JSON.
  return j.dump(2, ' ', false, json::error_handler_t::strict) + "\n";
}

Report report_from_json(std::string_view text) {
  Report r;
  try {
    const auto j = json::parse(text);
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kReportSchemaVersion) {
      throw ReportError("unsupported report schema_version " + std::to_string(r.schema_version));
    }
    r.run_id = j.at("run_id").get<std::string>();
    r.created_at = j.at("created_at").get<std::string>();
    const auto& h = j.at("host");
    r.host.arch = h.at("arch").get<std::string>();
    r.host.compiler = h.at("compiler").get<std::string>();
    r.host.openmp_available = h.at("openmp_available").get<bool>();
    r.host.energy_method = h.at("energy_method").get<std::string>();
    r.host.nominal_power_w = h.at("nominal_power_w").get<double>();
    const auto& p = h.at("protocol");
    r.host.warmup_reps = p.at("warmup_reps").get<int>();
    r.host.measured_reps = p.at("measured_reps").get<int>();
    r.host.min_measure_time_s = p.at("min_measure_time_s").get<double>();
    r.host.bootstrap_resamples = p.at("bootstrap_resamples").get<int>();
    r.host.seed = p.at("seed").get<std::uint64_t>();
    for (const auto& row : j.at("rows")) {
      ReportRow out;
      out.kernel = parse_kernel_id(row.at("kernel").get<std::string>());
      out.size = row.at("size").get<std::int64_t>();
      out.kind = parse_variant_kind(row.at("kind").get<std::string>());
      out.failed = row.at("status").get<std::string>() == "FAILED";
      if (!row.at("stats").is_null()) out.stats = stats_from(row.at("stats"));
      out.latency_savings_pct = opt_get<double>(row, "latency_savings_pct");
      out.energy_savings_pct = opt_get<double>(row, "energy_savings_pct");
      const auto& c = row.at("correctness");
      out.correctness.workloads = c.at("workloads").get<int>();
      out.correctness.passed = c.at("passed").get<int>();
      out.correctness.max_abs_err = c.at("max_abs_err").get<double>();
      out.correctness.max_rel_err = c.at("max_rel_err").get<double>();
      out.correctness.rtol = c.at("rtol").get<double>();
      out.correctness.atol = c.at("atol").get<double>();
      out.provenance = row.at("provenance").get<std::string>();
      r.rows.push_back(std::move(out));
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ReportError(std::string("malformed report JSON: ") + e.what());
  }
  return r;
}

std::string to_csv(const Report& r) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& row : r.rows) {
    std::vector<std::string> cells = {std::string(to_string(row.kernel)), std::to_string(row.size),
                                      std::string(to_string(row.kind))};
    if (row.stats) {
      cells.push_back(num(row.stats->median_elapsed_s));
      cells.push_back(num(row.stats->mad_elapsed_s));
      cells.push_back(num(row.stats->ci95_lo));
      cells.push_back(num(row.stats->ci95_hi));
      cells.push_back(row.stats->median_energy_j ? num(*row.stats->median_energy_j) : "");
    } else {
      cells.insert(cells.end(), 5, "");
    }
    cells.push_back(row.latency_savings_pct ? num(*row.latency_savings_pct) : "");
    cells.push_back(row.energy_savings_pct ? num(*row.energy_savings_pct) : "");
    cells.push_back(status_of(row));
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  }
  return out;
}

std::string to_markdown(const Report& r) {
  const bool energy = has_energy(r);
  const auto& h = r.host;
  std::ostringstream os;
  os << "# Latency and energy report\n\n"
     << "- run: `" << r.run_id << "` (" << r.created_at << ")\n"
     << "- host: " << h.arch << ", compiler `" << h.compiler << "`, OpenMP "
     << (h.openmp_available ? "available" : "unavailable") << "\n"
     << "- energy method: " << h.energy_method;
  if (h.energy_method == "proxy") os << " (nominal " << pretty(h.nominal_power_w) << " W x elapsed)";
  os << "\n"
     << "- protocol: " << h.warmup_reps << " warmup + " << h.measured_reps
     << " measured reps, each >= " << pretty(h.min_measure_time_s) << " s; 95% CI from "
     << h.bootstrap_resamples << " bootstrap resamples of the median; seed " << h.seed << "\n"
     << "- savings are relative to the Scalar baseline (lower latency/energy is better)\n";
  for (const auto& w : r.warnings) os << "- warning: " << w << "\n";

  for (auto kernel : {KernelId::Dot, KernelId::Axpy, KernelId::Matmul}) {
    std::vector<const ReportRow*> rows;
    for (const auto& row : r.rows) {
      if (row.kernel == kernel) rows.push_back(&row);
    }
    if (rows.empty()) continue;
    os << "\n## " << to_string(kernel) << "\n\n"
       << "| size | kind | status | median (s) | MAD (s) | 95% CI (s) |";
    if (energy) os << " median (J) |";
    os << " latency savings |";
    if (energy) os << " energy savings |";
    os << " max rel err |\n|---:|---|---|---:|---:|---|";
    if (energy) os << "---:|";
    os << "---:|";
    if (energy) os << "---:|";
    os << "---:|\n";
    for (const auto* row : rows) {
      os << "| " << row->size << " | " << to_string(row->kind) << " | " << status_of(*row) << " | ";
      if (row->stats) {
        const auto& s = *row->stats;
        os << pretty(s.median_elapsed_s) << " | " << pretty(s.mad_elapsed_s) << " | ["
           << pretty(s.ci95_lo) << ", " << pretty(s.ci95_hi) << "] |";
        if (energy) os << " " << (s.median_energy_j ? pretty(*s.median_energy_j) : "-") << " |";
      } else {
        os << "- | - | - |";
        if (energy) os << " - |";
      }
      os << " " << (row->latency_savings_pct ? pct(*row->latency_savings_pct) : "-") << " |";
      if (energy) os << " " << (row->energy_savings_pct ? pct(*row->energy_savings_pct) : "-") << " |";
      os << " " << pretty(row->correctness.max_rel_err, 3) << " |\n";
    }
    os << "\nBar-chart data (size vs median seconds):\n\n```csv\nsize,kind,median_s"
       << (energy ? ",median_j" : "") << "\n";
    for (const auto* row : rows) {
      if (!row->stats) continue;
      os << row->size << "," << to_string(row->kind) << "," << num(row->stats->median_elapsed_s);
      if (energy) os << "," << (row->stats->median_energy_j ? num(*row->stats->median_energy_j) : "");
      os << "\n";
    }
    os << "```\n";
  }
  return os.str();
}

void emit(const Report& report, ReportFormat format, const std::filesystem::path& out_path) {
  std::string text;
  switch (format) {
    case ReportFormat::Json: text = to_json(report); break;
    case ReportFormat::Csv: text = to_csv(report); break;
    case ReportFormat::Markdown: text = to_markdown(report); break;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot open " + out_path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw StoreError("write to " + out_path.string() + " failed");
}

Report load_report(const std::filesystem::path& json_path) {
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw StoreError("cannot open " + json_path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return report_from_json(ss.str());
}

}  // namespace joulebench
