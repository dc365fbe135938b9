#include "joulebench/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "joulebench/corpus.hpp"
#include "joulebench/data_dir.hpp"
#include "joulebench/errors.hpp"
#include "joulebench/prompt_catalog.hpp"
#include "joulebench/toml_lite.hpp"

namespace joulebench {

namespace fs = std::filesystem;

std::string_view to_string(SourceMode mode) {
  return mode == SourceMode::Corpus ? "corpus" : "generated";
}

std::vector<VariantKind> RunConfig::resolved_kinds() const {
  return kinds.empty() ? kinds_for(arch) : kinds;
}

namespace {

SourceMode parse_source(std::string_view s) {
  if (s == "corpus") return SourceMode::Corpus;
  if (s == "generated") return SourceMode::Generated;
  throw ConfigError("source must be 'corpus' or 'generated', got '" + std::string(s) + "'");
}

std::vector<KernelId> parse_kernels(const std::vector<std::string>& names) {
  std::vector<KernelId> out;
  for (const auto& n : names) out.push_back(parse_kernel_id(n));
  return out;
}

std::vector<VariantKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<VariantKind> out;
  for (const auto& n : names) out.push_back(parse_variant_kind(n));
  return out;
}

class TableReader {
 public:
  TableReader(const toml_lite::Table& t, std::string name, fs::path base)
      : t_(t), name_(std::move(name)), base_(std::move(base)) {}

  void finish() const {
    for (const auto& key : t_.order) {
      if (!used_.count(key)) {
        throw ConfigError("unknown key '" + key + "' in [" + name_ + "] (line " +
                          std::to_string(t_.values.at(key).line) + ")");
      }
    }
  }

  template <typename F>
  void get(const std::string& key, F&& apply) {
    used_.insert(key);
    const auto* v = t_.find(key);
    if (!v) return;
    try {
      apply(*v);
    } catch (const std::exception& e) {
      throw ConfigError("[" + name_ + "] " + key + " (line " + std::to_string(v->line) +
                        "): " + e.what());
    }
  }

  void str(const std::string& key, std::string& out) {
    get(key, [&](const toml_lite::Value& v) { out = v.as_string(); });
  }
  void path(const std::string& key, fs::path& out) {
    get(key, [&](const toml_lite::Value& v) {
      fs::path p = v.as_string();
      out = p.is_relative() ? base_ / p : p;
    });
  }
  template <typename Int>
  void integer(const std::string& key, Int& out) {
    get(key, [&](const toml_lite::Value& v) { out = static_cast<Int>(v.as_int()); });
  }
  void real(const std::string& key, double& out) {
    get(key, [&](const toml_lite::Value& v) { out = v.as_double(); });
  }
  void flag(const std::string& key, bool& out) {
    get(key, [&](const toml_lite::Value& v) { out = v.as_bool(); });
  }

 private:
  const toml_lite::Table& t_;
  std::string name_;
  fs::path base_;
  std::set<std::string> used_;
};

RunConfig apply_document(RunConfig c, const toml_lite::Document& doc, const fs::path& base) {
  if (!doc.root.order.empty()) {
    throw ConfigError("top-level key '" + doc.root.order.front() + "' outside any table");
  }
  if (!doc.table_arrays.empty()) {
    throw ConfigError("unexpected [[" + doc.table_arrays.begin()->first + "]] in config");
  }
  for (const auto& [name, _] : doc.tables) {
    if (name != "run" && name != "backend" && name != "bench" && name != "test") {
      throw ConfigError("unknown table [" + name + "]");
    }
  }
  if (const auto* t = doc.table("run")) {
    TableReader r(*t, "run", base);
    r.get("kernels", [&](const auto& v) { c.kernels = parse_kernels(v.as_string_list()); });
    r.get("kinds", [&](const auto& v) { c.kinds = parse_kinds(v.as_string_list()); });
    r.get("arch", [&](const auto& v) { c.arch = parse_target_arch(v.as_string()); });
    r.get("sizes", [&](const auto& v) { c.sizes = v.as_int_list(); });
    r.get("matmul_sizes", [&](const auto& v) { c.matmul_sizes = v.as_int_list(); });
    r.get("seed", [&](const auto& v) { c.seed = static_cast<std::uint64_t>(v.as_int()); });
    r.path("out", c.out_dir);
    r.get("source", [&](const auto& v) { c.source = parse_source(v.as_string()); });
    r.path("corpus_dir", c.corpus_dir);
    r.finish();
  }
  if (const auto* t = doc.table("backend")) {
    TableReader r(*t, "backend", base);
    r.get("kind", [&](const auto& v) { c.backend.kind = parse_backend_kind(v.as_string()); });
    r.str("endpoint_url", c.backend.endpoint_url);
    r.str("model", c.backend.model_name);
    r.str("api_key_env", c.backend.api_key_env);
    r.path("fixture_dir", c.backend.fixture_dir);
    r.real("timeout_s", c.backend.timeout_s);
    r.integer("max_retries", c.backend.max_retries);
    r.real("backoff_initial_s", c.backend.backoff_initial_s);
    r.real("backoff_factor", c.backend.backoff_factor);
    r.path("catalog", c.catalog_path);
    r.finish();
  }
  if (const auto* t = doc.table("bench")) {
    TableReader r(*t, "bench", base);
    r.integer("warmup_reps", c.warmup_reps);
    r.integer("measured_reps", c.measured_reps);
    r.real("min_measure_time_s", c.min_measure_time_s);
    r.real("sample_interval_s", c.sample_interval_s);
    r.get("threads", [&](const auto& v) { c.threads = static_cast<int>(v.as_int()); });
    r.get("energy", [&](const auto& v) { c.energy = parse_energy_method(v.as_string()); });
    r.real("nominal_power_w", c.nominal_power_w);
    r.path("powercap_root", c.powercap_root);
    r.path("trace", c.trace_path);
    r.finish();
  }
  if (const auto* t = doc.table("test")) {
    TableReader r(*t, "test", base);
    r.integer("seeds", c.test_seeds);
    r.get("sizes", [&](const auto& v) { c.test_sizes = v.as_int_list(); });
    r.finish();
  }
  return c;
}

}  // namespace

RunConfig apply_config_text(RunConfig base, std::string_view toml_text) {
  toml_lite::Document doc;
  try {
    doc = toml_lite::parse(toml_text);
  } catch (const toml_lite::ParseError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return apply_document(std::move(base), doc, fs::current_path());
}

RunConfig resolve_config(const ConfigOverrides& o) {
  RunConfig c;
  if (o.config_path) {
    std::ifstream in(*o.config_path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + o.config_path->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    toml_lite::Document doc;
    try {
      doc = toml_lite::parse(ss.str());
    } catch (const toml_lite::ParseError& e) {
      throw ConfigError(o.config_path->string() + ": " + e.what());
    }
    auto base = fs::absolute(*o.config_path).parent_path();
    c = apply_document(std::move(c), doc, base);
  }

  try {
    if (o.offline) {
      c.offline = true;
      c.backend.kind = BackendKind::Fixture;
    }
    if (o.powercap_root) c.powercap_root = *o.powercap_root;
    if (o.out_dir) c.out_dir = *o.out_dir;
    if (o.seed) c.seed = *o.seed;
    if (!o.kernels.empty()) c.kernels = parse_kernels(o.kernels);
    if (!o.kinds.empty()) c.kinds = parse_kinds(o.kinds);
    if (!o.sizes.empty()) c.sizes = o.sizes;
    if (o.energy) c.energy = parse_energy_method(*o.energy);
    if (o.nominal_power_w) c.nominal_power_w = *o.nominal_power_w;
    if (o.source) c.source = parse_source(*o.source);
  } catch (const SpecError& e) {
    throw ConfigError(e.what());
  }

  if (c.catalog_path.empty()) c.catalog_path = default_catalog_path();
  if (c.backend.fixture_dir.empty()) c.backend.fixture_dir = data_dir() / "fixtures";
  if (c.corpus_dir.empty()) c.corpus_dir = default_corpus_dir();
  validate(c);
  return c;
}

void validate(const RunConfig& c) {
  if (c.kernels.empty()) throw ConfigError("no kernels selected");
  for (auto kind : c.kinds) {
    if (!kind_valid_for(kind, c.arch)) {
      throw ConfigError(std::string(to_string(kind)) + " is not valid for target " +
                        std::string(to_string(c.arch)));
    }
  }
  if (c.sizes.empty() || c.matmul_sizes.empty()) throw ConfigError("no sizes selected");
  for (auto s : c.sizes) {
    if (s < 1) throw ConfigError("sizes must be >= 1, got " + std::to_string(s));
  }
  for (auto s : c.matmul_sizes) {
    if (s < 1) throw ConfigError("sizes must be >= 1, got " + std::to_string(s));
  }
  for (auto s : c.test_sizes) {
    if (s < 1) throw ConfigError("test sizes must be >= 1, got " + std::to_string(s));
  }
  if (c.test_seeds < 1) throw ConfigError("test seeds must be >= 1");
  if (c.warmup_reps < 1) throw ConfigError("warmup_reps must be >= 1");
  if (c.measured_reps < 3) throw ConfigError("measured_reps must be >= 3");
  if (c.min_measure_time_s <= 0) throw ConfigError("min_measure_time_s must be > 0");
  if (c.energy == EnergyMethod::Proxy && !(c.nominal_power_w > 0)) {
    throw ConfigError("proxy energy needs nominal_power_w > 0");
  }
  if (c.energy == EnergyMethod::Trace && c.trace_path.empty()) {
    throw ConfigError("trace energy needs [bench] trace = <csv path>");
  }
  if (c.offline && c.backend.kind != BackendKind::Fixture) {
    throw ConfigError("--offline requires the fixture backend");
  }
  if (c.threads && *c.threads < 1) throw ConfigError("threads must be >= 1");
  try {
    validate(c.backend);
  } catch (const SpecError& e) {
    throw ConfigError(std::string("backend: ") + e.what());
  }
}

}  // namespace joulebench
