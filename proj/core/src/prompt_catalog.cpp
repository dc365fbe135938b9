#include "joulebench/prompt_catalog.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <json.hpp>
#include <set>
#include <sstream>

#include "joulebench/data_dir.hpp"
#include "joulebench/errors.hpp"
#include "joulebench/toml_lite.hpp"

namespace joulebench {

namespace {

bool is_placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

bool known_placeholder(std::string_view name) {
  return std::ranges::find(kPlaceholders, name) != std::end(kPlaceholders);
}

/// Calls `on_placeholder(name)` for each {name} token and `on_text(piece)`
/// for the text between them.
template <typename Text, typename Hole>
void scan_placeholders(std::string_view body, Text on_text, Hole on_placeholder) {
  std::size_t pos = 0;
  while (pos < body.size()) {
    const auto open = body.find('{', pos);
    if (open == std::string_view::npos) break;
    auto close = open + 1;
    while (close < body.size() && is_placeholder_char(body[close])) ++close;
    if (close < body.size() && body[close] == '}' && close > open + 1) {
      on_text(body.substr(pos, open - pos));
      on_placeholder(body.substr(open + 1, close - open - 1));
      pos = close + 1;
    } else {
      on_text(body.substr(pos, open + 1 - pos));
      pos = open + 1;
    }
  }
  on_text(body.substr(pos));
}

std::set<std::string, std::less<>> placeholders_in(std::string_view body) {
  std::set<std::string, std::less<>> out;
  scan_placeholders(body, [](std::string_view) {}, [&](std::string_view p) { out.emplace(p); });
  return out;
}

void validate(const PromptTemplate& t, int line) {
  if (t.id.empty()) throw CatalogError("template id must be non-empty", line, "id");
  if (t.version < 1) throw CatalogError("version must be >= 1", line, "version");
  if (t.step < kFirstStep || t.step > kLastStep) {
    throw CatalogError("step must be in 1..4, got " + std::to_string(t.step), line, "step");
  }
  if (step_for(t.variant_kind) != t.step) {
    throw CatalogError("variant_kind " + std::string(to_string(t.variant_kind)) +
                           " is produced by step " + std::to_string(step_for(t.variant_kind)) +
                           ", not step " + std::to_string(t.step),
                       line, "variant_kind");
  }
  if (uses_simd(t.variant_kind)) {
    if (!t.target_arch || !kind_valid_for(t.variant_kind, *t.target_arch)) {
      throw CatalogError("variant_kind " + std::string(to_string(t.variant_kind)) +
                             " requires a matching target_arch",
                         line, "target_arch");
    }
  }
  const auto used = placeholders_in(t.body);
  for (const auto& p : used) {
    if (!known_placeholder(p)) {
      throw CatalogError("unknown placeholder {" + p + "} in template '" + t.id + "'", line,
                         "body");
    }
  }
  const bool has_prior = used.count("prior_source") != 0;
  if (t.step >= 2 && !has_prior) {
    throw CatalogError("template '" + t.id + "' (step " + std::to_string(t.step) +
                           ") must contain {prior_source}",
                       line, "body");
  }
  if (t.step == 1 && has_prior) {
    throw CatalogError("step-1 template '" + t.id + "' must not use {prior_source}", line, "body");
  }
}

const toml_lite::Value& require(const toml_lite::Table& t, const std::string& key) {
  const auto* v = t.find(key);
  if (!v) throw CatalogError("missing key '" + key + "'", t.line, key);
  return *v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CatalogError("cannot open catalog file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int step_for(VariantKind kind) {
  switch (kind) {
    case VariantKind::Scalar: return 1;
    case VariantKind::OpenMP: return 2;
    case VariantKind::SimdNeon:
    case VariantKind::SimdAvx2: return 3;
    case VariantKind::OpenMpSimdNeon:
    case VariantKind::OpenMpSimdAvx2: return 4;
  }
  return 0;
}

VariantKind kind_for_step(int step, TargetArch arch) {
  const bool arm = arch == TargetArch::ARM64;
  switch (step) {
    case 1: return VariantKind::Scalar;
    case 2: return VariantKind::OpenMP;
    case 3: return arm ? VariantKind::SimdNeon : VariantKind::SimdAvx2;
    case 4: return arm ? VariantKind::OpenMpSimdNeon : VariantKind::OpenMpSimdAvx2;
    default: throw SpecError("step must be in 1..4, got " + std::to_string(step));
  }
}

Catalog::Catalog(std::vector<PromptTemplate> templates) : templates_(std::move(templates)) {}

const PromptTemplate* Catalog::find(VariantKind kind, TargetArch arch) const {
  const PromptTemplate* best = nullptr;
  auto rank = [&](const PromptTemplate& t) { return std::pair{t.target_arch.has_value(), t.version}; };
  for (const auto& t : templates_) {
    if (t.variant_kind != kind) continue;
    if (t.target_arch && *t.target_arch != arch) continue;
    if (!best || rank(t) > rank(*best)) best = &t;
  }
  return best;
}

Catalog parse_catalog(std::string_view text) {
  toml_lite::Document doc;
  try {
    doc = toml_lite::parse(text);
  } catch (const toml_lite::ParseError& e) {
    throw CatalogError(e.what(), e.line());
  }

  std::vector<PromptTemplate> out;
  std::map<std::pair<std::string, int>, int> seen;
  auto it = doc.table_arrays.find("template");
  if (it == doc.table_arrays.end() || it->second.empty()) {
    throw CatalogError("catalog contains no [[template]] blocks");
  }
  for (const auto& t : it->second) {
    PromptTemplate tmpl;
    try {
      tmpl.id = require(t, "id").as_string();
      tmpl.version = static_cast<int>(require(t, "version").as_int());
      tmpl.step = static_cast<int>(require(t, "step").as_int());
      tmpl.variant_kind = parse_variant_kind(require(t, "variant_kind").as_string());
      const auto& arch = require(t, "target_arch").as_string();
      if (arch != "Any" && arch != "any") tmpl.target_arch = parse_target_arch(arch);
      tmpl.body = require(t, "body").as_string();
    } catch (const toml_lite::ParseError& e) {
      throw CatalogError(e.what(), e.line());
    } catch (const SpecError& e) {
      throw CatalogError(e.what(), t.line);
    }
    for (const auto& key : t.order) {
      static const std::set<std::string> allowed = {"id",          "version",     "step",
                                                    "variant_kind", "target_arch", "body"};
      if (!allowed.count(key)) throw CatalogError("unknown key '" + key + "'", t.values.at(key).line, key);
    }
    validate(tmpl, t.line);
    auto [pos, inserted] = seen.emplace(std::pair{tmpl.id, tmpl.version}, t.line);
    if (!inserted) {
      throw CatalogError("duplicate template (" + tmpl.id + ", version " +
                             std::to_string(tmpl.version) + "), first defined on line " +
                             std::to_string(pos->second),
                         t.line, "id");
    }
    out.push_back(std::move(tmpl));
  }
  return Catalog(std::move(out));
}

Catalog load_catalog(const std::filesystem::path& path) { return parse_catalog(read_file(path)); }

std::string serialize_catalog(const Catalog& catalog) {
  toml_lite::Document doc;
  auto& arr = doc.table_arrays["template"];
  for (const auto& t : catalog.templates()) {
    toml_lite::Table table;
    table.set("id", {t.id});
    table.set("version", {std::int64_t{t.version}});
    table.set("step", {std::int64_t{t.step}});
    table.set("variant_kind", {std::string(to_string(t.variant_kind))});
    table.set("target_arch", {t.target_arch ? std::string(to_string(*t.target_arch)) : "Any"});
    table.set("body", {t.body});
    arr.push_back(std::move(table));
  }
  return toml_lite::serialize(doc);
}

std::filesystem::path default_catalog_path() {
  return data_dir() / "catalog" / "default.toml";
}

std::string render_prompt(const PromptTemplate& tmpl, const KernelSpec& kernel, TargetArch arch,
                          const std::optional<std::string>& prior_source) {
  if (tmpl.step >= 2 && !prior_source) {
    throw RenderError("template '" + tmpl.id + "' (step " + std::to_string(tmpl.step) +
                      ") needs the previous step's source");
  }
  if (tmpl.step == 1 && prior_source) {
    throw RenderError("step-1 template '" + tmpl.id + "' takes no prior source");
  }
  if (tmpl.target_arch && *tmpl.target_arch != arch) {
    throw RenderError("template '" + tmpl.id + "' targets " +
                      std::string(to_string(*tmpl.target_arch)) + ", not " +
                      std::string(to_string(arch)));
  }

  std::string out;
  scan_placeholders(
      tmpl.body, [&](std::string_view text) { out += text; },
      [&](std::string_view name) {
        if (name == "kernel_name") {
          out += kernel.name;
        } else if (name == "kernel_description") {
          out += kernel.description;
        } else if (name == "element_type") {
          out += kernel.element_type == ElementType::F32 ? "float" : "double";
        } else if (name == "signature") {
          out += kernel.signature;
        } else if (name == "target_arch") {
          out += to_string(arch);
        } else if (name == "prior_source") {
          out += *prior_source;
        } else {
          throw RenderError("unknown placeholder {" + std::string(name) + "}");
        }
      });
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("hash", "SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

nlohmann::json to_json(const PromptRecord& r) {
  return {{"template_id", r.template_id},
          {"template_version", r.template_version},
          {"rendered_prompt", r.rendered_prompt},
          {"response", r.response},
          {"backend_id", r.backend_id},
          {"model_name", r.model_name},
          {"timestamp", r.timestamp},
          {"prompt_hash", r.prompt_hash},
          {"extracted_source_count", r.extracted_source_count}};
}

PromptRecord from_json(const nlohmann::json& j) {
  PromptRecord r;
  r.template_id = j.at("template_id").get<std::string>();
  r.template_version = j.at("template_version").get<int>();
  r.rendered_prompt = j.at("rendered_prompt").get<std::string>();
  r.response = j.at("response").get<std::string>();
  r.backend_id = j.at("backend_id").get<std::string>();
  r.model_name = j.at("model_name").get<std::string>();
  r.timestamp = j.at("timestamp").get<std::string>();
  r.prompt_hash = j.at("prompt_hash").get<std::string>();
  r.extracted_source_count = j.at("extracted_source_count").get<int>();
  return r;
}

}  // namespace

void record_exchange(const PromptRecord& record, const std::filesystem::path& store_path) {
  std::ofstream out(store_path, std::ios::app | std::ios::binary);
  if (!out) throw StoreError("cannot open record store " + store_path.string() + " for append");
  out << to_json(record).dump() << '\n';
  out.flush();
  if (!out) throw StoreError("write to record store " + store_path.string() + " failed");
}

std::vector<PromptRecord> load_records(const std::filesystem::path& store_path) {
  std::ifstream in(store_path, std::ios::binary);
  if (!in) throw StoreError("cannot open record store " + store_path.string());
  std::vector<PromptRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw StoreError(store_path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace joulebench
