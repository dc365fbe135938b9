#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "joulebench/kernel_model.hpp"

namespace joulebench {

/// The four generation steps: baseline C, OpenMP, SIMD, OpenMP + SIMD.
inline constexpr int kFirstStep = 1;
inline constexpr int kLastStep = 4;

/// Step that produces `kind` (Scalar 1, OpenMP 2, SIMD 3, combined 4).
int step_for(VariantKind kind);
/// Kind produced by `step` on `arch`.
VariantKind kind_for_step(int step, TargetArch arch);

struct PromptTemplate {
  std::string id;
  int version = 1;
  int step = 1;
  VariantKind variant_kind = VariantKind::Scalar;
  std::optional<TargetArch> target_arch;  // nullopt means any architecture
  std::string body;

  bool operator==(const PromptTemplate&) const = default;
};

class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<PromptTemplate> templates);

  const std::vector<PromptTemplate>& templates() const { return templates_; }

  /// Highest-version template producing `kind` for `arch`; an exact
  /// architecture match wins over an any-architecture template.
  const PromptTemplate* find(VariantKind kind, TargetArch arch) const;

  bool operator==(const Catalog&) const = default;

 private:
  std::vector<PromptTemplate> templates_;
};

/// Placeholders a template body may use.
inline constexpr std::string_view kPlaceholders[] = {
    "kernel_name", "kernel_description", "element_type", "signature", "target_arch",
    "prior_source"};

Catalog parse_catalog(std::string_view text);
Catalog load_catalog(const std::filesystem::path& path);
std::string serialize_catalog(const Catalog& catalog);
std::filesystem::path default_catalog_path();

std::string render_prompt(const PromptTemplate& tmpl, const KernelSpec& kernel, TargetArch arch,
                          const std::optional<std::string>& prior_source);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// Content hash of the exact prompt bytes; keys fixture files.
inline std::string prompt_hash(std::string_view rendered_prompt) { return sha256_hex(rendered_prompt); }

struct PromptRecord {
  std::string template_id;
  int template_version = 0;
  std::string rendered_prompt;
  std::string response;
  std::string backend_id;
  std::string model_name;
  std::string timestamp;  // UTC, RFC 3339
  std::string prompt_hash;
  int extracted_source_count = 0;

  bool operator==(const PromptRecord&) const = default;
};

std::string utc_timestamp_now();

/// Appends one JSON line. Callers serialize concurrent appends.
void record_exchange(const PromptRecord& record, const std::filesystem::path& store_path);
std::vector<PromptRecord> load_records(const std::filesystem::path& store_path);

}  // namespace joulebench
