#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "joulebench/build_harness.hpp"
#include "joulebench/kernel_model.hpp"

namespace joulebench {

enum class CorpusOrigin { PaperListing, Authored };
std::string_view to_string(CorpusOrigin origin);

struct CorpusEntry {
  KernelId kernel_id = KernelId::Dot;
  VariantKind kind = VariantKind::Scalar;
  TargetArch arch = TargetArch::AMD64;
  std::string relative_path;  // as listed, e.g. "dot/scalar_amd64.c"
  std::filesystem::path path;
  CorpusOrigin origin = CorpusOrigin::Authored;
};

std::filesystem::path default_corpus_dir();

/// Reads <dir>/manifest. Throws CorpusError when the manifest is malformed,
/// a listed file is missing, a path breaks the <kernel>/<kind>_<arch>.c
/// layout, or a kernel lacks a Scalar entry for either architecture.
std::vector<CorpusEntry> corpus_manifest(const std::filesystem::path& dir = default_corpus_dir());

std::vector<CorpusEntry> entries_for(const std::vector<CorpusEntry>& manifest, TargetArch arch);
const CorpusEntry* find_entry(const std::vector<CorpusEntry>& manifest, KernelId kernel,
                              VariantKind kind, TargetArch arch);

std::string read_source(const CorpusEntry& entry);
VariantDescriptor to_descriptor(const CorpusEntry& entry);

}  // namespace joulebench
