#include "joulebench/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "joulebench/data_dir.hpp"
#include "joulebench/errors.hpp"
#include "joulebench/toml_lite.hpp"

namespace joulebench {

namespace fs = std::filesystem;

std::string_view to_string(CorpusOrigin origin) {
  return origin == CorpusOrigin::PaperListing ? "paper-listing" : "authored";
}

fs::path default_corpus_dir() { return data_dir() / "corpus"; }

namespace {

std::string field(const toml_lite::Table& t, const char* key) {
  const auto* v = t.find(key);
  if (!v || !v->is_string()) {
    throw CorpusError("manifest entry at line " + std::to_string(t.line) + ": missing string '" +
                      key + "'");
  }
  return v->as_string();
}

}  // namespace

std::vector<CorpusEntry> corpus_manifest(const fs::path& dir) {
  const auto manifest_path = dir / "manifest";
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw CorpusError("cannot read corpus manifest " + manifest_path.string());
  std::ostringstream ss;
  ss << in.rdbuf();

  toml_lite::Document doc;
  try {
    doc = toml_lite::parse(ss.str());
  } catch (const toml_lite::ParseError& e) {
    throw CorpusError(manifest_path.string() + ": " + e.what());
  }
  auto it = doc.table_arrays.find("entry");
  if (it == doc.table_arrays.end()) throw CorpusError(manifest_path.string() + ": no [[entry]] tables");

  std::vector<CorpusEntry> out;
  std::set<std::tuple<KernelId, VariantKind, TargetArch>> seen;
  for (const auto& t : it->second) {
    CorpusEntry e;
    try {
      e.kernel_id = parse_kernel_id(field(t, "kernel"));
      e.kind = parse_variant_kind(field(t, "kind"));
      e.arch = parse_target_arch(field(t, "arch"));
    } catch (const SpecError& err) {
      throw CorpusError("manifest entry at line " + std::to_string(t.line) + ": " + err.what());
    }
    if (!kind_valid_for(e.kind, e.arch)) {
      throw CorpusError("manifest entry at line " + std::to_string(t.line) + ": " +
                        std::string(to_string(e.kind)) + " is not valid for " +
                        std::string(to_string(e.arch)));
    }
    e.relative_path = field(t, "path");
    const std::string expected = std::string(to_string(e.kernel_id)) + "/" +
                                 std::string(slug(e.kind)) + "_" + std::string(slug(e.arch)) + ".c";
    if (e.relative_path != expected) {
      throw CorpusError("manifest path '" + e.relative_path + "' should be '" + expected + "'");
    }
    const auto origin = field(t, "origin");
    if (origin == "paper-listing") {
      e.origin = CorpusOrigin::PaperListing;
    } else if (origin == "authored") {
      e.origin = CorpusOrigin::Authored;
    } else {
      throw CorpusError("manifest entry at line " + std::to_string(t.line) + ": unknown origin '" +
                        origin + "'");
    }
    e.path = dir / e.relative_path;
    if (!fs::is_regular_file(e.path)) {
      throw CorpusError("corpus file listed in manifest is missing: " + e.path.string());
    }
    if (!seen.insert({e.kernel_id, e.kind, e.arch}).second) {
      throw CorpusError("duplicate manifest entry " + expected);
    }
    out.push_back(std::move(e));
  }

  for (const auto& k : builtin_kernels()) {
    for (auto arch : {TargetArch::ARM64, TargetArch::AMD64}) {
      if (!seen.count({k.id, VariantKind::Scalar, arch})) {
        throw CorpusError("corpus lacks a Scalar " + std::string(to_string(k.id)) + " entry for " +
                          std::string(to_string(arch)));
      }
    }
  }
  return out;
}

std::vector<CorpusEntry> entries_for(const std::vector<CorpusEntry>& manifest, TargetArch arch) {
  std::vector<CorpusEntry> out;
  for (const auto& e : manifest) {
    if (e.arch == arch) out.push_back(e);
  }
  return out;
}

const CorpusEntry* find_entry(const std::vector<CorpusEntry>& manifest, KernelId kernel,
                              VariantKind kind, TargetArch arch) {
  for (const auto& e : manifest) {
    if (e.kernel_id == kernel && e.kind == kind && e.arch == arch) return &e;
  }
  return nullptr;
}

std::string read_source(const CorpusEntry& entry) {
  std::ifstream in(entry.path, std::ios::binary);
  if (!in) throw CorpusError("cannot read " + entry.path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

VariantDescriptor to_descriptor(const CorpusEntry& entry) {
  VariantDescriptor d;
  d.kernel_id = entry.kernel_id;
  d.kind = entry.kind;
  d.arch = entry.arch;
  d.source_text = read_source(entry);
  d.source_origin = {SourceOrigin::Kind::Corpus, "corpus/" + entry.relative_path};
  return d;
}

}  // namespace joulebench
