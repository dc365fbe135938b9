#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "joulebench/kernel_model.hpp"

namespace joulebench {

/// Name of the function every variant exports.
inline constexpr const char* kEntrySymbol = "kernel_entry";
/// Environment variable that overrides compiler discovery.
inline constexpr const char* kCompilerEnv = "JOULEBENCH_CC";

struct SourceOrigin {
  enum class Kind { Llm, Corpus };
  Kind kind = Kind::Corpus;
  std::string ref;  // prompt hash for Llm, path for Corpus

  bool operator==(const SourceOrigin&) const = default;
};

struct VariantDescriptor {
  KernelId kernel_id = KernelId::Dot;
  VariantKind kind = VariantKind::Scalar;
  TargetArch arch = TargetArch::AMD64;
  std::string source_text;
  SourceOrigin source_origin;
  std::vector<std::string> extra_flags;
};

/// Throws SpecError for an invalid kind/arch pair or empty source.
void validate(const VariantDescriptor& descriptor);

struct BuildArtifact {
  VariantDescriptor descriptor;
  std::filesystem::path object_path;
  std::string compiler_id;  // path plus first line of --version
  std::vector<std::string> flags_used;
  std::vector<std::string> command_line;
  std::string build_log;
  std::string source_hash;
};

struct ToolchainReport {
  bool compiler_found = false;
  std::filesystem::path compiler_path;
  std::string compiler_version;
  bool openmp_available = false;
  TargetArch host_arch = TargetArch::AMD64;
  /// Per kind: the compiler accepted the kind's flags on a probe that uses
  /// one intrinsic of the family (OpenMP kinds also link the runtime).
  std::map<VariantKind, bool> simd_flags_accepted;
  /// Per kind: flags accepted, valid for the host and the CPU executes it.
  std::map<VariantKind, bool> runnable;
  std::vector<std::string> search_attempts;

  std::string compiler_id() const;
  bool supports(VariantKind kind) const;
};

struct CompilerLocation {
  std::filesystem::path path;
  std::vector<std::string> attempts;
};

/// Discovery order: $JOULEBENCH_CC, cc, gcc, clang. Throws ToolchainError
/// listing what was tried.
CompilerLocation find_compiler();

ToolchainReport probe_toolchain();

std::vector<std::string> default_flags(VariantKind kind, TargetArch arch);

/// Flags appended after default ++ extra to produce a loadable object.
inline const std::vector<std::string> kSharedObjectFlags = {"-fPIC", "-shared"};

/// Builds workdir/<kernel>/<kind>/{src,obj,log}. Throws CompileError when
/// the compiler fails and AbiError when the object does not load or lacks
/// kernel_entry.
BuildArtifact compile_variant(const VariantDescriptor& descriptor,
                              const std::filesystem::path& workdir,
                              const ToolchainReport& toolchain);

/// dlopen(RTLD_NOW) + dlsym check run in a child process, so the harness
/// never maps untrusted code. Throws AbiError.
void check_entry_symbol(const std::filesystem::path& object_path);
void check_entry_symbol_named(const std::filesystem::path& object_path, const char* symbol);

}  // namespace joulebench
