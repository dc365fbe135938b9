#include "joulebench/build_harness.hpp"

#include <dlfcn.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>

#include "joulebench/errors.hpp"
#include "joulebench/process.hpp"
#include "joulebench/prompt_catalog.hpp"

namespace joulebench {

namespace fs = std::filesystem;

namespace {

constexpr double kCompileTimeoutS = 300;

const char* probe_source(VariantKind kind) {
  switch (kind) {
    case VariantKind::Scalar:
      return "double probe(const float* a, long n) { double s = 0; for (long i = 0; i < n; ++i) "
             "s += a[i]; return s; }\n";
    case VariantKind::OpenMP:
      return "#include <omp.h>\n"
             "int probe(void) { int s = 0;\n"
             "#pragma omp parallel for reduction(+:s)\n"
             "for (int i = 0; i < 8; ++i) s += i;\n"
             "return s + omp_get_max_threads(); }\n";
    case VariantKind::SimdNeon:
      return "#include <arm_neon.h>\n"
             "float32x4_t probe(float32x4_t a, float32x4_t b, float32x4_t c) { return "
             "vmlaq_f32(a, b, c); }\n";
    case VariantKind::SimdAvx2:
      return "#include <immintrin.h>\n"
             "__m256 probe(__m256 a, __m256 b, __m256 c) { return _mm256_fmadd_ps(a, b, c); }\n";
    case VariantKind::OpenMpSimdNeon:
      return "#include <arm_neon.h>\n#include <omp.h>\n"
             "float probe(const float* a) { float32x4_t v = vld1q_f32(a); float s = 0;\n"
             "#pragma omp parallel for reduction(+:s)\n"
             "for (int i = 0; i < 4; ++i) s += vgetq_lane_f32(v, 0);\n"
             "return s + omp_get_max_threads(); }\n";
    case VariantKind::OpenMpSimdAvx2:
      return "#include <immintrin.h>\n#include <omp.h>\n"
             "float probe(const float* a) { __m256 v = _mm256_loadu_ps(a); float s = 0;\n"
             "#pragma omp parallel for reduction(+:s)\n"
             "for (int i = 0; i < 4; ++i) s += _mm256_cvtss_f32(_mm256_fmadd_ps(v, v, v));\n"
             "return s + omp_get_max_threads(); }\n";
  }
  return "";
}

TargetArch native_arch_of(VariantKind kind) {
  switch (kind) {
    case VariantKind::SimdNeon:
    case VariantKind::OpenMpSimdNeon: return TargetArch::ARM64;
    case VariantKind::SimdAvx2:
    case VariantKind::OpenMpSimdAvx2: return TargetArch::AMD64;
    default: return host_arch();
  }
}

bool cpu_executes(VariantKind kind) {
  if (!kind_valid_for(kind, host_arch())) return false;
#if defined(__x86_64__)
  if (kind == VariantKind::SimdAvx2 || kind == VariantKind::OpenMpSimdAvx2) {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }
#endif
  return true;
}

class TempDir {
 public:
  TempDir() {
    auto pattern = (fs::temp_directory_path() / "joulebench-probe-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) throw ToolchainError("cannot create probe directory");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw StoreError("cannot write " + path.string());
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

void validate(const VariantDescriptor& d) {
  if (!kind_valid_for(d.kind, d.arch)) {
    throw SpecError(std::string(to_string(d.kind)) + " is not valid for " +
                    std::string(to_string(d.arch)));
  }
  if (d.source_text.empty()) throw SpecError("variant source text is empty");
}

std::string ToolchainReport::compiler_id() const {
  return compiler_path.string() + " (" + compiler_version + ")";
}

bool ToolchainReport::supports(VariantKind kind) const {
  auto it = runnable.find(kind);
  return it != runnable.end() && it->second;
}

CompilerLocation find_compiler() {
  CompilerLocation loc;
  if (const char* env = std::getenv(kCompilerEnv); env != nullptr && *env != '\0') {
    loc.attempts.push_back(std::string("$") + kCompilerEnv + "=" + env);
    if (auto p = find_in_path(env)) {
      loc.path = *p;
      return loc;
    }
    throw ToolchainError(std::string(kCompilerEnv) + " names '" + env +
                         "', which is not an executable on PATH");
  }
  for (const char* name : {"cc", "gcc", "clang"}) {
    loc.attempts.emplace_back(name);
    if (auto p = find_in_path(name)) {
      loc.path = *p;
      return loc;
    }
  }
  std::string tried;
  for (const auto& a : loc.attempts) tried += (tried.empty() ? "" : ", ") + a;
  throw ToolchainError("no C compiler found (tried " + tried + ")");
}

ToolchainReport probe_toolchain() {
  ToolchainReport report;
  report.host_arch = host_arch();
  const auto loc = find_compiler();
  report.search_attempts = loc.attempts;
  report.compiler_path = loc.path;

  const auto version = run_process({loc.path.string(), "--version"}, {{}, 30, {}});
  if (!version.ok()) {
    throw ToolchainError(loc.path.string() + " --version failed: " + first_line(version.output));
  }
  report.compiler_found = true;
  report.compiler_version = first_line(version.output);

  TempDir tmp;
  for (auto kind : kAllVariantKinds) {
    const auto src = tmp.path() / (std::string(slug(kind)) + ".c");
    const auto obj = tmp.path() / (std::string(slug(kind)) + ".so");
    write_text(src, probe_source(kind));
    std::vector<std::string> cmd = {loc.path.string()};
    for (const auto& f : default_flags(kind, native_arch_of(kind))) cmd.push_back(f);
    cmd.insert(cmd.end(), kSharedObjectFlags.begin(), kSharedObjectFlags.end());
    cmd.insert(cmd.end(), {"-o", obj.string(), src.string()});
    bool ok = run_process(cmd, {{}, 120, {}}).ok();
    if (ok && kind_valid_for(kind, report.host_arch) && uses_openmp(kind)) {
      // Linking the runtime is only proven by loading the object.
      try {
        check_entry_symbol_named(obj, "probe");
      } catch (const AbiError&) {
        ok = false;
      }
    }
    report.simd_flags_accepted[kind] = ok;
    report.runnable[kind] = ok && cpu_executes(kind);
  }
  report.openmp_available = report.simd_flags_accepted[VariantKind::OpenMP];
  return report;
}

std::vector<std::string> default_flags(VariantKind kind, TargetArch arch) {
  if (!kind_valid_for(kind, arch)) {
    throw SpecError(std::string(to_string(kind)) + " is not valid for " +
                    std::string(to_string(arch)));
  }
  std::vector<std::string> flags = {"-O2"};
  if (kind == VariantKind::Scalar) flags.emplace_back("-fno-tree-vectorize");
  if (uses_openmp(kind)) flags.emplace_back("-fopenmp");
  if (kind == VariantKind::SimdNeon || kind == VariantKind::OpenMpSimdNeon) {
    flags.emplace_back("-march=armv8-a+simd");
  }
  if (kind == VariantKind::SimdAvx2 || kind == VariantKind::OpenMpSimdAvx2) {
    flags.emplace_back("-mavx2");
    flags.emplace_back("-mfma");
  }
  return flags;
}

BuildArtifact compile_variant(const VariantDescriptor& descriptor, const fs::path& workdir,
                              const ToolchainReport& toolchain) {
  validate(descriptor);
  if (!toolchain.compiler_found) throw ToolchainError("no compiler available");
  if (descriptor.arch != toolchain.host_arch) {
    throw ToolchainError("cross-compilation is not supported: variant targets " +
                         std::string(to_string(descriptor.arch)) + ", host is " +
                         std::string(to_string(toolchain.host_arch)));
  }
  if (!toolchain.supports(descriptor.kind)) {
    throw ToolchainError("toolchain probe rejected " + std::string(to_string(descriptor.kind)) +
                         " on this host");
  }

  const auto base = workdir / std::string(to_string(descriptor.kernel_id)) /
                    std::string(slug(descriptor.kind));
  const auto src_dir = base / "src";
  const auto obj_dir = base / "obj";
  const auto log_dir = base / "log";
  std::error_code ec;
  for (const auto& d : {src_dir, obj_dir, log_dir}) {
    fs::create_directories(d, ec);
    if (ec) throw StoreError("cannot create " + d.string() + ": " + ec.message());
  }

  BuildArtifact artifact;
  artifact.descriptor = descriptor;
  artifact.source_hash = sha256_hex(descriptor.source_text);
  artifact.compiler_id = toolchain.compiler_id();
  artifact.flags_used = default_flags(descriptor.kind, descriptor.arch);
  artifact.flags_used.insert(artifact.flags_used.end(), descriptor.extra_flags.begin(),
                             descriptor.extra_flags.end());

  const auto src = src_dir / "variant.c";
  // One object per source hash so reloading never picks up a stale build.
  artifact.object_path = obj_dir / ("variant-" + artifact.source_hash.substr(0, 16) + ".so");
  write_text(src, descriptor.source_text);

  artifact.command_line = {toolchain.compiler_path.string()};
  artifact.command_line.insert(artifact.command_line.end(), artifact.flags_used.begin(),
                               artifact.flags_used.end());
  artifact.command_line.insert(artifact.command_line.end(), kSharedObjectFlags.begin(),
                               kSharedObjectFlags.end());
  artifact.command_line.insert(artifact.command_line.end(),
                               {"-o", artifact.object_path.string(), src.string()});

  const auto result = run_process(artifact.command_line, {{}, kCompileTimeoutS, {}});
  artifact.build_log = result.output;
  std::string log_text;
  for (const auto& a : artifact.command_line) log_text += a + ' ';
  log_text += '\n' + result.output;
  write_text(log_dir / "build.log", log_text);

  if (!result.ok()) {
    throw CompileError(result.output, artifact.flags_used,
                       result.timed_out ? -1 : result.exit_code);
  }
  check_entry_symbol(artifact.object_path);
  return artifact;
}

void check_entry_symbol(const fs::path& object_path) {
  check_entry_symbol_named(object_path, kEntrySymbol);
}

void check_entry_symbol_named(const fs::path& object_path, const char* symbol) {
  const auto child = run_in_child(
      [&](int fd) {
        void* handle = ::dlopen(object_path.c_str(), RTLD_NOW | RTLD_LOCAL);
        std::string msg;
        if (handle == nullptr) {
          const char* err = ::dlerror();
          msg = std::string("load failed: ") + (err ? err : "unknown error");
        } else if (::dlsym(handle, symbol) == nullptr) {
          msg = std::string("symbol '") + symbol + "' not exported";
        } else {
          msg = "ok";
        }
        write_all(fd, msg.data(), msg.size());
      },
      60);
  if (child.status != ChildResult::Status::Exited) {
    throw AbiError(object_path.string() + ": loader crashed or hung while loading the object");
  }
  if (child.payload != "ok") throw AbiError(object_path.string() + ": " + child.payload);
}

}  // namespace joulebench
