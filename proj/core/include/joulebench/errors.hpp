#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace joulebench {

/// Base for every error the pipeline raises. `stage()` names the pipeline
/// stage so the CLI can report "<stage>: <message>".
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string& what)
      : std::runtime_error(what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

#define JOULEBENCH_DECLARE_ERROR(Name, Stage)                          \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(Stage, what) {}     \
  }

JOULEBENCH_DECLARE_ERROR(SpecError, "spec");
JOULEBENCH_DECLARE_ERROR(RenderError, "render");
JOULEBENCH_DECLARE_ERROR(StoreError, "store");
JOULEBENCH_DECLARE_ERROR(NoCodeError, "extract");
JOULEBENCH_DECLARE_ERROR(ToolchainError, "probe");
JOULEBENCH_DECLARE_ERROR(AbiError, "abi");
JOULEBENCH_DECLARE_ERROR(MeterError, "energy");
JOULEBENCH_DECLARE_ERROR(ProtocolError, "bench");
JOULEBENCH_DECLARE_ERROR(ReportError, "report");
JOULEBENCH_DECLARE_ERROR(CorpusError, "corpus");
JOULEBENCH_DECLARE_ERROR(ConfigError, "config");

#undef JOULEBENCH_DECLARE_ERROR

/// Catalog parse/validation failure; `line` is 0 when not attributable.
class CatalogError : public Error {
 public:
  CatalogError(const std::string& what, int line = 0, std::string field = {});
  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  int line_;
  std::string field_;
};

class BackendError : public Error {
 public:
  BackendError(int status, std::string body_excerpt, const std::string& what);
  /// HTTP status, or 0 for transport failures and timeouts.
  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

class FixtureMissError : public Error {
 public:
  FixtureMissError(std::string prompt_hash, const std::string& fixture_dir);
  const std::string& prompt_hash() const noexcept { return prompt_hash_; }

 private:
  std::string prompt_hash_;
};

class CompileError : public Error {
 public:
  CompileError(std::string diagnostics, std::vector<std::string> flags, int exit_code);
  const std::string& diagnostics() const noexcept { return diagnostics_; }
  const std::vector<std::string>& flags() const noexcept { return flags_; }

 private:
  std::string diagnostics_;
  std::vector<std::string> flags_;
};

}  // namespace joulebench
