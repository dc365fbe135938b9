#include "joulebench/errors.hpp"

namespace joulebench {

namespace {

std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (const auto& f : flags) {
    if (!out.empty()) out += ' ';
    out += f;
  }
  return out;
}

}  // namespace

CatalogError::CatalogError(const std::string& what, int line, std::string field)
    : Error("catalog",
            line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line),
      field_(std::move(field)) {}

BackendError::BackendError(int status, std::string body_excerpt, const std::string& what)
    : Error("backend", what), status_(status), body_excerpt_(std::move(body_excerpt)) {}

FixtureMissError::FixtureMissError(std::string prompt_hash, const std::string& fixture_dir)
    : Error("backend", "no fixture for prompt hash " + prompt_hash + "; add the raw response as " +
                           fixture_dir + "/" + prompt_hash + ".txt and list it in index.json"),
      prompt_hash_(std::move(prompt_hash)) {}

CompileError::CompileError(std::string diagnostics, std::vector<std::string> flags, int exit_code)
    : Error("build", "compiler exited with status " + std::to_string(exit_code) + " (flags: " +
                         join_flags(flags) + ")"),
      diagnostics_(std::move(diagnostics)),
      flags_(std::move(flags)) {}

}  // namespace joulebench
