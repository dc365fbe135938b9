#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace joulebench {

enum class BackendKind { Live, Fixture };
BackendKind parse_backend_kind(std::string_view s);

struct BackendConfig {
  BackendKind kind = BackendKind::Fixture;
  std::string endpoint_url;  // live only, e.g. https://api.openai.com/v1/chat/completions
  std::string model_name = "gpt-4";
  std::string api_key_env = "OPENAI_API_KEY";  // live only
  std::filesystem::path fixture_dir;           // fixture only
  double timeout_s = 120.0;
  int max_retries = 3;
  double backoff_initial_s = 1.0;
  double backoff_factor = 2.0;
};

/// Throws SpecError when the kind-specific fields are missing or invalid.
void validate(const BackendConfig& config);
std::string backend_id(const BackendConfig& config);

/// One-line reachability summary: fixture entry count, or for live an HTTP
/// round trip to the endpoint origin (no completion is requested).
std::string describe_backend(const BackendConfig& config, double timeout_s = 3.0);

struct CodeBlock {
  std::string language_tag;
  std::string source;
  std::size_t offset = 0;  // byte offset of `source` in the raw response

  bool operator==(const CodeBlock&) const = default;
};

struct CompletionResult {
  std::string raw_response;
  std::vector<CodeBlock> code_blocks;  // empty when the response had no fences
  std::string finish_reason;
  int attempts = 1;
};

/// Triple-backtick fenced blocks in document order; throws NoCodeError when
/// there are none. Each source is a contiguous substring of `raw_response`.
std::vector<CodeBlock> extract_code_blocks(std::string_view raw_response);

/// The block most likely to be the C implementation: the first tagged c/C
/// (or untagged), else the first block.
const CodeBlock& primary_source_block(const std::vector<CodeBlock>& blocks);

CompletionResult request_completion(const BackendConfig& config, std::string_view prompt);

/// Request body sent to chat-completions endpoints.
std::string chat_request_body(std::string_view model, std::string_view prompt);

}  // namespace joulebench
