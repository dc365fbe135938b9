#include "joulebench/llm_client.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "joulebench/errors.hpp"
#include "joulebench/prompt_catalog.hpp"

namespace joulebench {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw SpecError("endpoint_url must include a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 512;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

CompletionResult finish(std::string raw, std::string finish_reason, int attempts) {
  CompletionResult r;
  r.raw_response = std::move(raw);
  try {
    r.code_blocks = extract_code_blocks(r.raw_response);
  } catch (const NoCodeError&) {
    // Callers decide whether prose-only responses are fatal.
  }
  r.finish_reason = std::move(finish_reason);
  r.attempts = attempts;
  return r;
}

CompletionResult request_fixture(const BackendConfig& config, std::string_view prompt) {
  const auto hash = prompt_hash(prompt);
  const auto path = config.fixture_dir / (hash + ".txt");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FixtureMissError(hash, config.fixture_dir.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return finish(ss.str(), "stop", 1);
}

CompletionResult request_live(const BackendConfig& config, std::string_view prompt) {
  const char* key = std::getenv(config.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw BackendError(0, "", "environment variable " + config.api_key_env + " is not set");
  }
  const auto endpoint = split_url(config.endpoint_url);
  httplib::Client client(endpoint.origin);
  const auto secs = std::chrono::duration<double>(config.timeout_s);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(secs);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  const httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
  const std::string body = chat_request_body(config.model_name, prompt);

  double delay = config.backoff_initial_s;
  const int max_attempts = config.max_retries + 1;
  for (int attempt = 1;; ++attempt) {
    auto res = client.Post(endpoint.path, headers, body, "application/json");
    int status = 0;
    std::string detail;
    if (!res) {
      detail = "request failed: " + httplib::to_string(res.error());
    } else if (res->status >= 200 && res->status < 300) {
      try {
        const auto j = nlohmann::json::parse(res->body);
        const auto& choice = j.at("choices").at(0);
        std::string finish_reason = choice.value("finish_reason", std::string{});
        if (choice.contains("finish_reason") && choice["finish_reason"].is_null()) finish_reason.clear();
        return finish(choice.at("message").at("content").get<std::string>(), finish_reason,
                      attempt);
      } catch (const nlohmann::json::exception& e) {
        throw BackendError(res->status, excerpt(res->body),
                           std::string("malformed chat-completions response: ") + e.what());
      }
    } else {
      status = res->status;
      detail = "HTTP " + std::to_string(status);
      if (!retryable_status(status)) throw BackendError(status, excerpt(res->body), detail);
    }
    if (attempt >= max_attempts) {
      throw BackendError(status, res ? excerpt(res->body) : "",
                         detail + " after " + std::to_string(attempt) + " attempt(s)");
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    delay *= config.backoff_factor;
  }
}

bool is_fence(std::string_view line, std::size_t& ticks, std::string_view& rest) {
  std::size_t i = 0;
  while (i < line.size() && i < 3 && line[i] == ' ') ++i;
  std::size_t n = 0;
  while (i + n < line.size() && line[i + n] == '`') ++n;
  if (n < 3) return false;
  ticks = n;
  rest = line.substr(i + n);
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

BackendKind parse_backend_kind(std::string_view s) {
  if (s == "live") return BackendKind::Live;
  if (s == "fixture") return BackendKind::Fixture;
  throw SpecError("backend kind must be 'live' or 'fixture', got '" + std::string(s) + "'");
}

void validate(const BackendConfig& config) {
  if (!(config.timeout_s > 0)) throw SpecError("backend timeout must be > 0");
  if (config.max_retries < 0) throw SpecError("max_retries must be >= 0");
  if (config.kind == BackendKind::Live) {
    if (config.endpoint_url.empty()) throw SpecError("live backend requires endpoint_url");
    if (config.api_key_env.empty()) throw SpecError("live backend requires api_key_env");
    split_url(config.endpoint_url);
  } else if (config.fixture_dir.empty()) {
    throw SpecError("fixture backend requires fixture_dir");
  }
}

std::string backend_id(const BackendConfig& config) {
  if (config.kind == BackendKind::Fixture) return "fixture";
  return "live:" + split_url(config.endpoint_url).origin;
}

std::string describe_backend(const BackendConfig& config, double timeout_s) {
  namespace fs = std::filesystem;
  if (config.kind == BackendKind::Fixture) {
    std::error_code ec;
    if (!fs::is_directory(config.fixture_dir, ec)) {
      return "fixture dir " + config.fixture_dir.string() + " NOT FOUND";
    }
    int count = 0;
    for (const auto& e : fs::directory_iterator(config.fixture_dir, ec)) {
      if (e.path().extension() == ".txt") ++count;
    }
    return "fixture dir " + config.fixture_dir.string() + ": " + std::to_string(count) +
           " entries, index.json " +
           (fs::exists(config.fixture_dir / "index.json") ? "present" : "missing");
  }
  std::string out = "live " + config.endpoint_url + ", $" + config.api_key_env +
                    (std::getenv(config.api_key_env.c_str()) ? " set" : " NOT SET");
  Endpoint endpoint;
  try {
    endpoint = split_url(config.endpoint_url);
  } catch (const SpecError& e) {
    return out + ", " + e.what();
  }
  httplib::Client client(endpoint.origin);
  const auto t = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(timeout_s));
  client.set_connection_timeout(t);
  client.set_read_timeout(t);
  auto res = client.Get("/");
  if (!res) return out + ", unreachable (" + httplib::to_string(res.error()) + ")";
  return out + ", reachable (HTTP " + std::to_string(res->status) + ")";
}

std::vector<CodeBlock> extract_code_blocks(std::string_view raw) {
  std::vector<CodeBlock> blocks;
  bool inside = false;
  std::size_t open_ticks = 0;
  std::size_t content_start = 0;
  std::string tag;

  std::size_t pos = 0;
  while (pos < raw.size()) {
    auto eol = raw.find('\n', pos);
    const std::size_t next = eol == std::string_view::npos ? raw.size() : eol + 1;
    const auto line = raw.substr(pos, (eol == std::string_view::npos ? raw.size() : eol) - pos);
    std::size_t ticks = 0;
    std::string_view rest;
    if (is_fence(line, ticks, rest)) {
      if (!inside) {
        inside = true;
        open_ticks = ticks;
        const auto info = trim(rest);
        tag = std::string(info.substr(0, info.find_first_of(" \t{")));
        content_start = next;
      } else if (ticks >= open_ticks && trim(rest).empty()) {
        inside = false;
        const auto source = raw.substr(content_start, pos - content_start);
        if (source.find_first_not_of(" \t\r\n") != std::string_view::npos) {
          blocks.push_back({tag, std::string(source), content_start});
        }
      }
    }
    pos = next;
  }
  if (blocks.empty()) throw NoCodeError("response contains no fenced code blocks");
  return blocks;
}

const CodeBlock& primary_source_block(const std::vector<CodeBlock>& blocks) {
  if (blocks.empty()) throw NoCodeError("response contains no fenced code blocks");
  for (const auto& b : blocks) {
    if (b.language_tag.empty() || b.language_tag == "c" || b.language_tag == "C") return b;
  }
  return blocks.front();
}

std::string chat_request_body(std::string_view model, std::string_view prompt) {
  nlohmann::json body = {
      {"model", model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", 0}};
  return body.dump();
}

CompletionResult request_completion(const BackendConfig& config, std::string_view prompt) {
  validate(config);
  return config.kind == BackendKind::Fixture ? request_fixture(config, prompt)
                                             : request_live(config, prompt);
}

}  // namespace joulebench
