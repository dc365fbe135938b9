#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace joulebench {

struct ProcessOptions {
  std::vector<std::pair<std::string, std::string>> env;  // added to the inherited environment
  double timeout_s = 0;                                   // 0 = no limit
  std::filesystem::path cwd;
};

struct ProcessResult {
  int exit_code = -1;
  int term_signal = 0;
  bool timed_out = false;
  std::string output;  // stdout and stderr, interleaved

  bool ok() const { return exit_code == 0 && term_signal == 0 && !timed_out; }
};

/// Runs argv[0] (PATH lookup) and captures its output. Throws std::system_error
/// only when the process cannot be created at all; exec failure shows up as
/// exit code 127.
ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& options = {});

std::optional<std::filesystem::path> find_in_path(std::string_view name);

/// Outcome of a forked child running a callback.
struct ChildResult {
  enum class Status { Exited, Signaled, TimedOut };
  Status status = Status::Exited;
  int exit_code = 0;
  int term_signal = 0;
  std::string payload;  // everything the callback wrote to its channel
};

/// A forked child running a callback whose output is collected by wait().
class ChildProcess {
 public:
  /// Forks and runs `body(write_fd)` in the child; it exits 0 after `body`
  /// returns and 2 if it throws.
  explicit ChildProcess(const std::function<void(int write_fd)>& body);
  ~ChildProcess();
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  /// Collects output until the child closes its channel or `timeout_s`
  /// elapses (then kills it), and reaps it. Call once.
  ChildResult wait(double timeout_s = 0);

 private:
  int pid_ = -1;
  int read_fd_ = -1;
};

/// Forks, runs `body(write_fd)` in the child and collects what it writes.
/// The child exits with 0 after `body` returns, 2 if it throws; crashes and
/// timeouts are reported rather than propagated.
ChildResult run_in_child(const std::function<void(int write_fd)>& body, double timeout_s = 0);

/// Writes the whole buffer or throws std::system_error.
void write_all(int fd, const void* data, std::size_t size);

}  // namespace joulebench
