#include "mg/bridge.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <map>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "mg/error.hpp"

namespace mg {
namespace {

using json = nlohmann::json;

constexpr std::size_t kStderrTail = 4096;

std::string join_command(const std::vector<std::string>& command) {
  std::string out;
  for (const auto& arg : command) {
    if (!out.empty()) out.push_back(' ');
    out += arg;
  }
  return out;
}

void close_fd(int& fd) {
  if (fd >= 0) {
    ::close(fd);
    fd = -1;
  }
}

// Reads '\n'-terminated lines from fd until EOF.
template <typename Fn>
void read_lines(int fd, Fn&& on_line) {
  std::string buffer;
  char chunk[4096];
  while (true) {
    const ssize_t n = ::read(fd, chunk, sizeof(chunk));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t start = 0;
    for (auto pos = buffer.find('\n'); pos != std::string::npos; pos = buffer.find('\n', start)) {
      on_line(std::string_view(buffer).substr(start, pos - start));
      start = pos + 1;
    }
    buffer.erase(0, start);
  }
  if (!buffer.empty()) on_line(buffer);
}

}  // namespace

BridgeOptions BridgeOptions::from_environment() {
  BridgeOptions options;
  if (const char* value = std::getenv("MG_SCORER_TIMEOUT_MS")) {
    char* end = nullptr;
    const long long ms = std::strtoll(value, &end, 10);
    if (end == value || *end != '\0' || ms <= 0) {
      throw ValidationError(std::string("MG_SCORER_TIMEOUT_MS must be a positive integer, got '") +
                            value + "'");
    }
    options.request_timeout = std::chrono::milliseconds(ms);
  }
  return options;
}

struct BridgeScorer::State {
  std::vector<std::string> command;
  BridgeOptions options;
  ScorerInfo info;
  pid_t pid = -1;
  int stdin_fd = -1;
  int stdout_fd = -1;
  int stderr_fd = -1;

  std::thread reader;
  std::thread stderr_reader;
  std::shared_future<void> reader_done;

  mutable std::mutex write_mutex;
  mutable std::mutex mutex;  // guards everything below
  std::map<std::string, std::promise<double>> in_flight;
  std::optional<std::promise<std::string>> handshake;
  std::string stderr_tail;
  std::string exit_reason;
  bool closed = false;
  BridgeStats stats;
  std::atomic<std::uint64_t> next_id{0};

  std::string describe_exit() const {
    std::string msg = "scorer '" + join_command(command) + "' " + exit_reason;
    if (!stderr_tail.empty()) msg += "; stderr tail: " + stderr_tail;
    return msg;
  }

  void on_line(std::string_view line) {
    std::lock_guard lock(mutex);
    if (handshake) {
      handshake->set_value(std::string(line));
      handshake.reset();
      return;
    }
    json reply;
    try {
      reply = json::parse(line);
    } catch (const json::exception&) {
      ++stats.protocol_errors;
      return;
    }
    if (!reply.is_object() || !reply.contains("id") || !reply["id"].is_string()) {
      ++stats.protocol_errors;
      return;
    }
    const auto id = reply["id"].get<std::string>();
    const auto it = in_flight.find(id);
    if (it == in_flight.end()) {
      ++stats.protocol_errors;
      return;
    }
    auto promise = std::move(it->second);
    in_flight.erase(it);
    if (reply.contains("error")) {
      ++stats.errored;
      const auto& err = reply["error"];
      promise.set_exception(std::make_exception_ptr(BridgeError(
          "scorer error for request " + id + ": " + (err.is_string() ? err.get<std::string>() : err.dump()))));
      return;
    }
    const auto score = reply.find("score");
    if (score == reply.end() || !score->is_number() || !std::isfinite(score->get<double>())) {
      ++stats.errored;
      promise.set_exception(std::make_exception_ptr(
          BridgeError("scorer reply for request " + id + " has no finite numeric score")));
      return;
    }
    ++stats.answered;
    promise.set_value(score->get<double>());
  }

  void on_eof() {
    std::lock_guard lock(mutex);
    closed = true;
    // Closing stdout usually means the child is exiting; give it a moment
    // to become reapable so the error can carry its status.
    for (int attempt = 0; pid > 0 && attempt < 20; ++attempt) {
      int status = 0;
      if (::waitpid(pid, &status, WNOHANG) == pid) {
        pid = -1;
        if (WIFEXITED(status)) {
          exit_reason = "exited with status " + std::to_string(WEXITSTATUS(status));
        } else if (WIFSIGNALED(status)) {
          exit_reason = "was killed by signal " + std::to_string(WTERMSIG(status));
        }
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (exit_reason.empty()) exit_reason = "closed its output";
    if (handshake) {
      handshake->set_exception(std::make_exception_ptr(BridgeError(describe_exit())));
      handshake.reset();
    }
    for (auto& [id, promise] : in_flight) {
      ++stats.errored;
      promise.set_exception(
          std::make_exception_ptr(BridgeError("request " + id + " unanswered: " + describe_exit())));
    }
    in_flight.clear();
  }

  void shutdown() {
    close_fd(stdin_fd);
    // A well-behaved child exits on EOF; otherwise kill it.
    if (reader_done.valid() &&
        reader_done.wait_for(std::chrono::milliseconds(500)) != std::future_status::ready) {
      std::lock_guard lock(mutex);
      if (pid > 0) ::kill(pid, SIGKILL);
    }
    if (reader.joinable()) reader.join();
    if (stderr_reader.joinable()) stderr_reader.join();
    {
      std::lock_guard lock(mutex);
      if (pid > 0) {
        ::kill(pid, SIGKILL);
        ::waitpid(pid, nullptr, 0);
        pid = -1;
      }
    }
    close_fd(stdout_fd);
    close_fd(stderr_fd);
  }
};

BridgeScorer::BridgeScorer(std::shared_ptr<State> state) : state_(std::move(state)) {}

BridgeScorer::~BridgeScorer() { state_->shutdown(); }

const ScorerInfo& BridgeScorer::info() const { return state_->info; }

const std::vector<std::string>& BridgeScorer::command() const { return state_->command; }

int BridgeScorer::child_pid() const {
  std::lock_guard lock(state_->mutex);
  return state_->pid;
}

bool BridgeScorer::alive() const {
  std::lock_guard lock(state_->mutex);
  return !state_->closed;
}

BridgeStats BridgeScorer::stats() const {
  std::lock_guard lock(state_->mutex);
  return state_->stats;
}

std::future<double> BridgeScorer::submit(const ScoreRequest& request) const {
  auto& s = *state_;
  std::future<double> reply;
  {
    std::lock_guard lock(s.mutex);
    if (s.closed) throw BridgeError("request " + request.id + " not sent: " + s.describe_exit());
    if (s.in_flight.contains(request.id)) {
      throw BridgeError("request id " + request.id + " is already in flight");
    }
    auto [it, inserted] = s.in_flight.emplace(request.id, std::promise<double>());
    reply = it->second.get_future();
    ++s.stats.issued;
  }

  json line = {{"id", request.id},
               {"source", request.source},
               {"candidate", request.candidate},
               {"reference", request.reference ? json(*request.reference) : json(nullptr)}};
  const std::string text = line.dump() + "\n";

  std::lock_guard write_lock(s.write_mutex);
  std::size_t written = 0;
  while (written < text.size()) {
    const ssize_t n = ::write(s.stdin_fd, text.data() + written, text.size() - written);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      const int err = errno;
      std::lock_guard lock(s.mutex);
      if (auto it = s.in_flight.find(request.id); it != s.in_flight.end()) {
        ++s.stats.errored;
        it->second.set_exception(std::make_exception_ptr(BridgeError(
            "request " + request.id + " could not be written: " + std::strerror(err))));
        s.in_flight.erase(it);
      }
      break;
    }
    written += static_cast<std::size_t>(n);
  }
  return reply;
}

double BridgeScorer::await(const std::string& id, std::future<double>& reply) const {
  auto& s = *state_;
  if (reply.wait_for(s.options.request_timeout) != std::future_status::ready) {
    std::lock_guard lock(s.mutex);
    if (auto it = s.in_flight.find(id); it != s.in_flight.end()) {
      ++s.stats.errored;
      s.in_flight.erase(it);
      throw BridgeError("request " + id + " timed out after " +
                        std::to_string(s.options.request_timeout.count()) + " ms");
    }
  }
  return reply.get();
}

double BridgeScorer::evaluate(const TokenSequence& source, const TokenSequence& candidate,
                              const TokenSequence* reference, std::string_view context_id) const {
  ScoreRequest request;
  request.id = std::to_string(state_->next_id++);
  if (!context_id.empty()) request.id = std::string(context_id) + "#" + request.id;
  request.source = detokenize(source);
  request.candidate = detokenize(candidate);
  if (reference != nullptr) request.reference = detokenize(*reference);
  auto reply = submit(request);
  return await(request.id, reply);
}

double bridge_score(const BridgeScorer& scorer, const ScoreRequest& request) {
  auto reply = scorer.submit(request);
  return scorer.await(request.id, reply);
}

std::shared_ptr<BridgeScorer> spawn_scorer(const std::vector<std::string>& command,
                                           const BridgeOptions& options) {
  if (command.empty()) throw ValidationError("external scorer command is empty");
  // Writes to a dead child must fail with EPIPE instead of killing us.
  ::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2], out_pipe[2], err_pipe[2], exec_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0 ||
      ::pipe2(err_pipe, O_CLOEXEC) != 0 || ::pipe2(exec_pipe, O_CLOEXEC) != 0) {
    throw BridgeError(std::string("cannot create pipes: ") + std::strerror(errno));
  }

  std::vector<char*> argv;
  for (const auto& arg : command) argv.push_back(const_cast<char*>(arg.c_str()));
  argv.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) throw BridgeError(std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    ::execvp(argv[0], argv.data());
    const int err = errno;
    [[maybe_unused]] auto ignored = ::write(exec_pipe[1], &err, sizeof(err));
    ::_exit(127);
  }

  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  ::close(exec_pipe[1]);
  int exec_errno = 0;
  ssize_t got = 0;
  do {
    got = ::read(exec_pipe[0], &exec_errno, sizeof(exec_errno));
  } while (got < 0 && errno == EINTR);
  ::close(exec_pipe[0]);
  if (got == sizeof(exec_errno)) {
    ::waitpid(pid, nullptr, 0);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);
    throw BridgeError("cannot start scorer '" + join_command(command) +
                      "': " + std::strerror(exec_errno));
  }

  auto state = std::make_shared<BridgeScorer::State>();
  state->command = command;
  state->options = options;
  state->pid = pid;
  state->stdin_fd = in_pipe[1];
  state->stdout_fd = out_pipe[0];
  state->stderr_fd = err_pipe[0];
  state->handshake.emplace();
  auto handshake = state->handshake->get_future();

  state->stderr_reader = std::thread([s = state.get()] {
    read_lines(s->stderr_fd, [s](std::string_view line) {
      std::lock_guard lock(s->mutex);
      s->stderr_tail.append(line);
      s->stderr_tail.push_back('\n');
      if (s->stderr_tail.size() > kStderrTail) {
        s->stderr_tail.erase(0, s->stderr_tail.size() - kStderrTail);
      }
    });
  });
  std::promise<void> done;
  state->reader_done = done.get_future().share();
  state->reader = std::thread([s = state.get(), done = std::move(done)]() mutable {
    read_lines(s->stdout_fd, [s](std::string_view line) { s->on_line(line); });
    // Let stderr drain so exit errors carry the tail.
    if (s->stderr_reader.joinable()) s->stderr_reader.join();
    s->on_eof();
    done.set_value();
  });

  // From here on the object owns the child; its destructor reaps it.
  auto scorer = std::shared_ptr<BridgeScorer>(new BridgeScorer(state));
  const auto cmd = join_command(command);
  if (handshake.wait_for(options.handshake_timeout) != std::future_status::ready) {
    throw BridgeError("scorer '" + cmd + "' did not send a handshake within " +
                      std::to_string(options.handshake_timeout.count()) + " ms");
  }
  const std::string line = handshake.get();
  json hello;
  try {
    hello = json::parse(line);
  } catch (const json::exception&) {
    throw BridgeError("scorer '" + cmd + "' sent an invalid handshake line: " + line);
  }
  if (!hello.is_object() || !hello.contains("protocol") || !hello["protocol"].is_string()) {
    throw BridgeError("scorer '" + cmd + "' sent an invalid handshake line: " + line);
  }
  if (hello["protocol"] != kBridgeProtocol) {
    throw BridgeError("scorer '" + cmd + "' speaks protocol " + hello["protocol"].dump() +
                      ", expected \"" + std::string(kBridgeProtocol) + "\"");
  }
  if (!hello.contains("kind") || !hello["kind"].is_string() || !hello.contains("name") ||
      !hello["name"].is_string()) {
    throw BridgeError("scorer '" + cmd + "' handshake lacks kind/name: " + line);
  }
  const auto kind = hello["kind"].get<std::string>();
  if (kind == "reference_free") {
    state->info.kind = ScorerKind::reference_free;
  } else if (kind == "reference_based") {
    state->info.kind = ScorerKind::reference_based;
  } else {
    throw BridgeError("scorer '" + cmd + "' advertised unknown kind '" + kind + "'");
  }
  state->info.name = hello["name"].get<std::string>();
  state->info.backend = ScorerBackend::external_bridge;
  state->info.deterministic =
      hello.contains("deterministic") && hello["deterministic"].is_boolean() &&
      hello["deterministic"].get<bool>();
  return scorer;
}

}  // namespace mg
