#pragma once

// Client for out-of-process evaluators speaking line-delimited JSON over the
// child's stdin/stdout (POSIX only).
//
//   backend -> {"protocol": "lonscape-eval", "version": 1}      (first line)
//   client  -> {"id": N, "op": "evaluate", "phenotype": {...}}
//   backend -> {"id": N, "distance": D, "killed": B}

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <utility>

#include "lonscape/evaluate.hpp"
#include "lonscape/json_io.hpp"

namespace lonscape {

inline constexpr std::string_view kProtocolName = "lonscape-eval";
inline constexpr int kProtocolVersion = 1;

class ExternalEvaluator {
 public:
  explicit ExternalEvaluator(EvaluatorConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.external_command.empty())
      throw Error(ErrorCode::EvalBackendFailure, "no external evaluator command configured");
    spawn();
    handshake();
  }

  ExternalEvaluator(const ExternalEvaluator&) = delete;
  ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;

  ExternalEvaluator(ExternalEvaluator&& other) noexcept
      : cfg_(std::move(other.cfg_)),
        pid_(std::exchange(other.pid_, -1)),
        to_child_(std::exchange(other.to_child_, -1)),
        from_child_(std::exchange(other.from_child_, -1)),
        buffer_(std::move(other.buffer_)),
        next_id_(other.next_id_) {}

  ExternalEvaluator& operator=(ExternalEvaluator&&) = delete;

  ~ExternalEvaluator() { shutdown(); }

  Fitness operator()(const PhenotypeTree& tree) {
    const std::int64_t id = next_id_++;
    const Json request{{"id", id}, {"op", "evaluate"}, {"phenotype", to_json(tree)}};
    write_line(request.dump());

    const std::string line = read_line();
    Json reply;
    try {
      reply = Json::parse(line);
    } catch (const Json::exception&) {
      throw Error(ErrorCode::ProtocolError, "malformed response line: " + line);
    }
    if (!reply.is_object() || !reply.contains("id") || !reply.at("id").is_number_integer())
      throw Error(ErrorCode::ProtocolError, "response without integer id: " + line);
    if (reply.at("id").get<std::int64_t>() != id)
      throw Error(ErrorCode::ProtocolError, "response id does not match request " + std::to_string(id));
    if (reply.contains("error"))
      throw Error(ErrorCode::EvalBackendFailure, "backend reported: " + reply.at("error").dump());
    if (!reply.contains("distance") || !reply.at("distance").is_number())
      throw Error(ErrorCode::ProtocolError, "response without numeric distance: " + line);
    bool killed = false;
    if (reply.contains("killed")) {
      if (!reply.at("killed").is_boolean()) throw Error(ErrorCode::ProtocolError, "'killed' must be boolean");
      killed = reply.at("killed").get<bool>();
    }
    return fitness_from_distance(reply.at("distance").get<double>(), killed, cfg_);
  }

 private:
  void spawn() {
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0)
      throw Error(ErrorCode::EvalBackendFailure, std::string("pipe: ") + std::strerror(errno));
    // A backend that exits mid-request must surface as EPIPE, not kill us.
    ::signal(SIGPIPE, SIG_IGN);
    const pid_t pid = ::fork();
    if (pid < 0) throw Error(ErrorCode::EvalBackendFailure, std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      ::close(out_pipe[0]);
      ::close(out_pipe[1]);
      ::execl("/bin/sh", "sh", "-c", cfg_.external_command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
    ::fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
  }

  void handshake() {
    const std::string line = read_line();
    Json hello;
    try {
      hello = Json::parse(line);
    } catch (const Json::exception&) {
      throw Error(ErrorCode::ProtocolError, "malformed handshake: " + line);
    }
    if (!hello.is_object() || hello.value("protocol", std::string()) != kProtocolName ||
        hello.value("version", -1) != kProtocolVersion)
      throw Error(ErrorCode::ProtocolError, "unexpected handshake: " + line);
  }

  void write_line(const std::string& payload) {
    std::string data = payload;
    data.push_back('\n');
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::write(to_child_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::EvalBackendFailure, std::string("write to backend: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + std::chrono::duration<double>(cfg_.timeout_seconds);
    for (;;) {
      if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
      if (remaining.count() <= 0) throw Error(ErrorCode::Timeout, "backend did not answer in time");
      pollfd pfd{from_child_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::EvalBackendFailure, std::string("poll: ") + std::strerror(errno));
      }
      if (ready == 0) continue;
      char chunk[4096];
      const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::EvalBackendFailure, std::string("read from backend: ") + std::strerror(errno));
      }
      if (n == 0) throw Error(ErrorCode::EvalBackendFailure, "backend closed its output");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  void shutdown() noexcept {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
      int status = 0;
      // Closing stdin asks the backend to exit; give it a moment, then insist.
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
          pid_ = -1;
          return;
        }
        ::usleep(10000);
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  EvaluatorConfig cfg_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::int64_t next_id_ = 0;
};

inline Fitness external_evaluate(const PhenotypeTree& tree, const EvaluatorConfig& cfg) {
  ExternalEvaluator backend(cfg);
  return backend(tree);
}

}  // namespace lonscape
