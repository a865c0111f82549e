#pragma once

#include <fcntl.h>
#include <poll.h>
#include <pthread.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "verbscope/scorer.hpp"
#include "verbscope/util.hpp"

namespace verbscope {

class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Scores sentences with a child process speaking JSON Lines:
//   request  {"id": "...", "text": "space joined tokens"}
//   response {"id": "...", "logprob": <float <= 0>, "num_tokens": <int >= 1>}
// Responses may arrive in any order; scores use the natural log.
class ExternalScorer final : public Scorer {
 public:
  explicit ExternalScorer(std::string command,
                          std::chrono::milliseconds timeout = std::chrono::seconds(300))
      : command_(std::move(command)), timeout_(timeout) {}

  std::string id() const override { return "external:" + command_; }

  std::vector<SentenceScore> score(const std::vector<ScoreRequest>& requests) override {
    std::unordered_map<std::string, std::size_t> slot;
    std::string payload;
    for (std::size_t i = 0; i < requests.size(); ++i) {
      if (!slot.emplace(requests[i].id, i).second) {
        throw Error("duplicate request id '" + requests[i].id + "'");
      }
      nlohmann::json j{{"id", requests[i].id}, {"text", join(requests[i].tokens, " ")}};
      payload += j.dump();
      payload += '\n';
    }
    if (requests.empty()) return {};

    Child child = spawn();
    std::thread writer([fd = child.in, &payload] {
      sigset_t block;
      sigemptyset(&block);
      sigaddset(&block, SIGPIPE);
      pthread_sigmask(SIG_BLOCK, &block, nullptr);
      std::size_t off = 0;
      while (off < payload.size()) {
        auto n = ::write(fd, payload.data() + off, payload.size() - off);
        if (n < 0) {
          if (errno == EINTR) continue;
          break;
        }
        off += static_cast<std::size_t>(n);
      }
      ::close(fd);
    });

    std::vector<SentenceScore> out(requests.size());
    std::vector<bool> done(requests.size(), false);
    std::size_t answered = 0;
    try {
      read_responses(child.out, [&](const std::string& line, std::size_t lineno) {
        auto parsed = parse_response(line, lineno);
        auto it = slot.find(parsed.sentence_id);
        if (it == slot.end()) {
          throw ProtocolError("line " + std::to_string(lineno) + ": unknown id '" + parsed.sentence_id + "'");
        }
        if (done[it->second]) {
          throw ProtocolError("line " + std::to_string(lineno) + ": duplicate answer for id '" +
                              parsed.sentence_id + "'");
        }
        parsed.scorer_id = id();
        out[it->second] = std::move(parsed);
        done[it->second] = true;
        return ++answered == requests.size();
      });
      if (answered < requests.size()) {
        std::string missing;
        std::size_t listed = 0;
        for (std::size_t i = 0; i < requests.size() && listed < 10; ++i) {
          if (!done[i]) {
            missing += (listed++ ? ", " : "") + requests[i].id;
          }
        }
        if (requests.size() - answered > listed) missing += ", ...";
        throw ProtocolError("scorer exited before answering " + std::to_string(requests.size() - answered) +
                            " of " + std::to_string(requests.size()) + " requests; missing ids: " + missing);
      }
    } catch (...) {
      // The shell may have forked the scorer; kill the whole group.
      ::kill(-child.pid, SIGKILL);
      writer.join();
      finish(child);
      throw;
    }
    writer.join();
    finish(child);
    return out;
  }

 private:
  struct Child {
    pid_t pid = -1;
    int in = -1;   // parent writes
    int out = -1;  // parent reads
  };

  Child spawn() const {
    int to_child[2], from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) throw Error(std::string("pipe: ") + std::strerror(errno));
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw Error(std::string("pipe: ") + std::strerror(errno));
    }
    const char* argv[] = {"/bin/sh", "-c", command_.c_str(), nullptr};
    pid_t pid = ::fork();
    if (pid < 0) throw Error(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
      ::setpgid(0, 0);
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::execv("/bin/sh", const_cast<char* const*>(argv));
      ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(to_child[0]);
    ::close(from_child[1]);
    return Child{pid, to_child[1], from_child[0]};
  }

  static void finish(Child& c) {
    if (c.out >= 0) ::close(c.out);
    c.out = -1;
    int status = 0;
    while (::waitpid(c.pid, &status, 0) < 0 && errno == EINTR) {
    }
  }

  // Calls on_line for each LF-terminated line until it returns true or the
  // stream ends. A trailing unterminated fragment is a truncated response.
  template <typename OnLine>
  void read_responses(int fd, OnLine&& on_line) const {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + timeout_;
    std::string buf;
    std::size_t lineno = 0;
    char chunk[65536];
    for (;;) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
      if (left <= 0) throw ProtocolError("external scorer timed out after " + std::to_string(timeout_.count()) + " ms");
      pollfd p{fd, POLLIN, 0};
      int r = ::poll(&p, 1, static_cast<int>(std::min<long long>(left, 1000 * 60 * 60)));
      if (r < 0) {
        if (errno == EINTR) continue;
        throw Error(std::string("poll: ") + std::strerror(errno));
      }
      if (r == 0) continue;
      auto n = ::read(fd, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(std::string("read: ") + std::strerror(errno));
      }
      if (n == 0) {
        if (!trim(buf).empty()) {
          throw ProtocolError("line " + std::to_string(lineno + 1) + ": truncated response '" + buf + "'");
        }
        return;
      }
      buf.append(chunk, static_cast<std::size_t>(n));
      std::size_t start = 0;
      for (auto nl = buf.find('\n'); nl != std::string::npos; nl = buf.find('\n', start)) {
        std::string line = buf.substr(start, nl - start);
        start = nl + 1;
        ++lineno;
        if (trim(line).empty()) continue;
        if (on_line(line, lineno)) return;
      }
      buf.erase(0, start);
    }
  }

  static SentenceScore parse_response(const std::string& line, std::size_t lineno) {
    const auto where = "line " + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw ProtocolError(where + ": malformed response '" + line + "'");
    }
    if (!j.is_object()) throw ProtocolError(where + ": response is not an object");
    if (!j.contains("id") || !j["id"].is_string()) throw ProtocolError(where + ": response without id");
    SentenceScore s;
    s.sentence_id = j["id"].get<std::string>();
    const auto who = where + " (id '" + s.sentence_id + "')";
    if (!j.contains("logprob") || !j["logprob"].is_number()) throw ProtocolError(who + ": missing logprob");
    s.logprob = j["logprob"].get<double>();
    if (!std::isfinite(s.logprob) || s.logprob > 0.0) {
      throw ProtocolError(who + ": logprob must be finite and <= 0, got " + format_double(s.logprob));
    }
    if (!j.contains("num_tokens") || !j["num_tokens"].is_number_integer()) {
      throw ProtocolError(who + ": missing num_tokens");
    }
    auto nt = j["num_tokens"].get<long long>();
    if (nt < 1) throw ProtocolError(who + ": num_tokens must be >= 1");
    s.num_tokens = static_cast<std::size_t>(nt);
    return s;
  }

  std::string command_;
  std::chrono::milliseconds timeout_;
};

}  // namespace verbscope
