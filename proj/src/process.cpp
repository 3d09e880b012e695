#include "driftlab/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "driftlab/error.hpp"

namespace driftlab {

namespace {

constexpr std::size_t kMaxCapture = 64 * 1024;

void append_capped(std::string& out, const char* data, std::size_t n) {
  if (out.size() >= kMaxCapture) return;
  out.append(data, std::min(n, kMaxCapture - out.size()));
}

}  // namespace

std::string shell_quote(std::string_view value) {
  std::string out = "'";
  for (char c : value) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += '\'';
  return out;
}

ProcessResult run_shell(const std::string& command, std::chrono::milliseconds timeout) {
  int fds[2];
  if (::pipe(fds) != 0) throw Error(std::string("pipe failed: ") + std::strerror(errno));

  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw Error(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(fds[1], STDOUT_FILENO);
    ::dup2(fds[1], STDERR_FILENO);
    ::close(fds[0]);
    ::close(fds[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(fds[1]);
  ::fcntl(fds[0], F_SETFL, ::fcntl(fds[0], F_GETFL) | O_NONBLOCK);

  ProcessResult result;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  bool exited = false;
  int status = 0;
  bool pipe_open = true;
  char buf[4096];

  while (!exited) {
    if (pipe_open) {
      pollfd pfd{fds[0], POLLIN, 0};
      ::poll(&pfd, 1, 50);
      for (;;) {
        const ssize_t n = ::read(fds[0], buf, sizeof buf);
        if (n > 0) {
          append_capped(result.output, buf, static_cast<std::size_t>(n));
          continue;
        }
        if (n == 0) pipe_open = false;
        break;
      }
    } else {
      ::usleep(20'000);
    }
    const pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) {
      exited = true;
      break;
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      result.timed_out = true;
      exited = true;
    }
  }
  // Drain whatever the child left in the pipe; stray grandchildren holding the
  // write end are not waited for.
  for (;;) {
    const ssize_t n = ::read(fds[0], buf, sizeof buf);
    if (n <= 0) break;
    append_capped(result.output, buf, static_cast<std::size_t>(n));
  }
  ::close(fds[0]);

  if (!result.timed_out && WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  return result;
}

}  // namespace driftlab
