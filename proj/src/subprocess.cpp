#include "patchcluster/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>

#include "patchcluster/error.hpp"

extern char** environ;

namespace patchcluster {

namespace {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(o.release()) {}
  Fd& operator=(Fd&& o) noexcept {
    reset(o.release());
    return *this;
  }
  ~Fd() { reset(); }

  int get() const { return fd_; }
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void reset(int fd = -1) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = fd;
  }

 private:
  int fd_ = -1;
};

void make_pipe(Fd& read_end, Fd& write_end) {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) throw Error(ErrorKind::Workspace, std::string("pipe: ") + std::strerror(errno));
  read_end.reset(fds[0]);
  write_end.reset(fds[1]);
}

Fd open_or_throw(const char* path, int flags) {
  int fd = ::open(path, flags | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorKind::Workspace, std::string("open ") + path + ": " + std::strerror(errno));
  return Fd(fd);
}

ProcessResult run(const std::string& command, int timeout_s, const std::string& stdin_text,
                  const fs::path* log_file, std::string* captured) {
  static std::once_flag sigpipe_once;
  std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });

  Fd child_in, parent_in, child_out, parent_out, child_err;
  if (!stdin_text.empty()) {
    make_pipe(child_in, parent_in);
  } else {
    child_in = open_or_throw("/dev/null", O_RDONLY);
  }
  if (captured != nullptr) {
    make_pipe(parent_out, child_out);
    child_err = open_or_throw("/dev/null", O_WRONLY);
  } else if (log_file != nullptr) {
    std::error_code ec;
    if (log_file->has_parent_path()) fs::create_directories(log_file->parent_path(), ec);
    child_out = open_or_throw(log_file->c_str(), O_WRONLY | O_CREAT | O_APPEND);
  } else {
    child_out = open_or_throw("/dev/null", O_WRONLY);
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, child_in.get(), STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, child_out.get(), STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&actions, child_err.get() >= 0 ? child_err.get() : child_out.get(),
                                   STDERR_FILENO);

  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  sigset_t defaults;
  sigemptyset(&defaults);
  sigaddset(&defaults, SIGPIPE);
  posix_spawnattr_setsigdefault(&attr, &defaults);
  posix_spawnattr_setpgroup(&attr, 0);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP | POSIX_SPAWN_SETSIGDEF);

  std::string cmd = command;
  char sh[] = "/bin/sh";
  char dash_c[] = "-c";
  char* argv[] = {sh, dash_c, cmd.data(), nullptr};
  pid_t pid = 0;
  const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, &attr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  if (rc != 0) throw Error(ErrorKind::Workspace, std::string("posix_spawn: ") + std::strerror(rc));
  child_in.reset();
  child_out.reset();
  child_err.reset();

  if (parent_in.get() >= 0) ::fcntl(parent_in.get(), F_SETFL, O_NONBLOCK);
  if (parent_out.get() >= 0) ::fcntl(parent_out.get(), F_SETFL, O_NONBLOCK);

  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::seconds(timeout_s);
  std::size_t written = 0;
  ProcessResult result;
  int status = 0;
  char buf[4096];

  auto drain = [&] {
    if (parent_out.get() < 0) return;
    for (;;) {
      ssize_t n = ::read(parent_out.get(), buf, sizeof buf);
      if (n > 0) {
        captured->append(buf, static_cast<std::size_t>(n));
        continue;
      }
      if (n == 0) parent_out.reset();
      break;
    }
  };

  for (;;) {
    pollfd fds[2];
    nfds_t nfds = 0;
    if (parent_in.get() >= 0) fds[nfds++] = {parent_in.get(), POLLOUT, 0};
    if (parent_out.get() >= 0) fds[nfds++] = {parent_out.get(), POLLIN, 0};
    ::poll(fds, nfds, 10);

    if (parent_in.get() >= 0) {
      ssize_t n = ::write(parent_in.get(), stdin_text.data() + written, stdin_text.size() - written);
      if (n > 0) written += static_cast<std::size_t>(n);
      if (written == stdin_text.size() || (n < 0 && errno != EAGAIN)) parent_in.reset();
    }
    drain();

    pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      result.timed_out = true;
      break;
    }
  }
  drain();
  // Orphaned grandchildren may still hold the pipe; they share the group.
  ::kill(-pid, SIGKILL);

  if (!result.timed_out) {
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  }
  return result;
}

}  // namespace

ProcessResult run_shell(const std::string& command, int timeout_s, const fs::path& log_file,
                        const std::string& stdin_text) {
  return run(command, timeout_s, stdin_text, log_file.empty() ? nullptr : &log_file, nullptr);
}

ProcessResult run_shell_capture(const std::string& command, int timeout_s, const std::string& stdin_text,
                                std::string& out) {
  out.clear();
  return run(command, timeout_s, stdin_text, nullptr, &out);
}

}  // namespace patchcluster
