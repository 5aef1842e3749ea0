// SPDX-License-Identifier: Apache-2.0
#include "featevo/subprocess.hpp"

#include "featevo/error.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace featevo
{

namespace
{

void set_cloexec(int fd)
{
    ::fcntl(fd, F_SETFD, FD_CLOEXEC);
}

} // namespace

std::string shell_quote(const std::string& value)
{
    std::string out = "'";
    for (char c : value)
    {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    out += "'";
    return out;
}

ProcessResult run_shell(const std::string& command, std::chrono::milliseconds timeout)
{
    int out_pipe[2];
    int err_pipe[2];
    if (::pipe(out_pipe) != 0)
        throw IoError(std::string("pipe: ") + std::strerror(errno));
    if (::pipe(err_pipe) != 0)
    {
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        throw IoError(std::string("pipe: ") + std::strerror(errno));
    }

    pid_t pid = ::fork();
    if (pid < 0)
        throw IoError(std::string("fork: ") + std::strerror(errno));
    if (pid == 0)
    {
        ::setpgid(0, 0);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        ::close(err_pipe[0]);
        ::close(err_pipe[1]);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    set_cloexec(out_pipe[0]);
    set_cloexec(err_pipe[0]);

    ProcessResult result;
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
    int open_fds = 2;
    char buf[4096];
    while (open_fds > 0)
    {
        auto remaining =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (remaining.count() <= 0)
        {
            result.timed_out = true;
            ::kill(-pid, SIGKILL);
            break;
        }
        int rc = ::poll(fds, 2, static_cast<int>(std::min<long long>(remaining.count(), 1000)));
        if (rc < 0 && errno != EINTR)
            break;
        for (int i = 0; i < 2; ++i)
        {
            if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR)))
                continue;
            ssize_t n = ::read(fds[i].fd, buf, sizeof(buf));
            if (n > 0)
            {
                (i == 0 ? result.stdout_text : result.stderr_text).append(buf, static_cast<std::size_t>(n));
            }
            else if (n == 0 || errno != EINTR)
            {
                ::close(fds[i].fd);
                fds[i].fd = -1;
                --open_fds;
            }
        }
    }
    for (auto& f : fds)
        if (f.fd >= 0)
            ::close(f.fd);

    int status = 0;
    for (;;)
    {
        pid_t done = ::waitpid(pid, &status, WNOHANG);
        if (done == pid || (done < 0 && errno != EINTR))
            break;
        if (!result.timed_out && std::chrono::steady_clock::now() >= deadline)
        {
            result.timed_out = true;
            ::kill(-pid, SIGKILL);
        }
        ::usleep(2000);
    }
    ::kill(-pid, SIGKILL); // stray descendants
    if (WIFEXITED(status))
        result.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        result.exit_code = 128 + WTERMSIG(status);
    return result;
}

} // namespace featevo
