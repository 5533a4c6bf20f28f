#include "tabsynth/subprocess.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include "tabsynth/error.hpp"

namespace tabsynth {

namespace {

[[noreturn]] void plugin_error(const std::string& message) {
    throw Error(ErrorKind::plugin, message);
}

std::vector<char*> c_args(std::vector<std::string>& args) {
    std::vector<char*> out;
    for (auto& a : args) {
        out.push_back(a.data());
    }
    out.push_back(nullptr);
    return out;
}

void ignore_sigpipe() {
    static const bool once = [] {
        std::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)once;
}

}  // namespace

std::vector<std::string> split_command(const std::string& command) {
    std::vector<std::string> out;
    std::string current;
    bool inQuotes = false;
    bool any = false;
    for (char c : command) {
        if (c == '"') {
            inQuotes = !inQuotes;
            any = true;
        } else if (!inQuotes && (c == ' ' || c == '\t')) {
            if (any) {
                out.push_back(current);
                current.clear();
                any = false;
            }
        } else {
            current.push_back(c);
            any = true;
        }
    }
    if (inQuotes) {
        throw Error(ErrorKind::usage, "unbalanced quotes in plugin command");
    }
    if (any) {
        out.push_back(current);
    }
    if (out.empty()) {
        throw Error(ErrorKind::usage, "empty plugin command");
    }
    return out;
}

int run_process(const std::vector<std::string>& argv) {
    if (argv.empty()) {
        plugin_error("empty command");
    }
    std::vector<std::string> args = argv;
    auto cargs = c_args(args);
    const pid_t pid = fork();
    if (pid < 0) {
        plugin_error(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        execvp(cargs[0], cargs.data());
        _exit(127);
    }
    int status = 0;
    while (waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) {
            plugin_error(std::string("waitpid failed: ") + std::strerror(errno));
        }
    }
    if (WIFSIGNALED(status)) {
        plugin_error("'" + argv[0] + "' terminated by signal " + std::to_string(WTERMSIG(status)));
    }
    const int code = WEXITSTATUS(status);
    if (code == 127) {
        plugin_error("cannot execute '" + argv[0] + "'");
    }
    return code;
}

PluginGenerator::PluginGenerator(std::string command) : command_(std::move(command)) {
    ignore_sigpipe();
    int in[2];
    int out[2];
    if (pipe(in) != 0 || pipe(out) != 0) {
        plugin_error(std::string("pipe failed: ") + std::strerror(errno));
    }
    const pid_t pid = fork();
    if (pid < 0) {
        plugin_error(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        dup2(in[0], STDIN_FILENO);
        dup2(out[1], STDOUT_FILENO);
        close(in[0]);
        close(in[1]);
        close(out[0]);
        close(out[1]);
        execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(in[0]);
    close(out[1]);
    fcntl(in[1], F_SETFD, FD_CLOEXEC);
    fcntl(out[0], F_SETFD, FD_CLOEXEC);
    pid_ = pid;
    toChild_ = in[1];
    fromChild_ = out[0];
}

PluginGenerator::~PluginGenerator() {
    shutdown();
}

void PluginGenerator::shutdown() noexcept {
    if (toChild_ >= 0) {
        close(toChild_);
        toChild_ = -1;
    }
    if (fromChild_ >= 0) {
        close(fromChild_);
        fromChild_ = -1;
    }
    if (pid_ > 0) {
        int status = 0;
        waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

std::string PluginGenerator::complete(const std::string& prompt, const SamplingConfig& /*cfg*/,
                                      std::uint64_t /*seed*/, const ClauseGrammar* /*grammar*/) {
    if (toChild_ < 0) {
        plugin_error("generator plugin '" + command_ + "' is no longer running");
    }
    if (prompt.find('\n') != std::string::npos) {
        plugin_error("prompt contains a newline");
    }
    const std::string line = prompt + "\n";
    std::size_t written = 0;
    while (written < line.size()) {
        const ssize_t n = write(toChild_, line.data() + written, line.size() - written);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            shutdown();
            plugin_error("generator plugin '" + command_ + "' closed its input");
        }
        written += static_cast<std::size_t>(n);
    }
    while (true) {
        const auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string response = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!response.empty() && response.back() == '\r') {
                response.pop_back();
            }
            if (response.rfind(prompt, 0) != 0) {
                response = prompt + response;
            }
            return response;
        }
        char chunk[4096];
        const ssize_t n = read(fromChild_, chunk, sizeof(chunk));
        if (n < 0 && errno == EINTR) {
            continue;
        }
        if (n <= 0) {
            shutdown();
            plugin_error("generator plugin '" + command_ + "' exited without answering");
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

}  // namespace tabsynth
