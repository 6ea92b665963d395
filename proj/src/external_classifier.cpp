#include "renalwsi/external_classifier.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include <json.hpp>

#include "renalwsi/base64.hpp"
#include "renalwsi/errors.hpp"
#include "renalwsi/png_io.hpp"

namespace renal {

using nlohmann::json;

namespace {

std::once_flag g_sigpipe_once;

void ignore_sigpipe() {
    std::call_once(g_sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - Clock::now());
    return static_cast<int>(std::max<std::int64_t>(0, left.count()));
}

} // namespace

class ExternalProcess {
public:
    explicit ExternalProcess(const std::string& command) {
        ignore_sigpipe();

        int to_child[2], from_child[2];
        if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
            throw io_error("failed to create pipes for external classifier");
        }
        pid_ = ::fork();
        if (pid_ < 0) throw io_error("failed to fork external classifier");
        if (pid_ == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            ::execl("/bin/sh", "sh", "-c", command.c_str(), nullptr);
            ::_exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        stdin_fd_ = to_child[1];
        stdout_fd_ = from_child[0];
    }

    ~ExternalProcess() {
        if (stdin_fd_ >= 0) ::close(stdin_fd_);
        if (stdout_fd_ >= 0) ::close(stdout_fd_);
        if (pid_ > 0) {
            ::kill(pid_, SIGKILL);
            int status = 0;
            ::waitpid(pid_, &status, 0);
        }
    }

    ExternalProcess(const ExternalProcess&) = delete;
    ExternalProcess& operator=(const ExternalProcess&) = delete;

    void send_line(const std::string& line, Clock::time_point deadline) {
        std::string payload = line;
        payload.push_back('\n');
        std::size_t sent = 0;
        while (sent < payload.size()) {
            struct pollfd pfd{stdin_fd_, POLLOUT, 0};
            const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
            if (rc == 0) throw classification_error("external classifier write timeout");
            if (rc < 0) throw io_error("poll failed on external classifier pipe");
            const ssize_t n =
                ::write(stdin_fd_, payload.data() + sent, payload.size() - sent);
            if (n < 0) {
                if (errno == EPIPE) {
                    throw classification_error(
                        "external classifier process exited (broken pipe): " +
                        exit_diagnostic());
                }
                throw io_error(std::string("write to external classifier failed: ") +
                               std::strerror(errno));
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    std::string read_line(Clock::time_point deadline) {
        for (;;) {
            const std::size_t pos = buffer_.find('\n');
            if (pos != std::string::npos) {
                std::string line = buffer_.substr(0, pos);
                buffer_.erase(0, pos + 1);
                return line;
            }
            struct pollfd pfd{stdout_fd_, POLLIN, 0};
            const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
            if (rc == 0) {
                throw classification_error("external classifier response timeout");
            }
            if (rc < 0) throw io_error("poll failed on external classifier pipe");
            char chunk[4096];
            const ssize_t n = ::read(stdout_fd_, chunk, sizeof(chunk));
            if (n < 0) {
                throw io_error(std::string("read from external classifier failed: ") +
                               std::strerror(errno));
            }
            if (n == 0) {
                throw classification_error(
                    "external classifier process exited mid-stream: " +
                    exit_diagnostic());
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    std::string exit_diagnostic() {
        int status = 0;
        const pid_t r = ::waitpid(pid_, &status, WNOHANG);
        if (r == pid_) {
            pid_ = -1;
            if (WIFEXITED(status)) {
                return "exit code " + std::to_string(WEXITSTATUS(status));
            }
            if (WIFSIGNALED(status)) {
                return "killed by signal " + std::to_string(WTERMSIG(status));
            }
        }
        return "status unknown";
    }

    pid_t pid_ = -1;
    int stdin_fd_ = -1;
    int stdout_fd_ = -1;
    std::string buffer_;
};

namespace {

json expect_json(const std::string& line, const char* stage) {
    try {
        return json::parse(line);
    } catch (const json::parse_error& e) {
        throw protocol_error(std::string("external classifier sent malformed JSON "
                                         "during ") +
                             stage + ": " + e.what());
    }
}

std::unique_ptr<ExternalProcess> launch_and_handshake(
    const ExternalBackendOptions& options) {
    auto proc = std::make_unique<ExternalProcess>(options.command);

    json classes = json::array();
    for (const ClassLabel c : all_labels()) classes.push_back(label_name(c));
    const json hello = {{"type", "hello"},
                        {"patch_size", options.patch_size},
                        {"classes", classes}};

    const auto deadline =
        Clock::now() + std::chrono::duration_cast<Clock::duration>(
                           std::chrono::duration<double>(options.timeout_seconds));
    proc->send_line(hello.dump(), deadline);
    const json reply = expect_json(proc->read_line(deadline), "handshake");
    if (!reply.contains("type") || reply["type"] != "ready") {
        throw protocol_error("external classifier handshake failed: expected "
                             "{\"type\":\"ready\"}, got " +
                             reply.dump());
    }
    return proc;
}

} // namespace

ExternalClassifier::ExternalClassifier(ExternalBackendOptions options)
    : options_(std::move(options)) {
    if (options_.command.empty()) {
        throw config_error("external classifier needs a command");
    }
    if (options_.workers < 1) throw config_error("external workers must be >= 1");
    if (!(options_.timeout_seconds > 0)) {
        throw config_error("external timeout must be positive");
    }
    for (int i = 0; i < options_.workers; ++i) {
        idle_.push_back(launch_and_handshake(options_));
    }
}

ExternalClassifier::~ExternalClassifier() = default;

ClassDistribution ExternalClassifier::classify(const Patch& patch) {
    std::unique_ptr<ExternalProcess> proc;
    int id = 0;
    {
        std::unique_lock lock(mutex_);
        idle_cv_.wait(lock, [&] { return !idle_.empty(); });
        proc = std::move(idle_.back());
        idle_.pop_back();
        id = next_id_++;
    }

    const std::string where = "patch id " + std::to_string(id) + " at (" +
                              std::to_string(patch.coord.x) + "," +
                              std::to_string(patch.coord.y) + ")";
    auto release = [&] {
        std::lock_guard lock(mutex_);
        idle_.push_back(std::move(proc));
        idle_cv_.notify_one();
    };

    try {
        const json request = {{"type", "classify"},
                              {"id", id},
                              {"png_b64", base64_encode(encode_png(patch.pixels))}};
        const auto deadline =
            Clock::now() + std::chrono::duration_cast<Clock::duration>(
                               std::chrono::duration<double>(options_.timeout_seconds));
        proc->send_line(request.dump(), deadline);
        const json reply = expect_json(proc->read_line(deadline), "classification");

        if (!reply.contains("type") || reply["type"] != "probs") {
            throw protocol_error("external classifier sent unknown message type for " +
                                 where + ": " + reply.dump());
        }
        if (!reply.contains("id") || reply["id"].get<int>() != id) {
            throw protocol_error("external classifier id mismatch for " + where +
                                 ": got " + reply.value("id", json()).dump());
        }
        const auto& probs = reply.at("probs");
        if (!probs.is_array() || probs.size() != kNumClasses) {
            throw protocol_error("external classifier probs must hold " +
                                 std::to_string(kNumClasses) + " values for " + where);
        }
        ClassDistribution dist;
        for (int i = 0; i < kNumClasses; ++i) dist.probs[i] = probs[i].get<double>();
        try {
            dist.validate();
        } catch (const validation_error& e) {
            throw classification_error("external classifier returned an invalid "
                                       "distribution for " +
                                       where + ": " + e.what());
        }
        release();
        return dist;
    } catch (const json::exception& e) {
        throw protocol_error("external classifier reply unreadable for " + where +
                             ": " + e.what());
    } catch (const classification_error& e) {
        throw classification_error(std::string(e.what()) +
                                   (std::string(e.what()).find(where) == std::string::npos
                                        ? " [" + where + "]"
                                        : ""));
    }
    // Note: on error the worker process is dropped rather than returned to the
    // idle pool; a poisoned stream must not serve further requests.
}

} // namespace renal
