#include "ctxpolicy/adapter.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <mutex>
#include <utility>

#include "ctxpolicy/error.hpp"
#include "ctxpolicy/text.hpp"

extern char** environ;

namespace ctxpolicy {

namespace {

class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Fd& operator=(Fd&& o) noexcept {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    ~Fd() { reset(); }

    int get() const { return fd_; }
    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

struct Pipe {
    Fd read;
    Fd write;
};

Pipe make_pipe() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) throw AdapterError(std::string("pipe failed: ") + std::strerror(errno));
    return {Fd(fds[0]), Fd(fds[1])};
}

bool is_executable(const std::filesystem::path& p) {
    struct stat st {};
    return ::stat(p.c_str(), &st) == 0 && S_ISREG(st.st_mode) && ::access(p.c_str(), X_OK) == 0;
}

}  // namespace

std::string_view to_string(AdapterRole r) {
    switch (r) {
        case AdapterRole::Ocr: return "ocr";
        case AdapterRole::TextClassifier: return "text_classifier";
        case AdapterRole::IconClassifier: return "icon_classifier";
    }
    return "unknown";
}

AdapterSpec AdapterSpec::parse(std::string_view spec, AdapterRole role) {
    auto parts = text::split_ws(spec);
    if (parts.empty()) throw InputError("empty adapter specification");
    AdapterSpec out;
    out.executable = parts.front();
    out.args.assign(parts.begin() + 1, parts.end());
    out.role = role;
    return out;
}

std::string AdapterSpec::describe() const {
    std::string s = executable;
    for (const auto& a : args) s += " " + a;
    return s;
}

std::string resolve_executable(const std::string& name) {
    if (name.find('/') != std::string::npos) {
        if (!is_executable(name)) throw AdapterError("adapter executable not found or not executable", name);
        return name;
    }
    const char* path = std::getenv("PATH");
    std::string_view dirs = path ? path : "/usr/bin:/bin";
    while (true) {
        const auto colon = dirs.find(':');
        const auto dir = dirs.substr(0, colon);
        const auto candidate = std::filesystem::path(dir.empty() ? "." : std::string(dir)) / name;
        if (is_executable(candidate)) return candidate.string();
        if (colon == std::string_view::npos) break;
        dirs.remove_prefix(colon + 1);
    }
    throw AdapterError("adapter executable not found on PATH", name);
}

ProcessResult run_process(const std::vector<std::string>& argv, std::string_view input,
                          std::chrono::milliseconds timeout) {
    if (argv.empty()) throw AdapterError("empty command line");
    const std::string exe = resolve_executable(argv.front());

    auto in_pipe = make_pipe();
    auto out_pipe = make_pipe();

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe.read.get(), STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pipe.write.get(), STDOUT_FILENO);

    std::vector<char*> cargv;
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.front() = const_cast<char*>(exe.c_str());
    cargv.push_back(nullptr);

    // Writing to a child that exits without reading stdin must surface as
    // EPIPE instead of killing the process; the child gets default handling.
    static std::once_flag sigpipe_once;
    std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    sigset_t defaults;
    sigemptyset(&defaults);
    sigaddset(&defaults, SIGPIPE);
    posix_spawnattr_setsigdefault(&attr, &defaults);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETSIGDEF);

    pid_t pid = 0;
    const int rc = ::posix_spawn(&pid, exe.c_str(), &actions, &attr, cargv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
    if (rc != 0) throw AdapterError(std::string("cannot launch adapter: ") + std::strerror(rc), exe);

    in_pipe.read.reset();
    out_pipe.write.reset();
    ::fcntl(in_pipe.write.get(), F_SETFL, O_NONBLOCK);

    ProcessResult result;
    std::size_t written = 0;
    if (input.empty()) in_pipe.write.reset();
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    bool timed_out = false;
    char buf[65536];
    while (out_pipe.read.get() >= 0) {
        const auto remaining =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (remaining.count() <= 0) {
            timed_out = true;
            break;
        }
        pollfd fds[2];
        nfds_t n = 0;
        fds[n++] = {out_pipe.read.get(), POLLIN, 0};
        if (in_pipe.write.get() >= 0) fds[n++] = {in_pipe.write.get(), POLLOUT, 0};
        const int pr = ::poll(fds, n, int(std::min<long long>(remaining.count(), 1000)));
        if (pr < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (n == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
            const auto w = ::write(in_pipe.write.get(), input.data() + written, input.size() - written);
            if (w > 0) written += std::size_t(w);
            if (w < 0 && errno != EAGAIN) in_pipe.write.reset();
            if (written == input.size()) in_pipe.write.reset();
        }
        if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
            const auto r = ::read(out_pipe.read.get(), buf, sizeof buf);
            if (r > 0) {
                result.out.append(buf, std::size_t(r));
            } else if (r == 0 || errno != EAGAIN) {
                out_pipe.read.reset();
            }
        }
    }
    in_pipe.write.reset();
    out_pipe.read.reset();

    if (timed_out) ::kill(pid, SIGKILL);
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (timed_out) throw AdapterError("adapter timed out", exe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
    return result;
}

nlohmann::json invoke_adapter(const AdapterSpec& spec, const nlohmann::json& request) {
    std::vector<std::string> argv{spec.executable};
    argv.insert(argv.end(), spec.args.begin(), spec.args.end());
    const auto res = run_process(argv, request.dump(), spec.timeout);
    if (res.exit_code != 0)
        throw AdapterError(std::string(to_string(spec.role)) + " adapter exited with code " +
                               std::to_string(res.exit_code),
                           res.out);
    nlohmann::json response;
    try {
        response = nlohmann::json::parse(res.out);
    } catch (const nlohmann::json::parse_error&) {
        throw AdapterError(std::string(to_string(spec.role)) + " adapter produced malformed JSON", res.out);
    }
    if (!response.is_object())
        throw AdapterError(std::string(to_string(spec.role)) + " adapter response is not an object", res.out);
    return response;
}

nlohmann::json make_ocr_request(const std::string& image_path) {
    return {{"role", "ocr"}, {"version", kAdapterProtocolVersion}, {"image_path", image_path}};
}

nlohmann::json make_text_classifier_request(const std::string& text) {
    nlohmann::json types = nlohmann::json::array();
    for (auto t : kAllDataTypes) types.push_back(std::string(to_string(t)));
    return {{"role", "text_classifier"}, {"version", kAdapterProtocolVersion}, {"text", text}, {"data_types", types}};
}

nlohmann::json make_icon_classifier_request(const std::string& image_path, const std::vector<std::string>& classes) {
    return {{"role", "icon_classifier"},
            {"version", kAdapterProtocolVersion},
            {"image_path", image_path},
            {"classes", classes}};
}

namespace {

bool is_unit(const nlohmann::json& v) {
    return v.is_number() && v.get<double>() >= 0.0 && v.get<double>() <= 1.0;
}

[[noreturn]] void schema_violation(const std::string& what, const nlohmann::json& payload) {
    throw AdapterError("adapter response violates schema: " + what, payload.dump());
}

}  // namespace

std::vector<WireRegion> parse_ocr_response(const nlohmann::json& response) {
    if (!response.contains("regions") || !response["regions"].is_array())
        schema_violation("missing \"regions\" array", response);
    std::vector<WireRegion> out;
    for (const auto& r : response["regions"]) {
        if (!r.is_object()) schema_violation("region is not an object", r);
        if (!r.contains("bbox") || !r["bbox"].is_array() || r["bbox"].size() != 4)
            schema_violation("bbox must be [x,y,w,h]", r);
        std::array<int, 4> v{};
        for (std::size_t k = 0; k < 4; ++k) {
            const auto& c = r["bbox"][k];
            if (!c.is_number_integer() || c.get<long long>() < 0 || c.get<long long>() > 1'000'000)
                schema_violation("bbox entries must be non-negative integers", r);
            v[k] = c.get<int>();
        }
        if (!r.contains("text") || !r["text"].is_string()) schema_violation("text must be a string", r);
        if (!r.contains("confidence") || !is_unit(r["confidence"]))
            schema_violation("confidence must be a number in [0,1]", r);
        out.push_back({BBox{v[0], v[1], v[2], v[3]}, r["text"].get<std::string>(), r["confidence"].get<double>()});
    }
    return out;
}

std::optional<DataType> parse_text_classifier_response(const nlohmann::json& response) {
    if (!response.contains("data_type")) schema_violation("missing \"data_type\"", response);
    const auto& v = response["data_type"];
    if (v.is_null()) return std::nullopt;
    if (!v.is_string()) schema_violation("data_type must be null or a string", response);
    auto t = parse_data_type(v.get<std::string>());
    if (!t) schema_violation("unknown data_type", response);
    return t;
}

WireIconClass parse_icon_classifier_response(const nlohmann::json& response) {
    if (!response.contains("class")) schema_violation("missing \"class\"", response);
    if (!response.contains("score") || !is_unit(response["score"]))
        schema_violation("score must be a number in [0,1]", response);
    WireIconClass out;
    out.score = response["score"].get<double>();
    const auto& c = response["class"];
    if (c.is_string()) {
        out.class_name = c.get<std::string>();
    } else if (!c.is_null()) {
        schema_violation("class must be null or a string", response);
    }
    return out;
}

}  // namespace ctxpolicy
