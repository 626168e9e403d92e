#include "carmsim/gateway.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fstream>
#include <thread>

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "carmsim/error.hpp"

namespace carmsim {
namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe() {
    static const bool once = [] {
        std::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)once;
}

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

void write_all(int fd, std::string_view data, const std::string& peer) {
    while (!data.empty()) {
        const ssize_t n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(peer + ": " + errno_text("write failed"));
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

// Reads from fd until `pending` holds a full line or the deadline passes.
std::string read_line(int fd, std::string& pending, std::chrono::milliseconds timeout, const std::string& peer) {
    const auto deadline = Clock::now() + timeout;
    for (;;) {
        if (const auto nl = pending.find('\n'); nl != std::string::npos) {
            std::string line = pending.substr(0, nl);
            pending.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        if (pending.size() > kMaxFrameBytes) throw TransportError(peer + ": reply frame exceeds size limit");
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (left.count() <= 0) {
            throw TransportError(peer + ": timed out after " + std::to_string(timeout.count()) + " ms waiting for reply");
        }
        pollfd p{fd, POLLIN, 0};
        const int rc = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1'000'000)));
        if (rc < 0) {
            if (errno == EINTR) continue;
            throw TransportError(peer + ": " + errno_text("poll failed"));
        }
        if (rc == 0) continue;
        char buf[65536];
        const ssize_t n = ::read(fd, buf, sizeof buf);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            throw TransportError(peer + ": " + errno_text("read failed"));
        }
        if (n == 0) {
            std::string msg = peer + ": stream closed";
            if (!pending.empty()) msg += " inside a frame (" + std::to_string(pending.size()) + " bytes pending)";
            throw TransportError(msg);
        }
        pending.append(buf, static_cast<std::size_t>(n));
    }
}

std::string join(const std::vector<std::string>& argv) {
    std::string out;
    for (const auto& a : argv) {
        if (!out.empty()) out += ' ';
        out += a;
    }
    return out;
}

}  // namespace

SubprocessChannel::SubprocessChannel(const std::vector<std::string>& argv) : command_(join(argv)) {
    if (argv.empty()) throw TransportError("empty agent command");
    ignore_sigpipe();
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw TransportError(errno_text("pipe failed"));
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw TransportError(errno_text("pipe failed"));
    }
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
        throw TransportError(errno_text("fork failed"));
    }
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::execvp(args[0], args.data());
        const char msg[] = "carmsim: exec of agent command failed\n";
        [[maybe_unused]] auto ignored = ::write(STDERR_FILENO, msg, sizeof msg - 1);
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
}

SubprocessChannel::~SubprocessChannel() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    if (pid_ <= 0) return;
    // Closing stdin asks the child to exit; give it a moment before killing.
    for (int i = 0; i < 100; ++i) {
        int status = 0;
        const pid_t r = ::waitpid(pid_, &status, WNOHANG);
        if (r == pid_ || r < 0) return;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    int status = 0;
    ::waitpid(pid_, &status, 0);
}

void SubprocessChannel::send_line(std::string_view line) {
    std::string framed(line);
    framed += '\n';
    write_all(to_child_, framed, describe());
}

std::string SubprocessChannel::receive_line(std::chrono::milliseconds timeout) {
    return read_line(from_child_, pending_, timeout, describe());
}

std::string SubprocessChannel::describe() const { return "subprocess '" + command_ + "'"; }

TcpChannel::TcpChannel(const std::string& host, std::uint16_t port)
    : endpoint_(host + ":" + std::to_string(port)) {
    ignore_sigpipe();
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &found);
    if (rc != 0) throw TransportError(endpoint_ + ": cannot resolve host: " + ::gai_strerror(rc));
    std::string last_error = "no addresses";
    for (addrinfo* a = found; a != nullptr; a = a->ai_next) {
        const int fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
        if (fd < 0) {
            last_error = errno_text("socket failed");
            continue;
        }
        if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) {
            const int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            fd_ = fd;
            break;
        }
        last_error = errno_text("connect failed");
        ::close(fd);
    }
    ::freeaddrinfo(found);
    if (fd_ < 0) throw TransportError(endpoint_ + ": " + last_error);
}

TcpChannel::~TcpChannel() {
    if (fd_ >= 0) ::close(fd_);
}

void TcpChannel::send_line(std::string_view line) {
    std::string framed(line);
    framed += '\n';
    write_all(fd_, framed, describe());
}

std::string TcpChannel::receive_line(std::chrono::milliseconds timeout) {
    return read_line(fd_, pending_, timeout, describe());
}

std::string TcpChannel::describe() const { return "tcp " + endpoint_; }

WireAgent::WireAgent(std::unique_ptr<LineChannel> channel, WireOptions options)
    : channel_(std::move(channel)), options_(options) {
    if (!channel_) throw TransportError("wire agent needs a channel");
    if (options_.timeout.count() <= 0) throw Error(ErrorKind::config, "timeout must be positive");
}

AgentReply WireAgent::respond(const AgentRequest& request) {
    const auto start = Clock::now();
    std::string line;
    try {
        line = encode_frame(make_request_frame(request, options_.include_pose));
    } catch (const std::exception& e) {
        throw TransportError(std::string("cannot encode request: ") + e.what());
    }
    channel_->send_line(line);
    const std::string raw = channel_->receive_line(options_.timeout);
    const double latency = std::chrono::duration<double, std::milli>(Clock::now() - start).count();

    Frame frame;
    try {
        frame = decode_frame(raw);
    } catch (const FrameError& e) {
        const auto preview = raw.substr(0, 120);
        throw TransportError(channel_->describe() + ": malformed reply frame (" + e.what() + "): " + preview);
    }
    const std::string where = " for episode '" + request.episode_id + "' step " + std::to_string(request.step);
    if (const auto* err = std::get_if<ErrorFrame>(&frame)) {
        if ((err->episode_id && *err->episode_id != request.episode_id) || (err->step && *err->step != request.step)) {
            throw TransportError(channel_->describe() + ": error frame does not match request" + where);
        }
        return {"", latency, err->message.empty() ? std::string("agent reported an error") : err->message};
    }
    const auto* reply = std::get_if<ReplyFrame>(&frame);
    if (reply == nullptr) throw TransportError(channel_->describe() + ": expected a reply frame" + where);
    if (reply->episode_id != request.episode_id || reply->step != request.step) {
        throw TransportError(channel_->describe() + ": reply for episode '" + reply->episode_id + "' step " +
                             std::to_string(reply->step) + " does not match request" + where);
    }
    if (reply->raw_text.empty()) throw TransportError(channel_->describe() + ": empty raw_text" + where);
    return {reply->raw_text, latency, std::nullopt};
}

std::unique_ptr<Agent> serve_subprocess(const std::vector<std::string>& argv, WireOptions options) {
    return std::make_unique<WireAgent>(std::make_unique<SubprocessChannel>(argv), options);
}

std::unique_ptr<Agent> connect_tcp(const std::string& host, std::uint16_t port, WireOptions options) {
    return std::make_unique<WireAgent>(std::make_unique<TcpChannel>(host, port), options);
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth) {
    using nlohmann::json;
    json doc;
    doc["format"] = "carmsim.ground_truth";
    doc["version"] = 1;
    doc["extent_mm"] = {truth.extent_mm.x(), truth.extent_mm.y(), truth.extent_mm.z()};
    json list = json::array();
    for (const auto& lm : truth.landmarks.landmarks()) {
        list.push_back({{"index", lm.index},
                        {"canonical_name", lm.canonical_name},
                        {"variants", lm.variants},
                        {"position_mm", {lm.position.x(), lm.position.y(), lm.position.z()}}});
    }
    doc["landmarks"] = std::move(list);
    json episodes = json::object();
    for (const auto& [id, target] : truth.targets) episodes[id] = {{"target_index", target}};
    doc["episodes"] = std::move(episodes);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
    using nlohmann::json;
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open ground truth " + path.string());
    try {
        const json doc = json::parse(in);
        if (doc.value("format", std::string{}) != "carmsim.ground_truth") {
            throw Error(ErrorKind::parse, path.string() + ": format field must be 'carmsim.ground_truth'");
        }
        std::vector<Landmark> landmarks;
        for (const auto& item : doc.at("landmarks")) {
            const auto p = item.at("position_mm").get<std::vector<double>>();
            if (p.size() != 3) throw Error(ErrorKind::validation, "position_mm must have three components");
            landmarks.push_back({item.at("index").get<int>(), item.at("canonical_name").get<std::string>(),
                                 item.at("variants").get<std::vector<std::string>>(), Vec3(p[0], p[1], p[2])});
        }
        const auto e = doc.at("extent_mm").get<std::vector<double>>();
        if (e.size() != 3) throw Error(ErrorKind::validation, "extent_mm must have three components");
        GroundTruth truth{LandmarkSet(std::move(landmarks)), Vec3(e[0], e[1], e[2]), {}};
        for (const auto& [id, ep] : doc.at("episodes").items()) truth.targets[id] = ep.at("target_index").get<int>();
        return truth;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, path.string() + ": " + e.what());
    }
}

}  // namespace carmsim
