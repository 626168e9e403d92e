#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "carmsim/agent.hpp"
#include "carmsim/framing.hpp"

namespace carmsim {

/// Bidirectional newline-delimited byte channel. Failures throw TransportError.
class LineChannel {
public:
    virtual ~LineChannel() = default;
    virtual void send_line(std::string_view line) = 0;
    /// Next line without its terminator.
    virtual std::string receive_line(std::chrono::milliseconds timeout) = 0;
    virtual std::string describe() const = 0;
};

/// Child process speaking frames on its stdin/stdout; stderr is inherited.
class SubprocessChannel : public LineChannel {
public:
    explicit SubprocessChannel(const std::vector<std::string>& argv);
    ~SubprocessChannel() override;
    SubprocessChannel(const SubprocessChannel&) = delete;
    SubprocessChannel& operator=(const SubprocessChannel&) = delete;

    void send_line(std::string_view line) override;
    std::string receive_line(std::chrono::milliseconds timeout) override;
    std::string describe() const override;

private:
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string command_;
    std::string pending_;
};

class TcpChannel : public LineChannel {
public:
    TcpChannel(const std::string& host, std::uint16_t port);
    ~TcpChannel() override;
    TcpChannel(const TcpChannel&) = delete;
    TcpChannel& operator=(const TcpChannel&) = delete;

    void send_line(std::string_view line) override;
    std::string receive_line(std::chrono::milliseconds timeout) override;
    std::string describe() const override;

private:
    int fd_ = -1;
    std::string endpoint_;
    std::string pending_;
};

struct WireOptions {
    std::chrono::milliseconds timeout{120'000};
    /// Adds the current isocenter to request frames. Test mode only: it lets
    /// an out-of-process oracle reproduce the in-process policy.
    bool include_pose = false;
};

/// Agent backed by a frame channel: one request, one reply, in order.
/// An error frame from the peer becomes AgentReply::error; timeouts,
/// closed streams, malformed or mismatched frames and empty replies throw
/// TransportError.
class WireAgent : public Agent {
public:
    WireAgent(std::unique_ptr<LineChannel> channel, WireOptions options = {});
    AgentReply respond(const AgentRequest& request) override;

private:
    std::unique_ptr<LineChannel> channel_;
    WireOptions options_;
};

std::unique_ptr<Agent> serve_subprocess(const std::vector<std::string>& argv, WireOptions options = {});
std::unique_ptr<Agent> connect_tcp(const std::string& host, std::uint16_t port, WireOptions options = {});

/// Test-mode file for external oracle clients: landmark table, volume extent
/// and per-episode targets.
struct GroundTruth {
    LandmarkSet landmarks;
    Vec3 extent_mm = Vec3::Zero();
    std::map<std::string, int> targets;
};

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth);
GroundTruth load_ground_truth(const std::filesystem::path& path);

}  // namespace carmsim
