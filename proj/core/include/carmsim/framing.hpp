#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "carmsim/agent.hpp"

namespace carmsim {

/// Wire frames are single-line JSON objects terminated by '\n'; every frame
/// carries "version" (must equal kWireVersion) and "type".
inline constexpr int kWireVersion = 1;
inline constexpr std::size_t kMaxFrameBytes = 64u << 20;

struct RequestFrame {
    std::string episode_id;
    int step = 0;
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> png;  // decoded image bytes
    std::optional<std::string> prior_response;
    std::optional<std::string> feedback;
    std::string prompt_template_id;
    /// Present only when the harness exposes simulator state (test mode).
    std::optional<Vec3> isocenter_mm;

    bool operator==(const RequestFrame&) const = default;
};

struct ReplyFrame {
    std::string episode_id;
    int step = 0;
    std::string raw_text;

    bool operator==(const ReplyFrame&) const = default;
};

struct ErrorFrame {
    std::optional<std::string> episode_id;
    std::optional<int> step;
    std::string message;

    bool operator==(const ErrorFrame&) const = default;
};

using Frame = std::variant<RequestFrame, ReplyFrame, ErrorFrame>;

class FrameError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Serialized frame without the trailing newline.
std::string encode_frame(const Frame& frame);
/// Throws FrameError for anything that is not a valid frame of this version.
Frame decode_frame(std::string_view line);

RequestFrame make_request_frame(const AgentRequest& request, bool include_pose);

/// Incremental splitter: bytes in, frames out. After the first malformed
/// line the decoder latches the error and ignores further input, so any
/// byte stream yields zero or more frames plus at most one trailing error.
/// Blank lines and a '\r' before '\n' are tolerated.
class FrameDecoder {
public:
    void feed(std::string_view bytes);
    /// Marks end of stream; an unterminated final line becomes the error.
    void close();

    std::optional<Frame> next();
    const std::optional<std::string>& error() const noexcept { return error_; }

private:
    void take_line(std::string_view line);

    std::string buffer_;
    std::vector<Frame> ready_;
    std::size_t read_ = 0;
    std::optional<std::string> error_;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws FrameError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace carmsim
