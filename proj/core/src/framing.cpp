#include "carmsim/framing.hpp"

#include <algorithm>

#include <json.hpp>
#include <openssl/evp.h>

#include "carmsim/image_io.hpp"

namespace carmsim {
namespace {

using nlohmann::json;

json optional_text(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::string> read_optional_text(const json& doc, const char* key) {
    if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
    return doc.at(key).get<std::string>();
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) return {};
    std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.empty()) return {};
    if (text.size() % 4 != 0) throw FrameError("base64 length is not a multiple of 4");
    const bool valid = std::all_of(text.begin(), text.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '+' || c == '/' ||
               c == '=';
    });
    const auto first_pad = text.find('=');
    if (!valid || (first_pad != std::string_view::npos && first_pad < text.size() - 2) ||
        (first_pad != std::string_view::npos && text.find_first_not_of('=', first_pad) != std::string_view::npos)) {
        throw FrameError("malformed base64");
    }
    std::vector<std::uint8_t> out(text.size() / 4 * 3);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw FrameError("malformed base64");
    const auto padding = static_cast<std::size_t>(std::count(text.end() - 2, text.end(), '='));
    out.resize(static_cast<std::size_t>(n) - padding);
    return out;
}

std::string encode_frame(const Frame& frame) {
    json j;
    j["version"] = kWireVersion;
    if (const auto* req = std::get_if<RequestFrame>(&frame)) {
        j["type"] = "request";
        j["episode_id"] = req->episode_id;
        j["step"] = req->step;
        j["image"] = {{"encoding", "png"},
                      {"width", req->width},
                      {"height", req->height},
                      {"data_b64", base64_encode(req->png)}};
        j["prior_response"] = optional_text(req->prior_response);
        j["feedback"] = optional_text(req->feedback);
        j["prompt_template_id"] = req->prompt_template_id;
        if (req->isocenter_mm) {
            j["isocenter_mm"] = {req->isocenter_mm->x(), req->isocenter_mm->y(), req->isocenter_mm->z()};
        }
    } else if (const auto* rep = std::get_if<ReplyFrame>(&frame)) {
        j["type"] = "reply";
        j["episode_id"] = rep->episode_id;
        j["step"] = rep->step;
        j["raw_text"] = rep->raw_text;
    } else {
        const auto& err = std::get<ErrorFrame>(frame);
        j["type"] = "error";
        j["episode_id"] = optional_text(err.episode_id);
        j["step"] = err.step ? json(*err.step) : json(nullptr);
        j["message"] = err.message;
    }
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

Frame decode_frame(std::string_view line) {
    if (line.size() > kMaxFrameBytes) throw FrameError("frame exceeds size limit");
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw FrameError(std::string("frame is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw FrameError("frame must be a JSON object");
    try {
        if (!j.contains("version")) throw FrameError("frame has no version field");
        if (!j.at("version").is_number_integer() || j.at("version").get<int>() != kWireVersion) {
            throw FrameError("unsupported frame version " + j.at("version").dump());
        }
        const auto type = j.at("type").get<std::string>();
        if (type == "request") {
            RequestFrame f;
            f.episode_id = j.at("episode_id").get<std::string>();
            f.step = j.at("step").get<int>();
            const auto& image = j.at("image");
            if (image.at("encoding").get<std::string>() != "png") throw FrameError("image encoding must be png");
            f.width = image.at("width").get<int>();
            f.height = image.at("height").get<int>();
            f.png = base64_decode(image.at("data_b64").get<std::string>());
            f.prior_response = read_optional_text(j, "prior_response");
            f.feedback = read_optional_text(j, "feedback");
            f.prompt_template_id = j.value("prompt_template_id", std::string{});
            if (j.contains("isocenter_mm") && !j.at("isocenter_mm").is_null()) {
                const auto v = j.at("isocenter_mm").get<std::vector<double>>();
                if (v.size() != 3) throw FrameError("isocenter_mm must have three components");
                f.isocenter_mm = Vec3(v[0], v[1], v[2]);
            }
            return f;
        }
        if (type == "reply") {
            ReplyFrame f;
            f.episode_id = j.at("episode_id").get<std::string>();
            f.step = j.at("step").get<int>();
            f.raw_text = j.at("raw_text").get<std::string>();
            return f;
        }
        if (type == "error") {
            ErrorFrame f;
            f.episode_id = read_optional_text(j, "episode_id");
            if (j.contains("step") && !j.at("step").is_null()) f.step = j.at("step").get<int>();
            f.message = j.at("message").get<std::string>();
            return f;
        }
        throw FrameError("unknown frame type '" + type + "'");
    } catch (const json::exception& e) {
        throw FrameError(std::string("malformed frame: ") + e.what());
    }
}

RequestFrame make_request_frame(const AgentRequest& request, bool include_pose) {
    RequestFrame f;
    f.episode_id = request.episode_id;
    f.step = request.step;
    if (request.image) {
        f.width = request.image->cols;
        f.height = request.image->rows;
        f.png = encode_png(to_gray(*request.image));
        if (include_pose) f.isocenter_mm = request.image->pose.isocenter;
    }
    f.prior_response = request.prior_response;
    f.feedback = request.feedback;
    f.prompt_template_id = request.prompt_template_id;
    return f;
}

void FrameDecoder::feed(std::string_view bytes) {
    if (error_) return;
    buffer_.append(bytes);
    std::size_t start = 0;
    while (!error_) {
        const auto nl = buffer_.find('\n', start);
        if (nl == std::string::npos) break;
        take_line(std::string_view(buffer_).substr(start, nl - start));
        start = nl + 1;
    }
    buffer_.erase(0, start);
    if (!error_ && buffer_.size() > kMaxFrameBytes) {
        error_ = "frame exceeds size limit";
    }
    if (error_) buffer_.clear();
}

void FrameDecoder::close() {
    if (error_ || buffer_.empty()) return;
    std::string_view rest(buffer_);
    if (rest.find_first_not_of(" \t\r") != std::string_view::npos) {
        error_ = "stream ended inside a frame";
    }
    buffer_.clear();
}

void FrameDecoder::take_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) return;
    try {
        ready_.push_back(decode_frame(line));
    } catch (const FrameError& e) {
        error_ = e.what();
    }
}

std::optional<Frame> FrameDecoder::next() {
    if (read_ >= ready_.size()) {
        ready_.clear();
        read_ = 0;
        return std::nullopt;
    }
    return std::move(ready_[read_++]);
}

}  // namespace carmsim
