#include "carmsim/conformance.hpp"

#include <fstream>

#include <json.hpp>

#include "carmsim/error.hpp"
#include "carmsim/framing.hpp"
#include "carmsim/protocol.hpp"

namespace carmsim {
namespace {

using nlohmann::json;

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    std::vector<json> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw Error(ErrorKind::parse, path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

const char* frame_type(const Frame& f) {
    if (std::holds_alternative<RequestFrame>(f)) return "request";
    if (std::holds_alternative<ReplyFrame>(f)) return "reply";
    return "error";
}

}  // namespace

std::vector<VectorResult> check_protocol_vectors(
    const std::filesystem::path& path, const LandmarkSchema& schema,
    const std::optional<std::map<std::string, std::optional<std::string>>>& outputs) {
    std::vector<VectorResult> results;
    for (const auto& v : read_jsonl(path)) {
        VectorResult r;
        try {
            r.id = v.at("id").get<std::string>();
            const bool expect_ok = v.at("expect").get<std::string>() == "ok";
            std::optional<std::string> canonical;
            std::string reason;
            if (outputs) {
                const auto it = outputs->find(r.id);
                if (it == outputs->end()) {
                    r.detail = "no output for this vector";
                    results.push_back(r);
                    continue;
                }
                canonical = it->second;
            } else {
                const auto parsed = parse_response(v.at("input").get<std::string>(), schema);
                if (const auto* ok = std::get_if<ParsedResponse>(&parsed)) {
                    canonical = serialize(ok->response);
                    if (expect_ok && v.contains("landmark_index") &&
                        ok->response.landmark_index != v.at("landmark_index").get<int>()) {
                        r.detail = "landmark index " + std::to_string(ok->response.landmark_index);
                        results.push_back(r);
                        continue;
                    }
                } else {
                    reason = std::get<ParseError>(parsed).reason;
                }
            }
            if (expect_ok) {
                const auto want = v.at("canonical").get<std::string>();
                r.passed = canonical && *canonical == want;
                if (!r.passed) r.detail = canonical ? "got " + *canonical : "rejected: " + reason;
            } else {
                r.passed = !canonical;
                if (!r.passed) {
                    r.detail = "accepted invalid input as " + *canonical;
                } else if (!outputs && v.contains("reason") && reason != v.at("reason").get<std::string>()) {
                    r.passed = false;
                    r.detail = "reason '" + reason + "'";
                }
            }
        } catch (const json::exception& e) {
            r.detail = std::string("malformed vector: ") + e.what();
        }
        results.push_back(r);
    }
    return results;
}

std::map<std::string, std::optional<std::string>> load_protocol_outputs(const std::filesystem::path& path) {
    std::map<std::string, std::optional<std::string>> out;
    for (const auto& v : read_jsonl(path)) {
        try {
            const auto& c = v.at("canonical");
            out[v.at("id").get<std::string>()] = c.is_null() ? std::nullopt : std::optional(c.get<std::string>());
        } catch (const json::exception& e) {
            throw Error(ErrorKind::parse, path.string() + ": " + e.what());
        }
    }
    return out;
}

std::vector<VectorResult> check_frame_vectors(const std::filesystem::path& path) {
    std::vector<VectorResult> results;
    for (const auto& v : read_jsonl(path)) {
        VectorResult r;
        try {
            r.id = v.at("id").get<std::string>();
            const bool expect_ok = v.at("expect").get<std::string>() == "ok";
            const auto line = v.at("line").get<std::string>();
            try {
                const Frame f = decode_frame(line);
                if (!expect_ok) {
                    r.detail = std::string("accepted invalid frame as ") + frame_type(f);
                } else if (v.at("type").get<std::string>() != frame_type(f)) {
                    r.detail = std::string("decoded as ") + frame_type(f);
                } else if (encode_frame(f) != v.at("canonical").get<std::string>()) {
                    r.detail = "re-encoded frame differs: " + encode_frame(f);
                } else {
                    r.passed = true;
                }
            } catch (const FrameError& e) {
                r.passed = !expect_ok;
                if (!r.passed) r.detail = std::string("rejected: ") + e.what();
            }
        } catch (const json::exception& e) {
            r.detail = std::string("malformed vector: ") + e.what();
        }
        results.push_back(r);
    }
    return results;
}

}  // namespace carmsim
