#include "carmsim/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>

namespace carmsim {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool iequals_at(std::string_view text, std::size_t pos, std::string_view word) {
    if (pos + word.size() > text.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[pos + i])) != word[i]) return false;
    }
    return true;
}

std::size_t ifind(std::string_view text, std::string_view word, std::size_t from) {
    for (std::size_t pos = from; pos + word.size() <= text.size(); ++pos) {
        if (iequals_at(text, pos, word)) return pos;
    }
    return std::string_view::npos;
}

struct Attribute {
    std::string name;  // lower-case
    std::string value;
    std::size_t offset;
};

// Cursor over one candidate block. Every failure is reported as ParseError.
class BlockParser {
public:
    BlockParser(std::string_view text, std::size_t start, const LandmarkSchema& schema)
        : text_(text), pos_(start), schema_(schema) {}

    std::variant<ParsedResponse, ParseError> run() {
        ParsedResponse out;
        out.offset = pos_;
        pos_ += std::string_view("<response").size();
        if (!skip_space_then('>')) return fail("expected '>' after <response");

        std::optional<std::size_t> landmark_at, move_at;
        bool have_reasoning = false;
        std::optional<int> index_attr;
        std::size_t index_offset = 0;
        std::string name;
        std::size_t name_offset = 0;
        std::vector<Attribute> move_attrs;

        while (true) {
            skip_space();
            if (pos_ >= text_.size()) return fail("unterminated <response> block");
            if (text_[pos_] != '<') return fail("unexpected text inside <response>");
            const std::size_t tag_at = pos_;
            if (text_.size() - pos_ < std::string_view("</response").size() &&
                iequals_at(std::string_view("</response"), 0, text_.substr(pos_))) {
                return fail("unterminated <response> block");
            }
            if (iequals_at(text_, pos_, "</response")) {
                pos_ += std::string_view("</response").size();
                if (!skip_space_then('>')) return fail("expected '>' after </response");
                break;
            }
            if (iequals_at(text_, pos_, "<landmark")) {
                if (landmark_at) return fail("duplicate <landmark> element");
                landmark_at = tag_at;
                pos_ += std::string_view("<landmark").size();
                std::vector<Attribute> attrs;
                bool self_closing = false;
                if (auto err = attributes(attrs, self_closing)) return *err;
                if (self_closing) return fail_at(tag_at, "<landmark> must contain a name");
                for (const auto& a : attrs) {
                    if (a.name != "index") continue;
                    int value = 0;
                    const auto trimmed = trim(a.value);
                    const auto* end = trimmed.data() + trimmed.size();
                    auto [p, ec] = std::from_chars(trimmed.data(), end, value);
                    if (ec != std::errc{} || p != end || value < 1 || value > kLandmarkCount) {
                        return fail_at(a.offset, "landmark index '" + a.value + "' is not in 1..14");
                    }
                    index_attr = value;
                    index_offset = a.offset;
                }
                name_offset = pos_;
                auto content = element_text("</landmark");
                if (!content) return fail_at(text_error_at_, text_error_ + " <landmark> element");
                name = std::string(trim(*content));
            } else if (iequals_at(text_, pos_, "<reasoning")) {
                if (have_reasoning) return fail("duplicate <reasoning> element");
                have_reasoning = true;
                pos_ += std::string_view("<reasoning").size();
                std::vector<Attribute> attrs;
                bool self_closing = false;
                if (auto err = attributes(attrs, self_closing)) return *err;
                if (!self_closing) {
                    auto content = element_text("</reasoning");
                    if (!content) return fail_at(text_error_at_, text_error_ + " <reasoning> element");
                    out.response.reasoning = std::move(*content);
                }
            } else if (iequals_at(text_, pos_, "<move")) {
                if (move_at) return fail("duplicate <move> element");
                move_at = tag_at;
                pos_ += std::string_view("<move").size();
                bool self_closing = false;
                if (auto err = attributes(move_attrs, self_closing)) return *err;
                if (!self_closing) {
                    skip_space();
                    if (!iequals_at(text_, pos_, "</move")) return fail("expected </move>");
                    pos_ += std::string_view("</move").size();
                    if (!skip_space_then('>')) return fail("expected '>' after </move");
                }
            } else {
                return fail("unknown element inside <response>");
            }
        }

        if (!landmark_at) return fail_at(out.offset, "missing <landmark> element");
        if (!move_at) return fail_at(out.offset, "missing <move> element");

        const auto resolved = schema_.resolve(name);
        if (!resolved) return fail_at(name_offset, "unresolvable landmark name '" + name + "'");
        if (index_attr && *index_attr != *resolved) {
            return fail_at(index_offset, "landmark index " + std::to_string(*index_attr) + " does not match name '" +
                                             name + "' (landmark " + std::to_string(*resolved) + ")");
        }
        out.response.landmark_index = *resolved;
        out.response.landmark_name = name;

        std::optional<XDirection> x_dir;
        std::optional<YDirection> y_dir;
        std::optional<Magnitude> x_mag, y_mag;
        for (const auto& a : move_attrs) {
            const auto token = trim(a.value);
            if (a.name == "x_dir") {
                x_dir = parse_x_direction(token);
                if (!x_dir) return fail_at(a.offset, "unknown enum token '" + a.value + "' for x_dir");
            } else if (a.name == "y_dir") {
                y_dir = parse_y_direction(token);
                if (!y_dir) return fail_at(a.offset, "unknown enum token '" + a.value + "' for y_dir");
            } else if (a.name == "x_mag") {
                x_mag = parse_magnitude(token);
                if (!x_mag) return fail_at(a.offset, "unknown enum token '" + a.value + "' for x_mag");
            } else if (a.name == "y_mag") {
                y_mag = parse_magnitude(token);
                if (!y_mag) return fail_at(a.offset, "unknown enum token '" + a.value + "' for y_mag");
            }
        }
        if (!x_dir || !x_mag || !y_dir || !y_mag) {
            return fail_at(*move_at, "<move> requires x_dir, x_mag, y_dir and y_mag");
        }

        MotionCommand cmd{*x_dir, *x_mag, *y_dir, *y_mag};
        if ((cmd.x_dir == XDirection::center) != (cmd.x_mag == Magnitude::none)) {
            out.warnings.push_back("x axis: " + std::string(to_string(cmd.x_dir)) + "/" +
                                   std::string(to_string(cmd.x_mag)) + " canonicalized to CENTER/NONE");
            cmd.x_dir = XDirection::center;
            cmd.x_mag = Magnitude::none;
        }
        if ((cmd.y_dir == YDirection::center) != (cmd.y_mag == Magnitude::none)) {
            out.warnings.push_back("y axis: " + std::string(to_string(cmd.y_dir)) + "/" +
                                   std::string(to_string(cmd.y_mag)) + " canonicalized to CENTER/NONE");
            cmd.y_dir = YDirection::center;
            cmd.y_mag = Magnitude::none;
        }
        out.response.command = cmd;
        return out;
    }

private:
    static std::string_view trim(std::string_view s) {
        while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
        while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
        return s;
    }

    void skip_space() {
        while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
    }

    bool skip_space_then(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    ParseError fail(std::string reason) const { return {std::min(pos_, text_.size()), std::move(reason)}; }
    ParseError fail_at(std::size_t at, std::string reason) const { return {at, std::move(reason)}; }

    // Parses attributes up to '>' or '/>'; the tag name has been consumed.
    std::optional<ParseError> attributes(std::vector<Attribute>& attrs, bool& self_closing) {
        if (pos_ < text_.size() && !is_space(text_[pos_]) && text_[pos_] != '>' && text_[pos_] != '/') {
            return fail("malformed tag name");
        }
        while (true) {
            skip_space();
            if (pos_ >= text_.size()) return fail("unterminated tag");
            const char c = text_[pos_];
            if (c == '>') {
                ++pos_;
                self_closing = false;
                return std::nullopt;
            }
            if (c == '/') {
                ++pos_;
                if (pos_ < text_.size() && text_[pos_] == '>') {
                    ++pos_;
                    self_closing = true;
                    return std::nullopt;
                }
                return fail("expected '>' after '/'");
            }
            const std::size_t name_start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' || text_[pos_] == '-')) {
                ++pos_;
            }
            if (pos_ == name_start) return fail("malformed attribute");
            std::string name(text_.substr(name_start, pos_ - name_start));
            std::transform(name.begin(), name.end(), name.begin(),
                           [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
            if (!skip_space_then('=')) return fail("expected '=' after attribute name");
            skip_space();
            if (pos_ >= text_.size() || (text_[pos_] != '"' && text_[pos_] != '\'')) {
                return fail("attribute value must be quoted");
            }
            const char quote = text_[pos_++];
            const std::size_t value_start = pos_;
            const auto close = text_.find(quote, pos_);
            if (close == std::string_view::npos) return fail_at(value_start, "unterminated attribute value");
            std::string value;
            if (!xml_unescape(text_.substr(value_start, close - value_start), value)) {
                return fail_at(value_start, "malformed character reference");
            }
            for (const auto& a : attrs) {
                if (a.name == name) return fail_at(name_start, "duplicate attribute '" + name + "'");
            }
            attrs.push_back({std::move(name), std::move(value), value_start});
            pos_ = close + 1;
        }
    }

    // Reads text up to the closing tag (case-insensitive) and consumes it.
    // On failure text_error_ holds a reason prefix and text_error_at_ its offset.
    std::optional<std::string> element_text(std::string_view closing) {
        const auto end = ifind(text_, closing, pos_);
        const auto markup = text_.find('<', pos_);
        if (markup != std::string_view::npos && (end == std::string_view::npos || markup < end)) {
            text_error_at_ = markup;
            text_error_ = end == std::string_view::npos ? "unterminated" : "markup inside";
            return std::nullopt;
        }
        if (end == std::string_view::npos) {
            text_error_at_ = pos_;
            text_error_ = "unterminated";
            return std::nullopt;
        }
        std::string value;
        if (!xml_unescape(text_.substr(pos_, end - pos_), value)) {
            text_error_at_ = pos_;
            text_error_ = "invalid entity reference in";
            return std::nullopt;
        }
        pos_ = end + closing.size();
        if (!skip_space_then('>')) {
            text_error_at_ = pos_;
            text_error_ = "malformed closing tag of";
            return std::nullopt;
        }
        return value;
    }

    std::string text_error_;
    std::size_t text_error_at_ = 0;

    std::string_view text_;
    std::size_t pos_;
    const LandmarkSchema& schema_;
};

}  // namespace

std::string xml_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    out += "&#" + std::to_string(static_cast<unsigned char>(c)) + ";";
                } else {
                    out.push_back(c);
                }
        }
    }
    return out;
}

bool xml_unescape(std::string_view text, std::string& out) {
    out.clear();
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '&') {
            out.push_back(text[i]);
            continue;
        }
        const auto semi = text.find(';', i);
        if (semi == std::string_view::npos || semi - i > 8) return false;
        const auto entity = text.substr(i + 1, semi - i - 1);
        if (entity == "amp") {
            out.push_back('&');
        } else if (entity == "lt") {
            out.push_back('<');
        } else if (entity == "gt") {
            out.push_back('>');
        } else if (entity == "quot") {
            out.push_back('"');
        } else if (entity == "apos") {
            out.push_back('\'');
        } else if (entity.size() >= 2 && entity[0] == '#') {
            unsigned value = 0;
            const bool hex = entity[1] == 'x' || entity[1] == 'X';
            const auto digits = entity.substr(hex ? 2 : 1);
            if (digits.empty()) return false;
            auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, hex ? 16 : 10);
            if (ec != std::errc{} || p != digits.data() + digits.size() || value > 0xFF) return false;
            out.push_back(static_cast<char>(value));
        } else {
            return false;
        }
        i = semi;
    }
    return true;
}

std::string serialize(const AgentResponse& r) {
    std::string out = "<response><landmark index=\"";
    out += std::to_string(r.landmark_index);
    out += "\">";
    out += xml_escape(r.landmark_name);
    out += "</landmark><reasoning>";
    out += xml_escape(r.reasoning);
    out += "</reasoning><move x_dir=\"";
    out += to_string(r.command.x_dir);
    out += "\" x_mag=\"";
    out += to_string(r.command.x_mag);
    out += "\" y_dir=\"";
    out += to_string(r.command.y_dir);
    out += "\" y_mag=\"";
    out += to_string(r.command.y_mag);
    out += "\"/></response>";
    return out;
}

ResponseParseResult parse_response(std::string_view text, const LandmarkSchema& schema) {
    std::optional<ParseError> first_error;
    std::size_t from = 0;
    while (true) {
        const auto start = ifind(text, "<response", from);
        if (start == std::string_view::npos) break;
        const std::size_t after = start + std::string_view("<response").size();
        // Must be the element itself, not e.g. "<responses>".
        if (after < text.size() && (is_space(text[after]) || text[after] == '>')) {
            auto result = BlockParser(text, start, schema).run();
            if (std::holds_alternative<ParsedResponse>(result)) return result;
            if (!first_error) first_error = std::get<ParseError>(std::move(result));
        } else if (after >= text.size() && !first_error) {
            first_error = ParseError{start, "unterminated <response> block"};
        }
        from = start + 1;
    }
    if (first_error) return *first_error;
    return ParseError{0, "missing <response> block"};
}

}  // namespace carmsim
