#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "carmsim/error.hpp"
#include "carmsim/landmarks.hpp"
#include "carmsim/motion.hpp"

namespace carmsim {

/// Two-stage agent response: nearest landmark, free-text reasoning and a
/// motion command.
struct AgentResponse {
    int landmark_index = 1;
    std::string landmark_name;
    std::string reasoning;
    MotionCommand command;

    bool operator==(const AgentResponse&) const = default;
};

/// Canonical single-line form:
///
///   <response><landmark index="I">NAME</landmark><reasoning>TEXT</reasoning>
///   <move x_dir="DX" x_mag="EX" y_dir="DY" y_mag="EY"/></response>
///
/// (no line break). Text content escapes & < > and control characters as
/// XML character references.
std::string serialize(const AgentResponse& response);

struct ParsedResponse {
    AgentResponse response;
    /// Canonicalization notes, e.g. "x axis: LEFT/NONE canonicalized to CENTER/NONE".
    std::vector<std::string> warnings;
    /// Byte offset of the accepted <response> block.
    std::size_t offset = 0;
};

using ResponseParseResult = std::variant<ParsedResponse, ParseError>;

/// Extracts the first well-formed <response> block from arbitrary text.
///
/// Tolerates surrounding prose, whitespace between elements, element order,
/// tag case, enum case, single or double attribute quotes and unknown
/// attributes. A per-axis CENTER/NONE mismatch is canonicalized to
/// CENTER/NONE with a warning. Never throws; every failure is a ParseError
/// with the byte offset of the offending token (or of the first rejected
/// block when several are present).
ResponseParseResult parse_response(std::string_view text, const LandmarkSchema& schema);

std::string xml_escape(std::string_view text);
/// Returns false on a malformed entity.
bool xml_unescape(std::string_view text, std::string& out);

}  // namespace carmsim
