#include <gtest/gtest.h>

#include <random>

#include "carmsim/protocol.hpp"
#include "carmsim/rng.hpp"

using namespace carmsim;

namespace {

const LandmarkSchema& schema() { return LandmarkSchema::default_schema(); }

AgentResponse random_response(Engine& rng) {
    std::uniform_int_distribution<int> idx(1, kLandmarkCount), dir(0, 2), mag(1, 3), len(0, 60), byte(0, 255);
    AgentResponse r;
    r.landmark_index = idx(rng);
    const auto& variants = schema().at(r.landmark_index).variants;
    r.landmark_name = variants[std::uniform_int_distribution<std::size_t>(0, variants.size() - 1)(rng)];
    const int n = len(rng);
    for (int i = 0; i < n; ++i) r.reasoning.push_back(static_cast<char>(byte(rng)));
    r.command.x_dir = static_cast<XDirection>(dir(rng));
    r.command.y_dir = static_cast<YDirection>(dir(rng));
    r.command.x_mag = r.command.x_dir == XDirection::center ? Magnitude::none : static_cast<Magnitude>(mag(rng));
    r.command.y_mag = r.command.y_dir == YDirection::center ? Magnitude::none : static_cast<Magnitude>(mag(rng));
    return r;
}

ParsedResponse ok(const std::string& text) {
    auto r = parse_response(text, schema());
    if (auto* e = std::get_if<ParseError>(&r)) {
        ADD_FAILURE() << "rejected at " << e->offset << ": " << e->reason << "\n" << text;
        return {};
    }
    return std::get<ParsedResponse>(r);
}

ParseError err(const std::string& text) {
    auto r = parse_response(text, schema());
    if (std::holds_alternative<ParsedResponse>(r)) {
        ADD_FAILURE() << "accepted: " << text;
        return {};
    }
    return std::get<ParseError>(r);
}

const std::string kValid =
    "<response><landmark index=\"4\">Right Scapula</landmark><reasoning>r</reasoning>"
    "<move x_dir=\"RIGHT\" x_mag=\"LARGE\" y_dir=\"UP\" y_mag=\"SMALL\"/></response>";

}  // namespace

TEST(Protocol, CanonicalSerialization) {
    AgentResponse r;
    r.landmark_index = 4;
    r.landmark_name = "Right Scapula";
    r.reasoning = "r";
    r.command = {XDirection::right, Magnitude::large, YDirection::up, Magnitude::small};
    EXPECT_EQ(serialize(r), kValid);
}

TEST(Protocol, RoundTripRandomResponses) {
    auto rng = make_engine(1, "protocol-rt");
    for (int n = 0; n < 10000; ++n) {
        const auto r = random_response(rng);
        const auto text = serialize(r);
        const auto parsed = ok(text);
        ASSERT_EQ(parsed.response, r) << text;
        ASSERT_TRUE(parsed.warnings.empty());
        ASSERT_EQ(serialize(parsed.response), text);
    }
}

TEST(Protocol, ToleratesProseCaseQuotesOrderAndAttributes) {
    const auto a = ok("Sure! Here is my answer:\n  <RESPONSE>\n <Move y_mag='small' X_DIR=\"right\" x_mag=\"Large\" "
                      "y_dir='Up' confidence=\"0.9\"></move>\n<reasoning>r</reasoning>\n"
                      "<landmark index='4' extra=\"1\">  right scapula </landmark></Response> trailing words");
    EXPECT_EQ(a.response.landmark_index, 4);
    EXPECT_EQ(a.response.command, (MotionCommand{XDirection::right, Magnitude::large, YDirection::up,
                                                 Magnitude::small}));
    EXPECT_EQ(a.offset, std::string("Sure! Here is my answer:\n  ").size());
}

TEST(Protocol, IndexIsOptionalAndReasoningMayBeMissing) {
    const auto a = ok("<response><landmark>Cranium</landmark><move x_dir=\"CENTER\" x_mag=\"NONE\" "
                      "y_dir=\"DOWN\" y_mag=\"MODERATE\"/></response>");
    EXPECT_EQ(a.response.landmark_index, 1);
    EXPECT_EQ(a.response.landmark_name, "Cranium");
    EXPECT_EQ(a.response.reasoning, "");
}

TEST(Protocol, CanonicalizesCenterNoneMismatch) {
    const auto a = ok("<response><landmark index=\"1\">Skull</landmark><move x_dir=\"LEFT\" x_mag=\"NONE\" "
                      "y_dir=\"CENTER\" y_mag=\"LARGE\"/></response>");
    EXPECT_EQ(a.response.command, MotionCommand::zero());
    ASSERT_EQ(a.warnings.size(), 2u);
    EXPECT_NE(a.warnings[0].find("canonicalized"), std::string::npos);
}

TEST(Protocol, FirstWellFormedBlockWins) {
    const auto a = ok("<response>broken</response> then " + kValid);
    EXPECT_EQ(a.response.landmark_index, 4);
    const auto e = err("<response>broken</response> <response><landmark>Nope</landmark></response>");
    EXPECT_EQ(e.offset, 10u);
}

TEST(Protocol, ErrorReasonsAndOffsets) {
    EXPECT_EQ(err("").reason, "missing <response> block");
    EXPECT_EQ(err("just prose").reason, "missing <response> block");
    const std::string bad_enum = "<response><landmark>Skull</landmark><move x_dir=\"SIDEWAYS\" x_mag=\"NONE\" "
                                 "y_dir=\"CENTER\" y_mag=\"NONE\"/></response>";
    const auto e1 = err(bad_enum);
    EXPECT_NE(e1.reason.find("unknown enum token"), std::string::npos);
    EXPECT_EQ(bad_enum.substr(e1.offset, 8), "SIDEWAYS");
    EXPECT_NE(err("<response><landmark>Pelvis</landmark><move x_dir=\"CENTER\" x_mag=\"NONE\" y_dir=\"CENTER\" "
                  "y_mag=\"NONE\"/></response>")
                  .reason.find("unresolvable landmark name"),
              std::string::npos);
    EXPECT_NE(err("<response><landmark index=\"2\">Skull</landmark><move x_dir=\"CENTER\" x_mag=\"NONE\" "
                  "y_dir=\"CENTER\" y_mag=\"NONE\"/></response>")
                  .reason.find("does not match"),
              std::string::npos);
    EXPECT_NE(err("<response><landmark>Skull</landmark></response>").reason.find("missing <move>"),
              std::string::npos);
    EXPECT_NE(err("<response><move x_dir=\"CENTER\" x_mag=\"NONE\" y_dir=\"CENTER\" y_mag=\"NONE\"/></response>")
                  .reason.find("missing <landmark>"),
              std::string::npos);
    EXPECT_NE(err("<response><landmark>Skull</landmark><move x_dir=\"CENTER\"/></response>").reason.find("requires"),
              std::string::npos);
    EXPECT_NE(err("<response><landmark>Skull</landmark><landmark>T1</landmark></response>").reason.find("duplicate"),
              std::string::npos);
    EXPECT_NE(err(kValid.substr(0, 30)).reason.find("unterminated"), std::string::npos);
}

TEST(Protocol, EscapingRoundTrip) {
    const std::string raw = "a < b & c > \"d\" \t\n\x01 end";
    const auto escaped = xml_escape(raw);
    EXPECT_EQ(escaped.find('<'), std::string::npos);
    std::string back;
    ASSERT_TRUE(xml_unescape(escaped, back));
    EXPECT_EQ(back, raw);
    EXPECT_FALSE(xml_unescape("&bogus;", back));
    EXPECT_FALSE(xml_unescape("&#99999;", back));
    EXPECT_TRUE(xml_unescape("&apos;&#65;&#x42;", back));
    EXPECT_EQ(back, "'AB");
}

TEST(Protocol, FuzzNeverThrowsAndAlwaysClassifies) {
    auto rng = make_engine(2, "protocol-fuzz");
    std::uniform_int_distribution<int> byte(0, 255), op(0, 3);
    const std::string alphabet = "<>/=\"' responselandmarkreasoningmove_xydirmagLEFTRIGHTUPDOWNCENTERNONE0123456789";
    for (int n = 0; n < 20000; ++n) {
        std::string text = serialize(random_response(rng));
        const int edits = std::uniform_int_distribution<int>(0, 8)(rng);
        for (int e = 0; e < edits && !text.empty(); ++e) {
            const auto pos = std::uniform_int_distribution<std::size_t>(0, text.size() - 1)(rng);
            switch (op(rng)) {
                case 0: text.erase(pos, 1); break;
                case 1: text.insert(pos, 1, static_cast<char>(byte(rng))); break;
                case 2: text[pos] = alphabet[static_cast<std::size_t>(byte(rng)) % alphabet.size()]; break;
                default: text = text.substr(0, pos); break;
            }
        }
        ResponseParseResult r;
        ASSERT_NO_THROW(r = parse_response(text, schema()));
        if (const auto* e = std::get_if<ParseError>(&r)) {
            ASSERT_LE(e->offset, text.size());
            ASSERT_FALSE(e->reason.empty());
        } else {
            const auto& p = std::get<ParsedResponse>(r);
            ASSERT_TRUE(p.response.command.is_canonical());
            ASSERT_TRUE(std::holds_alternative<ParsedResponse>(parse_response(serialize(p.response), schema())));
        }
    }
}
