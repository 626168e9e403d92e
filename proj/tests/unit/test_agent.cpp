#include <gtest/gtest.h>

#include "carmsim/agent.hpp"
#include "carmsim/protocol.hpp"
#include "support.hpp"

using namespace carmsim;

TEST(OracleCommand, NearestMagnitudeWithTiesToSmaller) {
    struct Case {
        double residual;
        Magnitude mag;
    };
    const Case cases[] = {{0, Magnitude::none},      {14.9, Magnitude::none},    {15, Magnitude::none},
                          {15.1, Magnitude::small},  {45, Magnitude::small},     {45.5, Magnitude::moderate},
                          {75, Magnitude::moderate}, {75.01, Magnitude::large},  {500, Magnitude::large}};
    for (const auto& c : cases) {
        EXPECT_EQ(oracle_command(c.residual, 0).x_mag, c.mag) << c.residual;
        EXPECT_EQ(oracle_command(0, -c.residual).y_mag, c.mag) << c.residual;
    }
}

TEST(OracleCommand, DirectionsFollowResidualSign) {
    const auto a = oracle_command(100, -100);
    EXPECT_EQ(a.x_dir, XDirection::right);
    EXPECT_EQ(a.y_dir, YDirection::down);
    const auto b = oracle_command(-40, 40);
    EXPECT_EQ(b.x_dir, XDirection::left);
    EXPECT_EQ(b.y_dir, YDirection::up);
    EXPECT_EQ(oracle_command(3, -3), MotionCommand::zero());
}

TEST(OracleCommand, NeverIncreasesResidual) {
    for (double r = -300; r <= 300; r += 0.25) {
        const auto c = oracle_command(r, r);
        EXPECT_LE(std::abs(r - c.dx_mm()), std::abs(r) + 1e-12);
        EXPECT_LE(std::abs(r - c.dy_mm()), std::abs(r) + 1e-12);
    }
}

TEST(OracleResponse, NamesTrueNearestLandmark) {
    const auto& p = fixture::phantom();
    const Vec3 near_t1 = p.landmarks.at(10).position + Vec3(1, 1, 1);
    const auto text = oracle_response_text(p.landmarks, near_t1, 1);
    const auto parsed = parse_response(text, LandmarkSchema::default_schema());
    ASSERT_TRUE(std::holds_alternative<ParsedResponse>(parsed));
    const auto& r = std::get<ParsedResponse>(parsed).response;
    EXPECT_EQ(r.landmark_index, 10);
    EXPECT_EQ(r.command.y_dir, YDirection::up);
    EXPECT_EQ(serialize(r), text);
}
