#include <gtest/gtest.h>

#include <cmath>

#include "carmsim/error.hpp"
#include "carmsim/navloop.hpp"
#include "support.hpp"

using namespace carmsim;

namespace {

EpisodeConfig small_config(int start, int target) {
    EpisodeConfig c;
    c.start = start;
    c.target = target;
    c.geometry.cols = 32;
    c.geometry.rows = 32;
    return c;
}

const char* kZero =
    "<response><landmark>Skull</landmark><move x_dir=\"CENTER\" x_mag=\"NONE\" y_dir=\"CENTER\" "
    "y_mag=\"NONE\"/></response>";

}  // namespace

TEST(Navloop, OracleReachesTargetWithMonotoneResiduals) {
    const auto& p = fixture::phantom();
    for (auto [start, target] : {std::pair{4, 1}, std::pair{1, 4}, std::pair{8, 9}, std::pair{14, 3}}) {
        OracleAgent agent(p.landmarks, target);
        const auto trace = run_episode(p.volume, p.landmarks, agent, small_config(start, target));
        ASSERT_EQ(trace.outcome, Outcome::success) << start << "->" << target;
        EXPECT_LE(trace.final_distance_mm, 25.0);
        Vec3 prev = trace.start_isocenter;
        for (const auto& s : trace.steps) {
            EXPECT_LE(std::abs(trace.target_position.x() - s.pose_after.x()),
                      std::abs(trace.target_position.x() - prev.x()) + 1e-9);
            EXPECT_LE(std::abs(trace.target_position.z() - s.pose_after.z()),
                      std::abs(trace.target_position.z() - prev.z()) + 1e-9);
            prev = s.pose_after;
        }
    }
}

TEST(Navloop, StartWithinRadiusSucceedsWithoutSteps) {
    const auto& p = fixture::phantom();
    ZeroMoveAgent agent;
    const auto trace = run_episode(p.volume, p.landmarks, agent, small_config(1, 1));
    EXPECT_EQ(trace.outcome, Outcome::success);
    EXPECT_TRUE(trace.steps.empty());
}

TEST(Navloop, ZeroMoveRunsToMaxSteps) {
    const auto& p = fixture::phantom();
    ZeroMoveAgent agent(&p.landmarks);
    auto cfg = small_config(4, 1);
    cfg.max_steps = 5;
    const auto trace = run_episode(p.volume, p.landmarks, agent, cfg);
    EXPECT_EQ(trace.outcome, Outcome::max_steps);
    ASSERT_EQ(trace.steps.size(), 5u);
    for (const auto& s : trace.steps) EXPECT_EQ(s.pose_after, trace.start_isocenter);
}

TEST(Navloop, ThreeUnparseableRepliesEndEpisode) {
    const auto& p = fixture::phantom();
    FixedAgent agent("I refuse to answer in the required format.");
    const auto trace = run_episode(p.volume, p.landmarks, agent, small_config(4, 1));
    EXPECT_EQ(trace.outcome, Outcome::agent_error);
    ASSERT_EQ(trace.steps.size(), 3u);
    for (const auto& s : trace.steps) EXPECT_TRUE(s.parse_error.has_value());
}

TEST(Navloop, StrikesResetAfterUsableReply) {
    const auto& p = fixture::phantom();
    int calls = 0;
    CallbackAgent agent([&](const AgentRequest&) -> AgentReply {
        ++calls;
        return {calls % 3 == 0 ? kZero : "garbage", 0.0, std::nullopt};
    });
    auto cfg = small_config(4, 1);
    cfg.max_steps = 9;
    const auto trace = run_episode(p.volume, p.landmarks, agent, cfg);
    EXPECT_EQ(trace.outcome, Outcome::max_steps);
    EXPECT_EQ(trace.steps.size(), 9u);
}

TEST(Navloop, AgentReportedErrorsCountAsStrikes) {
    const auto& p = fixture::phantom();
    CallbackAgent agent([](const AgentRequest&) { return AgentReply{"", 0.0, std::string("hook raised")}; });
    const auto trace = run_episode(p.volume, p.landmarks, agent, small_config(4, 1));
    EXPECT_EQ(trace.outcome, Outcome::agent_error);
    EXPECT_EQ(trace.steps.size(), 3u);
    EXPECT_EQ(trace.steps[0].agent_error, "hook raised");
}

TEST(Navloop, TransportFailureEndsImmediately) {
    const auto& p = fixture::phantom();
    CallbackAgent agent([](const AgentRequest&) -> AgentReply { throw TransportError("pipe closed"); });
    const auto trace = run_episode(p.volume, p.landmarks, agent, small_config(4, 1));
    EXPECT_EQ(trace.outcome, Outcome::agent_error);
    ASSERT_EQ(trace.steps.size(), 1u);
    EXPECT_NE(trace.error.find("pipe closed"), std::string::npos);
}

TEST(Navloop, PriorResponseAndFeedbackPlumbing) {
    const auto& p = fixture::phantom();
    std::vector<AgentRequest> seen;
    std::vector<std::optional<std::string>> priors, feedback;
    CallbackAgent agent([&](const AgentRequest& r) {
        priors.push_back(r.prior_response);
        feedback.push_back(r.feedback);
        EXPECT_EQ(r.image->cols, 32);
        EXPECT_EQ(r.image->pose.isocenter, p.landmarks.at(4).position);
        return AgentReply{std::string("prose ") + kZero, 0.0, std::nullopt};
    });
    auto cfg = small_config(4, 1);
    cfg.max_steps = 3;
    EpisodeRunner runner(p.volume, p.landmarks, agent, cfg);
    runner.step();
    runner.inject_feedback("too far left");
    runner.inject_feedback("try again");
    runner.step();
    runner.step();
    EXPECT_TRUE(runner.done());
    ASSERT_EQ(priors.size(), 3u);
    EXPECT_FALSE(priors[0].has_value());
    // The prior is the canonical form, not the raw text with prose.
    EXPECT_EQ(priors[1], serialize(*runner.trace().steps[0].parsed));
    EXPECT_FALSE(feedback[0].has_value());
    EXPECT_EQ(feedback[1], "too far left\ntry again");
    EXPECT_FALSE(feedback[2].has_value());
    EXPECT_THROW(runner.step(), Error);
}

TEST(Navloop, ReplayMatchesRecordedPoses) {
    const auto& p = fixture::phantom();
    OracleAgent agent(p.landmarks, 9);
    const auto trace = run_episode(p.volume, p.landmarks, agent, small_config(2, 9));
    const auto replay = replay_poses(trace, p.volume.bounds());
    ASSERT_EQ(replay.size(), trace.steps.size());
    for (std::size_t i = 0; i < replay.size(); ++i) EXPECT_EQ(replay[i], trace.steps[i].pose_after);
}

TEST(Navloop, TraceSerializationIsDeterministic) {
    const auto& p = fixture::phantom();
    OracleAgent a(p.landmarks, 1), b(p.landmarks, 1);
    const auto t1 = run_episode(p.volume, p.landmarks, a, small_config(8, 1));
    const auto t2 = run_episode(p.volume, p.landmarks, b, small_config(8, 1));
    EXPECT_EQ(trace_lines(t1), trace_lines(t2));
    EXPECT_EQ(trace_lines(t1).size(), t1.steps.size() + 1);
}

TEST(Navloop, ConfigValidation) {
    auto c = small_config(4, 1);
    c.max_steps = 0;
    EXPECT_THROW(c.validate(), Error);
    c = small_config(4, 15);
    EXPECT_THROW(c.validate(), Error);
}
