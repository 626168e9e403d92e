#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "carmsim/agent.hpp"
#include "carmsim/error.hpp"
#include "carmsim/geometry.hpp"
#include "carmsim/landmarks.hpp"
#include "carmsim/projector.hpp"
#include "carmsim/protocol.hpp"

namespace carmsim {

struct EpisodeConfig {
    std::string episode_id = "episode-0";
    /// Landmark index or an explicit isocenter.
    std::variant<int, Vec3> start = 4;
    int target = 1;
    int max_steps = 20;
    double success_radius_mm = 25.0;
    std::uint64_t seed = 0;
    /// Consecutive unusable replies that end the episode.
    int max_consecutive_failures = 3;
    ConeBeamGeometry geometry;
    RenderOptions render;
    std::string prompt_template_id = "navigate.v1";

    void validate() const;
};

enum class Outcome { success, max_steps, agent_error };
std::string_view to_string(Outcome outcome) noexcept;

struct EpisodeStep {
    int t = 0;
    Vec3 pose_before = Vec3::Zero();
    std::string image_ref;
    std::optional<std::string> prior_response;
    std::optional<std::string> feedback;
    std::string raw_text;
    std::optional<AgentResponse> parsed;
    std::vector<std::string> warnings;
    std::optional<ParseError> parse_error;
    std::optional<std::string> agent_error;
    Vec3 pose_after = Vec3::Zero();
    double distance_to_target_mm = 0.0;
};

struct EpisodeTrace {
    EpisodeConfig config;
    Vec3 start_isocenter = Vec3::Zero();
    Vec3 target_position = Vec3::Zero();
    double initial_distance_mm = 0.0;
    std::vector<EpisodeStep> steps;
    Outcome outcome = Outcome::max_steps;
    double final_distance_mm = 0.0;
    std::string error;
};

/// Distance in the controlled LR-SI plane; AP is ignored.
double in_plane_distance(const Vec3& a, const Vec3& b) noexcept;

/// Receives each rendered view and returns the reference stored in the trace.
using ImageSink = std::function<std::string(const EpisodeConfig&, int step, const RadiographImage&)>;

/// Step-wise perception-action loop:
///   render(p_{t-1}) -> agent(x_{t-1}, r_{t-1}) -> parse -> apply_action.
/// Success is checked before the first action and after every move.
class EpisodeRunner {
public:
    EpisodeRunner(const Volume& volume, const LandmarkSet& landmarks, Agent& agent, EpisodeConfig config,
                  ImageSink sink = {});

    bool done() const noexcept { return done_; }
    /// Queues operator feedback for the next agent call; repeated calls
    /// before that call are joined with newlines.
    void inject_feedback(std::string message);
    /// Executes one agent turn. Requires !done().
    const EpisodeStep& step();
    const EpisodeTrace& trace() const noexcept { return trace_; }
    /// Runs to completion.
    EpisodeTrace run();

private:
    void finish(Outcome outcome, std::string error = {});

    const Volume& volume_;
    const LandmarkSet& landmarks_;
    Agent& agent_;
    ImageSink sink_;
    EpisodeTrace trace_;
    CArmPose pose_;
    std::optional<std::string> prior_;
    std::optional<std::string> pending_feedback_;
    int consecutive_failures_ = 0;
    bool done_ = false;
};

EpisodeTrace run_episode(const Volume& volume, const LandmarkSet& landmarks, Agent& agent, const EpisodeConfig& config,
                         ImageSink sink = {});

/// Re-applies every parsed command from the recorded start; returns the pose
/// after each step.
std::vector<Vec3> replay_poses(const EpisodeTrace& trace, const Box3& region);

/// One line per step plus a trailing summary line.
std::vector<std::string> trace_lines(const EpisodeTrace& trace);
void write_trace(const std::filesystem::path& path, const EpisodeTrace& trace);

/// Writes PNGs to dir/<episode_id>/step_NNN.png and returns refs relative to dir.
ImageSink png_image_sink(const std::filesystem::path& dir);

}  // namespace carmsim
