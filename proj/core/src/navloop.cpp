#include "carmsim/navloop.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "carmsim/image_io.hpp"

namespace carmsim {
namespace {

using nlohmann::json;

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json command_json(const MotionCommand& c) {
    return {{"x_dir", to_string(c.x_dir)},
            {"x_mag", to_string(c.x_mag)},
            {"y_dir", to_string(c.y_dir)},
            {"y_mag", to_string(c.y_mag)}};
}

template <typename T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

void EpisodeConfig::validate() const {
    if (max_steps < 1) throw Error(ErrorKind::config, "max_steps must be >= 1");
    if (!(success_radius_mm > 0.0)) throw Error(ErrorKind::config, "success_radius_mm must be positive");
    if (max_consecutive_failures < 1) throw Error(ErrorKind::config, "max_consecutive_failures must be >= 1");
    if (target < 1 || target > kLandmarkCount) throw Error(ErrorKind::config, "target landmark outside 1..14");
    if (const int* s = std::get_if<int>(&start); s && (*s < 1 || *s > kLandmarkCount)) {
        throw Error(ErrorKind::config, "start landmark outside 1..14");
    }
    geometry.validate();
}

std::string_view to_string(Outcome outcome) noexcept {
    switch (outcome) {
        case Outcome::success: return "SUCCESS";
        case Outcome::max_steps: return "MAX_STEPS";
        case Outcome::agent_error: return "AGENT_ERROR";
    }
    return "AGENT_ERROR";
}

double in_plane_distance(const Vec3& a, const Vec3& b) noexcept { return std::hypot(a.x() - b.x(), a.z() - b.z()); }

EpisodeRunner::EpisodeRunner(const Volume& volume, const LandmarkSet& landmarks, Agent& agent, EpisodeConfig config,
                             ImageSink sink)
    : volume_(volume), landmarks_(landmarks), agent_(agent), sink_(std::move(sink)) {
    config.validate();
    trace_.config = std::move(config);
    const auto& cfg = trace_.config;

    Vec3 start = std::holds_alternative<int>(cfg.start) ? landmarks_.at(std::get<int>(cfg.start)).position
                                                        : std::get<Vec3>(cfg.start);
    const Box3 region = volume_.bounds();
    start = start.cwiseMax(region.min()).cwiseMin(region.max());
    pose_ = CArmPose{start, cfg.geometry};

    trace_.start_isocenter = start;
    trace_.target_position = landmarks_.at(cfg.target).position;
    trace_.initial_distance_mm = in_plane_distance(start, trace_.target_position);
    trace_.final_distance_mm = trace_.initial_distance_mm;
    if (trace_.initial_distance_mm <= cfg.success_radius_mm) finish(Outcome::success);
}

void EpisodeRunner::inject_feedback(std::string message) {
    if (pending_feedback_) {
        *pending_feedback_ += "\n" + message;
    } else {
        pending_feedback_ = std::move(message);
    }
}

void EpisodeRunner::finish(Outcome outcome, std::string error) {
    trace_.outcome = outcome;
    trace_.error = std::move(error);
    trace_.final_distance_mm = in_plane_distance(pose_.isocenter, trace_.target_position);
    done_ = true;
}

const EpisodeStep& EpisodeRunner::step() {
    if (done_) throw Error(ErrorKind::input, "episode already finished");
    const auto& cfg = trace_.config;

    EpisodeStep s;
    s.t = static_cast<int>(trace_.steps.size()) + 1;
    s.pose_before = pose_.isocenter;
    s.prior_response = prior_;
    s.feedback = std::exchange(pending_feedback_, std::nullopt);

    const RadiographImage image = render(volume_, pose_, cfg.render);
    if (sink_) s.image_ref = sink_(cfg, s.t, image);

    AgentRequest request{cfg.episode_id, s.t, &image, prior_, s.feedback, cfg.prompt_template_id};
    std::optional<std::string> transport_failure;
    AgentReply reply;
    try {
        reply = agent_.respond(request);
    } catch (const std::exception& e) {
        transport_failure = e.what();
    }

    bool usable = false;
    if (transport_failure) {
        s.agent_error = *transport_failure;
    } else if (reply.error) {
        s.raw_text = reply.raw_text;
        s.agent_error = *reply.error;
    } else {
        s.raw_text = reply.raw_text;
        auto parsed = parse_response(reply.raw_text, landmarks_.schema());
        if (auto* ok = std::get_if<ParsedResponse>(&parsed)) {
            s.parsed = ok->response;
            s.warnings = ok->warnings;
            usable = true;
        } else {
            s.parse_error = std::get<ParseError>(parsed);
        }
    }

    if (usable) {
        consecutive_failures_ = 0;
        pose_ = apply_action(pose_, s.parsed->command, volume_.bounds());
        prior_ = serialize(*s.parsed);
    } else {
        ++consecutive_failures_;
    }
    s.pose_after = pose_.isocenter;
    s.distance_to_target_mm = in_plane_distance(pose_.isocenter, trace_.target_position);
    trace_.steps.push_back(std::move(s));
    const EpisodeStep& recorded = trace_.steps.back();

    if (transport_failure) {
        finish(Outcome::agent_error, "transport: " + *transport_failure);
    } else if (consecutive_failures_ >= cfg.max_consecutive_failures) {
        finish(Outcome::agent_error, std::to_string(consecutive_failures_) + " consecutive unusable replies");
    } else if (recorded.distance_to_target_mm <= cfg.success_radius_mm) {
        finish(Outcome::success);
    } else if (recorded.t >= cfg.max_steps) {
        finish(Outcome::max_steps);
    }
    return recorded;
}

EpisodeTrace EpisodeRunner::run() {
    while (!done_) step();
    return trace_;
}

EpisodeTrace run_episode(const Volume& volume, const LandmarkSet& landmarks, Agent& agent, const EpisodeConfig& config,
                         ImageSink sink) {
    return EpisodeRunner(volume, landmarks, agent, config, std::move(sink)).run();
}

std::vector<Vec3> replay_poses(const EpisodeTrace& trace, const Box3& region) {
    std::vector<Vec3> poses;
    CArmPose pose{trace.start_isocenter, trace.config.geometry};
    for (const auto& s : trace.steps) {
        if (s.parsed) pose = apply_action(pose, s.parsed->command, region);
        poses.push_back(pose.isocenter);
    }
    return poses;
}

std::vector<std::string> trace_lines(const EpisodeTrace& trace) {
    std::vector<std::string> lines;
    for (const auto& s : trace.steps) {
        json j;
        j["type"] = "step";
        j["episode_id"] = trace.config.episode_id;
        j["t"] = s.t;
        j["pose_before_mm"] = vec_json(s.pose_before);
        j["image"] = s.image_ref.empty() ? json(nullptr) : json(s.image_ref);
        j["prior_response"] = optional_json(s.prior_response);
        j["feedback"] = optional_json(s.feedback);
        j["raw_text"] = s.raw_text;
        if (s.parsed) {
            j["parsed"] = {{"landmark_index", s.parsed->landmark_index},
                           {"landmark_name", s.parsed->landmark_name},
                           {"reasoning", s.parsed->reasoning},
                           {"move", command_json(s.parsed->command)}};
        } else {
            j["parsed"] = nullptr;
        }
        j["warnings"] = s.warnings;
        j["parse_error"] =
            s.parse_error ? json{{"offset", s.parse_error->offset}, {"reason", s.parse_error->reason}} : json(nullptr);
        j["agent_error"] = optional_json(s.agent_error);
        j["pose_after_mm"] = vec_json(s.pose_after);
        j["distance_to_target_mm"] = s.distance_to_target_mm;
        lines.push_back(j.dump());
    }
    const auto& cfg = trace.config;
    json summary;
    summary["type"] = "summary";
    summary["episode_id"] = cfg.episode_id;
    if (std::holds_alternative<int>(cfg.start)) {
        summary["start"] = std::get<int>(cfg.start);
    } else {
        summary["start"] = vec_json(std::get<Vec3>(cfg.start));
    }
    summary["target"] = cfg.target;
    summary["start_isocenter_mm"] = vec_json(trace.start_isocenter);
    summary["target_position_mm"] = vec_json(trace.target_position);
    summary["max_steps"] = cfg.max_steps;
    summary["success_radius_mm"] = cfg.success_radius_mm;
    summary["seed"] = cfg.seed;
    summary["steps"] = trace.steps.size();
    summary["outcome"] = to_string(trace.outcome);
    summary["initial_distance_mm"] = trace.initial_distance_mm;
    summary["final_distance_mm"] = trace.final_distance_mm;
    summary["error"] = trace.error.empty() ? json(nullptr) : json(trace.error);
    lines.push_back(summary.dump());
    return lines;
}

void write_trace(const std::filesystem::path& path, const EpisodeTrace& trace) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    for (const auto& line : trace_lines(trace)) out << line << '\n';
    if (!out) throw Error(ErrorKind::io, "short write to " + path.string());
}

ImageSink png_image_sink(const std::filesystem::path& dir) {
    return [dir](const EpisodeConfig& cfg, int step, const RadiographImage& image) {
        char name[32];
        std::snprintf(name, sizeof name, "step_%03d.png", step);
        const std::string ref = cfg.episode_id + "/" + name;
        write_png(dir / ref, image);
        return ref;
    };
}

}  // namespace carmsim
