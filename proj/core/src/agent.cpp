#include "carmsim/agent.hpp"

#include <cmath>
#include <cstdio>

#include "carmsim/dataset.hpp"
#include "carmsim/error.hpp"
#include "carmsim/protocol.hpp"

namespace carmsim {
namespace {

Magnitude nearest_magnitude(double distance) noexcept {
    std::size_t best = 0;
    for (std::size_t m = 1; m < kMagnitudeMm.size(); ++m) {
        // Strict comparison keeps the smaller magnitude on ties.
        if (std::abs(distance - kMagnitudeMm[m]) < std::abs(distance - kMagnitudeMm[best])) best = m;
    }
    return static_cast<Magnitude>(best);
}

}  // namespace

MotionCommand oracle_command(double residual_lr_mm, double residual_si_mm) noexcept {
    MotionCommand cmd;
    cmd.x_mag = nearest_magnitude(std::abs(residual_lr_mm));
    if (cmd.x_mag != Magnitude::none) cmd.x_dir = residual_lr_mm > 0 ? XDirection::right : XDirection::left;
    cmd.y_mag = nearest_magnitude(std::abs(residual_si_mm));
    if (cmd.y_mag != Magnitude::none) cmd.y_dir = residual_si_mm > 0 ? YDirection::up : YDirection::down;
    return cmd;
}

std::string oracle_response_text(const LandmarkSet& landmarks, const Vec3& isocenter, int target_index) {
    const Landmark& target = landmarks.at(target_index);
    const double res_lr = target.position.x() - isocenter.x();
    const double res_si = target.position.z() - isocenter.z();
    const int nearest = nearest_k(isocenter, landmarks, 1).indices.front();

    AgentResponse r;
    r.landmark_index = nearest;
    r.landmark_name = landmarks.at(nearest).canonical_name;
    r.command = oracle_command(res_lr, res_si);
    char buf[256];
    std::snprintf(buf, sizeof buf, "Nearest landmark is %s. Target %s residual: LR %.1f mm, SI %.1f mm.",
                  r.landmark_name.c_str(), target.canonical_name.c_str(), res_lr, res_si);
    r.reasoning = buf;
    return serialize(r);
}

OracleAgent::OracleAgent(const LandmarkSet& landmarks, int target_index) : landmarks_(landmarks), target_(target_index) {
    landmarks_.at(target_);
}

AgentReply OracleAgent::respond(const AgentRequest& request) {
    if (!request.image) throw Error(ErrorKind::input, "oracle agent needs the current image");
    return {oracle_response_text(landmarks_, request.image->pose.isocenter, target_), 0.0, std::nullopt};
}

AgentReply ZeroMoveAgent::respond(const AgentRequest& request) {
    AgentResponse r;
    if (landmarks_ && request.image) {
        r.landmark_index = nearest_k(request.image->pose.isocenter, *landmarks_, 1).indices.front();
        r.landmark_name = landmarks_->at(r.landmark_index).canonical_name;
    } else {
        r.landmark_index = 1;
        r.landmark_name = "Skull";
    }
    r.reasoning = "Holding position.";
    return {serialize(r), 0.0, std::nullopt};
}

}  // namespace carmsim
