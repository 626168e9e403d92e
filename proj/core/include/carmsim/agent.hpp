#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "carmsim/landmarks.hpp"
#include "carmsim/motion.hpp"
#include "carmsim/projector.hpp"

namespace carmsim {

/// Everything an agent sees at step t: the previous view x_{t-1}, its own
/// previous response r_{t-1} (absent at t = 1) and any operator feedback
/// injected since the last call.
struct AgentRequest {
    std::string episode_id;
    int step = 1;
    const RadiographImage* image = nullptr;
    std::optional<std::string> prior_response;
    std::optional<std::string> feedback;
    std::string prompt_template_id;
};

struct AgentReply {
    std::string raw_text;
    double latency_ms = 0.0;
    /// Set when the agent reported a failure of its own (e.g. a model hook
    /// raised); navloop counts it like an unparseable reply.
    std::optional<std::string> error;
};

/// Thrown by agents whose channel broke (timeout, closed stream, bad frame).
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Agent {
public:
    virtual ~Agent() = default;
    virtual AgentReply respond(const AgentRequest& request) = 0;
};

/// Per-axis magnitude closest to |residual| among {0, 30, 60, 90} mm (ties to
/// the smaller one), direction from the residual's sign.
MotionCommand oracle_command(double residual_lr_mm, double residual_si_mm) noexcept;

/// Canonical protocol text of the oracle policy for an isocenter and target:
/// true nearest landmark, nearest-magnitude move toward the target.
std::string oracle_response_text(const LandmarkSet& landmarks, const Vec3& isocenter, int target_index);

/// Scripted policy with ground-truth access; reads the pose from the image.
class OracleAgent : public Agent {
public:
    OracleAgent(const LandmarkSet& landmarks, int target_index);
    AgentReply respond(const AgentRequest& request) override;

private:
    const LandmarkSet& landmarks_;
    int target_;
};

/// Always returns the same text.
class FixedAgent : public Agent {
public:
    explicit FixedAgent(std::string text) : text_(std::move(text)) {}
    AgentReply respond(const AgentRequest&) override { return {text_, 0.0, std::nullopt}; }

private:
    std::string text_;
};

/// Replies with a zero move, naming the true nearest landmark when it knows
/// the landmark set and Skull otherwise.
class ZeroMoveAgent : public Agent {
public:
    explicit ZeroMoveAgent(const LandmarkSet* landmarks = nullptr) : landmarks_(landmarks) {}
    AgentReply respond(const AgentRequest& request) override;

private:
    const LandmarkSet* landmarks_;
};

/// Adapts a callable; used for test fixtures and embedding in-process models.
class CallbackAgent : public Agent {
public:
    using Fn = std::function<AgentReply(const AgentRequest&)>;
    explicit CallbackAgent(Fn fn) : fn_(std::move(fn)) {}
    AgentReply respond(const AgentRequest& request) override { return fn_(request); }

private:
    Fn fn_;
};

}  // namespace carmsim
