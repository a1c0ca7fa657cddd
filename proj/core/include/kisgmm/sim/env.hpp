#pragma once

#include <optional>
#include <vector>

#include "kisgmm/common/rng.hpp"
#include "kisgmm/sim/camera.hpp"
#include "kisgmm/sim/scene.hpp"

namespace kisgmm::sim {

// Wrist-camera RGB-D frame. Channel planes are row-major 24x24.
struct Observation {
    std::vector<float> rgb;    // 3 * 24 * 24, [0,1], planes R,G,B
    std::vector<float> depth;  // 24 * 24, meters (ray distance)
    Vec3 camera_pos = Vec3::Zero();
    CameraIntrinsics intrinsics;
};

// Flattens to the network input layout: R,G,B,D planes, 2304 doubles.
std::vector<double> observation_to_input(const Observation& obs);
inline constexpr int kObservationInputSize = 4 * kImageSize * kImageSize;

struct EnvState {
    Vec3 effector = Vec3::Zero();
    bool attached = false;
    double progress = 0.0;  // meters along the pull axis
    int step_count = 0;
};

struct StepResult {
    std::optional<Observation> observation;
    double reward = 0.0;  // 1 exactly once, at the success transition
    bool done = false;
    bool success = false;
};

struct ResetOptions {
    double start_noise_std = 0.0;       // Gaussian, meters, per axis
    double ref_noise_halfwidth = 0.0;   // uniform, meters, per axis
};

// Deterministic kinematic world: free effector motion until the grasp
// latches, then rail-constrained motion along the pull axis. One instance
// per episode thread; no shared state.
class Env {
public:
    explicit Env(SceneConfig config);

    Observation reset(const ResetOptions& opt, uint64_t seed);

    // Integrates one control step. Rendering is skipped unless requested;
    // the returned observation is identical to a render() call.
    StepResult step(const Vec3& velocity, double dt, bool want_observation = false);

    Observation render() const;

    // Ground-truth projection of the effective handle through the current
    // wrist camera.
    KeypointProjection project_keypoint() const;

    // Proportional approach followed by a constant pull, with optional
    // Gaussian jitter. Uses ground truth; source-environment only.
    Vec3 scripted_expert(double jitter_std, Rng& rng) const;

    const EnvState& state() const { return state_; }
    const SceneConfig& config() const { return config_; }

    // handle after reset noise and displacement, at zero progress
    const Vec3& effective_handle() const { return effective_handle_; }
    // handle position right now (follows the drawer/button as it moves)
    Vec3 current_handle() const;

    bool succeeded() const { return success_; }
    bool episode_done() const;

private:
    SceneConfig config_;
    EnvState state_;
    Vec3 effective_handle_ = Vec3::Zero();
    bool success_ = false;
};

}  // namespace kisgmm::sim
