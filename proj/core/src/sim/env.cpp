#include "kisgmm/sim/env.hpp"

#include <algorithm>
#include <cmath>

#include "kisgmm/common/errors.hpp"
#include "kisgmm/common/log.hpp"
#include "kisgmm/dynsys/gmr.hpp"
#include "kisgmm/sim/texture.hpp"

namespace kisgmm::sim {

std::vector<double> observation_to_input(const Observation& obs) {
    std::vector<double> input(kObservationInputSize);
    const int plane = kImageSize * kImageSize;
    for (int i = 0; i < 3 * plane; ++i) input[i] = obs.rgb[i];
    for (int i = 0; i < plane; ++i) input[3 * plane + i] = obs.depth[i];
    return input;
}

Env::Env(SceneConfig config) : config_(std::move(config)) { config_.validate(); }

Observation Env::reset(const ResetOptions& opt, uint64_t seed) {
    if (opt.start_noise_std < 0.0 || opt.ref_noise_halfwidth < 0.0)
        throw ConfigError("env: noise parameters must be >= 0");

    Rng rng(hash_combine(seed, 0x5e5eed));

    Vec3 start = kNominalStart;
    bool inside = true;
    for (int attempt = 0; attempt < 100; ++attempt) {
        start = kNominalStart;
        for (int i = 0; i < 3; ++i) start(i) += rng.normal(0.0, opt.start_noise_std);
        inside = (start.array() >= 0.0).all() && (start.array() <= 1.0).all();
        if (inside) break;
    }
    if (!inside) {
        start = start.cwiseMax(0.0).cwiseMin(1.0);
        log::warn("env: start sampling exhausted 100 tries, clamped into workspace");
    }

    effective_handle_ = config_.handle_position + config_.displacement;
    for (int i = 0; i < 3; ++i)
        effective_handle_(i) += rng.uniform(-opt.ref_noise_halfwidth, opt.ref_noise_halfwidth);

    state_ = EnvState{};
    state_.effector = start;
    success_ = false;
    return render();
}

Vec3 Env::current_handle() const {
    return effective_handle_ + state_.progress * config_.pull_axis;
}

bool Env::episode_done() const { return success_ || state_.step_count >= kEpisodeTimeout; }

StepResult Env::step(const Vec3& velocity, double dt, bool want_observation) {
    if (dt <= 0.0) throw ConfigError("env: dt must be positive");

    Vec3 v = velocity;
    const double n = v.norm();
    if (n > dynsys::kVelocityMax) v *= dynsys::kVelocityMax / n;

    if (!state_.attached) {
        state_.effector += v * dt;
        state_.effector = state_.effector.cwiseMax(0.0).cwiseMin(1.0);
        if ((state_.effector - current_handle()).norm() <= kGraspRadius) {
            state_.attached = true;
            state_.effector = current_handle();  // grasp centers on the handle
        }
    } else {
        // rail constraint: only the axis component moves the mechanism,
        // and the effector rides along with it
        const double along = v.dot(config_.pull_axis) * dt;
        const double new_progress =
            std::clamp(state_.progress + along, 0.0, config_.open_distance);
        const double delta = new_progress - state_.progress;
        state_.progress = new_progress;
        state_.effector += delta * config_.pull_axis;
    }
    ++state_.step_count;

    StepResult result;
    if (!success_ && state_.progress >= config_.open_distance - 1e-12) {
        success_ = true;
        result.reward = 1.0;
    }
    result.success = success_;
    result.done = episode_done();
    if (want_observation) result.observation = render();
    return result;
}

Observation Env::render() const {
    Observation obs;
    obs.camera_pos = state_.effector;
    obs.rgb.assign(3 * kImageSize * kImageSize, 0.0f);
    obs.depth.assign(kImageSize * kImageSize, 2.0f);

    const auto& K = obs.intrinsics;
    const double panel_x = config_.panel_plane_x + config_.displacement.x();
    const int plane = kImageSize * kImageSize;

    for (int row = 0; row < kImageSize; ++row) {
        for (int col = 0; col < kImageSize; ++col) {
            const double dx = (col - K.cx) / K.fx;
            const double dy = (row - K.cy) / K.fy;
            // world ray: (1, -dx, -dy) from the camera
            const double t = panel_x - obs.camera_pos.x();
            const int idx = row * kImageSize + col;
            if (t > 0.0) {
                const double hy = obs.camera_pos.y() - t * dx;
                const double hz = obs.camera_pos.z() - t * dy;
                const Vec3 color =
                    panel_texture(hy - config_.displacement.y(), hz - config_.displacement.z(),
                                  config_.texture_seed, config_.panel_base, config_.panel_alt);
                obs.rgb[idx] = static_cast<float>(color.x());
                obs.rgb[plane + idx] = static_cast<float>(color.y());
                obs.rgb[2 * plane + idx] = static_cast<float>(color.z());
                obs.depth[idx] = static_cast<float>(t * std::sqrt(1.0 + dx * dx + dy * dy));
            }
        }
    }

    // handle blob, splatted around its projection so it always covers the
    // nearest pixel when present
    const Vec3 handle = current_handle();
    const auto proj = sim::project_keypoint(handle, obs.camera_pos, K);
    if (proj.z >= kNearPlane) {
        const double radius_px =
            std::max(1.3, K.fx * kHandleRadius / proj.z);
        const double dist = (handle - obs.camera_pos).norm();
        const int lo_r = std::max(0, static_cast<int>(std::floor(proj.v - radius_px)));
        const int hi_r = std::min(kImageSize - 1, static_cast<int>(std::ceil(proj.v + radius_px)));
        const int lo_c = std::max(0, static_cast<int>(std::floor(proj.u - radius_px)));
        const int hi_c = std::min(kImageSize - 1, static_cast<int>(std::ceil(proj.u + radius_px)));
        for (int row = lo_r; row <= hi_r; ++row) {
            for (int col = lo_c; col <= hi_c; ++col) {
                const double du = col - proj.u;
                const double dv = row - proj.v;
                if (du * du + dv * dv > radius_px * radius_px) continue;
                const int idx = row * kImageSize + col;
                obs.rgb[idx] = static_cast<float>(config_.handle_color.x());
                obs.rgb[plane + idx] = static_cast<float>(config_.handle_color.y());
                obs.rgb[2 * plane + idx] = static_cast<float>(config_.handle_color.z());
                obs.depth[idx] = static_cast<float>(dist);
            }
        }
    }
    return obs;
}

KeypointProjection Env::project_keypoint() const {
    return sim::project_keypoint(current_handle(), state_.effector, CameraIntrinsics{});
}

Vec3 Env::scripted_expert(double jitter_std, Rng& rng) const {
    Vec3 v;
    if (!state_.attached) {
        // reach a pre-grasp point slightly upstream of the articulation,
        // then slide along it through the handle; the whole demonstration
        // is one smooth flow line
        const Vec3 pregrasp = current_handle() - 0.10 * config_.pull_axis;
        const Vec3 rel = state_.effector - pregrasp;
        const double along = rel.dot(config_.pull_axis);
        const Vec3 transverse = rel - along * config_.pull_axis;
        if (along >= -0.005 && transverse.norm() <= 0.025) {
            v = 0.10 * config_.pull_axis;  // in the corridor: slide through
        } else {
            // decelerate into the pre-grasp corner so demonstrations
            // sample it densely
            const double dist = rel.norm();
            const double speed = std::clamp(2.5 * dist, 0.06, 0.35);
            v = -rel * (speed / dist);
        }
    } else {
        v = 0.12 * config_.pull_axis;
    }
    if (jitter_std > 0.0)
        for (int i = 0; i < 3; ++i) v(i) += rng.normal(0.0, jitter_std);
    return v;
}

}  // namespace kisgmm::sim
