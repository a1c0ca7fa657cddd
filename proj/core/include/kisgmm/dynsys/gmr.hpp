#pragma once

#include <functional>
#include <vector>

#include "kisgmm/dynsys/gmm.hpp"

namespace kisgmm::dynsys {

inline constexpr double kVelocityMax = 0.5;     // m/s, output clamp
inline constexpr double kControlFrequency = 50.0;  // Hz
inline constexpr double kControlDt = 1.0 / kControlFrequency;

// Gaussian mixture regression with the conditioning matrices precomputed.
// velocity() is pure and safe to call concurrently.
class GmrModel {
public:
    explicit GmrModel(GaussianMixtureParams gmm);

    // E[velocity | position - reference], clamped to kVelocityMax.
    // Falls back to the nearest component (Mahalanobis) if every
    // responsibility underflows.
    Vec3 velocity(const Vec3& pose, const Vec3& reference) const;

    const GaussianMixtureParams& params() const { return gmm_; }
    int underflow_fallbacks() const { return underflow_count_; }

private:
    struct Component {
        Vec3 mean_pos;
        Vec3 mean_vel;
        Mat3 gain;          // cov_vp * cov_pp^{-1}
        Mat3 pos_cov_inv;
        double log_weight;  // log prior - 0.5 log det(2 pi cov_pp)
    };

    GaussianMixtureParams gmm_;
    std::vector<Component> comps_;
    mutable int underflow_count_ = 0;
};

// Single-call convenience matching the operation signature; builds the
// conditioner each time. Hot paths should hold a GmrModel.
Vec3 gmr_velocity(const GaussianMixtureParams& gmm, const Vec3& pose, const Vec3& reference);

// Euler rollout of the velocity field. stop_pred is evaluated on the
// start pose and after every integration step.
Trajectory rollout(const GmrModel& model, const Vec3& start, const Vec3& reference, double dt,
                   int max_steps, const std::function<bool(const Vec3&)>& stop_pred);

// Self-consistency of a fitted field on its own demonstrations: rolls out
// from every demo start and averages, over subsampled demo poses, the
// distance to the nearest rollout point (terminal pose always included).
double flow_reproduction_error(const GmrModel& model, const DemonstrationSet& demos, double dt);

// EM restarts seeded from opt.seed, keeping the fit whose rollouts best
// reproduce the demonstrations. Log-likelihood alone does not predict
// closed-loop quality here.
EmResult fit_em_selected(const DemonstrationSet& demos, const EmOptions& opt, int restarts);

}  // namespace kisgmm::dynsys
