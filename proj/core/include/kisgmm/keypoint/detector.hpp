#pragma once

#include <memory>
#include <string>
#include <vector>

#include "kisgmm/approx/network.hpp"
#include "kisgmm/approx/optimizer.hpp"
#include "kisgmm/sim/env.hpp"

namespace kisgmm::keypoint {

using Vec3 = Eigen::Vector3d;

inline constexpr double kPresenceThreshold = 0.7;
inline constexpr double kPresenceClamp = 1e-7;

// Reference-point estimate in the camera frame, with the world-frame
// location implied by the observation's camera pose.
struct KeypointEstimate {
    Vec3 camera_point = Vec3::Zero();
    double presence = 0.0;
    Vec3 world_point = Vec3::Zero();
};

struct KeypointSample {
    std::shared_ptr<const sim::Observation> observation;
    Vec3 gt_camera_point = Vec3::Zero();  // meaningful iff present_label
    bool present_label = false;
};

struct DetectorTrainStats {
    double loss_ed = 0.0;      // mean camera-frame distance over labeled-present samples
    double loss_kp = 0.0;      // presence BCE over the batch
    double total = 0.0;
    int ed_samples = 0;        // 0 means the distance term was skipped
    bool skipped = false;
};

// Mean Euclidean distance in the camera frame. Empty input is defined as
// zero (callers treat it as "no distance term").
double loss_ed(const std::vector<Vec3>& predictions, const std::vector<Vec3>& ground_truth);

// Presence BCE with predictions clamped to [kPresenceClamp, 1-kPresenceClamp].
double loss_kp(const std::vector<double>& presences, const std::vector<char>& labels);

// Conv trunk shared by three heads: a 24x24 heatmap whose softmax drives
// a spatial soft-argmax, a depth map read out under the same heatmap
// weights, and a presence logit.
class KeypointDetector {
public:
    explicit KeypointDetector(uint64_t seed, double lr = 3e-4);

    KeypointEstimate predict(const sim::Observation& obs);

    // One optimizer step on loss_ed + lambda_kp * loss_kp. The distance
    // term only sees samples labeled present.
    DetectorTrainStats train_step(const std::vector<KeypointSample>& batch, double lambda_kp);

    // Composite loss and analytic parameter gradients without stepping;
    // used by the finite-difference checks.
    DetectorTrainStats loss_and_gradients(const std::vector<KeypointSample>& batch,
                                          double lambda_kp);

    void save(const std::string& path) const;
    static KeypointDetector load(const std::string& path);

    approx::Network& backbone() { return backbone_; }
    approx::Network& heatmap_head() { return heat_head_; }
    approx::Network& depth_head() { return depth_head_; }
    approx::Network& presence_head() { return presence_head_; }
    uint64_t seed() const { return seed_; }

private:
    struct ForwardCache {
        std::vector<double> softmax;     // 576
        std::vector<double> depth_vals;  // 576
        double u = 0.0, v = 0.0, z = 0.0;
        double presence = 0.0;
        Vec3 camera_point = Vec3::Zero();
    };
    ForwardCache run(const sim::Observation& obs, bool record_tape);

    uint64_t seed_;
    approx::Network backbone_, heat_head_, depth_head_, presence_head_;
    approx::AdamOptimizer opt_backbone_, opt_heat_, opt_depth_, opt_presence_;
    int skipped_steps_ = 0;
};

}  // namespace kisgmm::keypoint
