#pragma once

#include "kisgmm/keypoint/detector.hpp"

namespace kisgmm::keypoint {

// Running average of world-frame estimates whose presence measure
// exceeded the threshold.
struct RunningReference {
    Vec3 sum = Vec3::Zero();
    int count = 0;
    double presence_threshold = kPresenceThreshold;

    bool has_estimate() const { return count >= 1; }
    Vec3 mean() const;  // StateError when count == 0
};

RunningReference update_reference(RunningReference running, const KeypointEstimate& estimate);

}  // namespace kisgmm::keypoint
