#include "kisgmm/keypoint/reference.hpp"

#include "kisgmm/common/errors.hpp"

namespace kisgmm::keypoint {

Vec3 RunningReference::mean() const {
    if (count < 1) throw StateError("running reference: no accepted estimates yet");
    return sum / static_cast<double>(count);
}

RunningReference update_reference(RunningReference running, const KeypointEstimate& estimate) {
    if (estimate.presence > running.presence_threshold) {
        running.sum += estimate.world_point;
        ++running.count;
    }
    return running;
}

}  // namespace kisgmm::keypoint
