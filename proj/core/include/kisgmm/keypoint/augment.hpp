#pragma once

#include "kisgmm/keypoint/detector.hpp"

namespace kisgmm::keypoint {

// Zeroes random rectangular patches covering at most mask_fraction of the
// image. Patches never touch the pixel containing the ground-truth
// keypoint of a present-labeled sample; labels are unchanged.
// mask_fraction must lie in [0, 0.5].
KeypointSample augment_occlude(const KeypointSample& sample, uint64_t seed, double mask_fraction);

}  // namespace kisgmm::keypoint
