#include "kisgmm/keypoint/augment.hpp"

#include <algorithm>
#include <cmath>

#include "kisgmm/common/errors.hpp"
#include "kisgmm/common/rng.hpp"
#include "kisgmm/sim/camera.hpp"

namespace kisgmm::keypoint {

KeypointSample augment_occlude(const KeypointSample& sample, uint64_t seed, double mask_fraction) {
    if (mask_fraction < 0.0 || mask_fraction > 0.5)
        throw ConfigError("augment_occlude: mask_fraction must be in [0, 0.5]");
    if (mask_fraction == 0.0) return sample;

    const int size = sim::kImageSize;
    const int plane = size * size;

    // pixel holding the ground-truth keypoint, which must stay visible
    int gt_row = -1, gt_col = -1;
    if (sample.present_label) {
        const auto proj = sim::project(sample.gt_camera_point, sample.observation->intrinsics);
        gt_col = std::clamp(static_cast<int>(std::lround(proj.u)), 0, size - 1);
        gt_row = std::clamp(static_cast<int>(std::lround(proj.v)), 0, size - 1);
    }

    auto obs = std::make_shared<sim::Observation>(*sample.observation);
    Rng rng(hash_combine(seed, 0x0cc1de));
    const int budget = static_cast<int>(mask_fraction * plane);
    int covered = 0;
    const int n_rects = 1 + static_cast<int>(rng.below(3));
    for (int r = 0; r < n_rects && covered < budget; ++r) {
        for (int attempt = 0; attempt < 20; ++attempt) {
            const int w = 3 + static_cast<int>(rng.below(8));
            const int h = 3 + static_cast<int>(rng.below(8));
            if (covered + w * h > budget) continue;
            const int col0 = static_cast<int>(rng.below(static_cast<uint64_t>(size - w + 1)));
            const int row0 = static_cast<int>(rng.below(static_cast<uint64_t>(size - h + 1)));
            if (gt_row >= row0 && gt_row < row0 + h && gt_col >= col0 && gt_col < col0 + w)
                continue;  // would cover the keypoint pixel
            for (int row = row0; row < row0 + h; ++row) {
                for (int col = col0; col < col0 + w; ++col) {
                    const int idx = row * size + col;
                    obs->rgb[idx] = 0.0f;
                    obs->rgb[plane + idx] = 0.0f;
                    obs->rgb[2 * plane + idx] = 0.0f;
                    obs->depth[idx] = 0.0f;
                }
            }
            covered += w * h;
            break;
        }
    }

    KeypointSample out = sample;
    out.observation = std::move(obs);
    return out;
}

}  // namespace kisgmm::keypoint
