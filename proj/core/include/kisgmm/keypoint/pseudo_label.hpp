#pragma once

#include <deque>

#include "kisgmm/common/rng.hpp"
#include "kisgmm/keypoint/detector.hpp"
#include "kisgmm/keypoint/reference.hpp"

namespace kisgmm::keypoint {

// Decision-cadence frames of one successful episode together with the
// detector estimates made at the time.
struct SuccessfulEpisode {
    std::vector<std::shared_ptr<const sim::Observation>> frames;
    std::vector<KeypointEstimate> estimates;
};

// FIFO window over the most recent successful trajectories.
class SuccessWindow {
public:
    explicit SuccessWindow(int capacity = 3) : capacity_(capacity) {}

    void add(SuccessfulEpisode episode);
    int size() const { return static_cast<int>(episodes_.size()); }
    int capacity() const { return capacity_; }
    const std::deque<SuccessfulEpisode>& episodes() const { return episodes_; }

private:
    int capacity_;
    std::deque<SuccessfulEpisode> episodes_;
};

struct PseudoLabelOptions {
    double presence_threshold = kPresenceThreshold;
    double lambda_kp = 1.0;
    int train_steps = 30;
    int batch_size = 32;
    double occlusion_fraction = 0.25;
};

struct PseudoLabelResult {
    bool applied = false;
    Vec3 pseudo_reference = Vec3::Zero();
    int accepted_estimates = 0;
    int relabeled_frames = 0;
    double final_loss_ed = 0.0;
};

// Pools the accepted world-frame estimates from the last three successful
// trajectories into a pseudo reference, projects it into every stored
// frame to produce labels, and fine-tunes the detector on them. A window
// with fewer than three successes is reported as a no-op.
PseudoLabelResult pseudo_label_refine(
    KeypointDetector& detector, const SuccessWindow& window,
    const std::vector<std::shared_ptr<const sim::Observation>>& frame_store,
    const PseudoLabelOptions& opt, Rng& rng);

}  // namespace kisgmm::keypoint
