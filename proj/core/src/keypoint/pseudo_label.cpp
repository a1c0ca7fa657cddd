#include "kisgmm/keypoint/pseudo_label.hpp"

#include "kisgmm/common/log.hpp"
#include "kisgmm/keypoint/augment.hpp"
#include "kisgmm/sim/camera.hpp"

namespace kisgmm::keypoint {

void SuccessWindow::add(SuccessfulEpisode episode) {
    episodes_.push_back(std::move(episode));
    while (static_cast<int>(episodes_.size()) > capacity_) episodes_.pop_front();
}

PseudoLabelResult pseudo_label_refine(
    KeypointDetector& detector, const SuccessWindow& window,
    const std::vector<std::shared_ptr<const sim::Observation>>& frame_store,
    const PseudoLabelOptions& opt, Rng& rng) {
    PseudoLabelResult result;
    if (window.size() < window.capacity()) {
        log::info("pseudo_label_refine: only %d successful trajectories, skipping",
                  window.size());
        return result;
    }

    Vec3 sum = Vec3::Zero();
    int accepted = 0;
    for (const auto& ep : window.episodes()) {
        for (const auto& est : ep.estimates) {
            if (est.presence > opt.presence_threshold) {
                sum += est.world_point;
                ++accepted;
            }
        }
    }
    if (accepted == 0) {
        log::warn("pseudo_label_refine: no accepted estimates in the success window");
        return result;
    }
    result.pseudo_reference = sum / accepted;
    result.accepted_estimates = accepted;

    // re-label stored frames by projecting the pseudo reference
    std::vector<KeypointSample> dataset;
    dataset.reserve(frame_store.size());
    for (const auto& obs : frame_store) {
        KeypointSample s;
        s.observation = obs;
        const Vec3 cam_pt = sim::world_to_camera(result.pseudo_reference, obs->camera_pos);
        const auto proj = sim::project(cam_pt, obs->intrinsics);
        s.present_label = proj.present;
        if (proj.present) s.gt_camera_point = cam_pt;
        dataset.push_back(std::move(s));
    }
    result.relabeled_frames = static_cast<int>(dataset.size());
    if (dataset.empty()) return result;

    for (int step = 0; step < opt.train_steps; ++step) {
        std::vector<KeypointSample> batch;
        const int bs = std::min<int>(opt.batch_size, static_cast<int>(dataset.size()));
        batch.reserve(bs);
        for (int b = 0; b < bs; ++b) {
            const auto& s = dataset[static_cast<size_t>(rng.below(dataset.size()))];
            batch.push_back(opt.occlusion_fraction > 0.0
                                ? augment_occlude(s, rng.next_u64(), opt.occlusion_fraction)
                                : s);
        }
        const auto stats = detector.train_step(batch, opt.lambda_kp);
        result.final_loss_ed = stats.loss_ed;
    }
    result.applied = true;
    return result;
}

}  // namespace kisgmm::keypoint
