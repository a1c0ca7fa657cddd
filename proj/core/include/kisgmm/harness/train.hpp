#pragma once

#include "kisgmm/harness/eval.hpp"

namespace kisgmm::harness {

struct SourceTrainResult {
    std::shared_ptr<rl::SacAgent> sac;
    std::shared_ptr<keypoint::KeypointDetector> key;
    std::vector<TrainMetricsRow> metrics;
    double initial_success = 0.0;  // first-100-episode rate
    double final_success = 0.0;    // last-100-episode rate
    bool improvement_warning = false;
    double key_val_error = 0.0;           // camera-frame meters on held-out frames
    double key_val_presence_acc = 0.0;
    int key_val_frames = 0;
};

// Interleaves refinement episodes in the source scene with detector
// training bursts. config.mode selects the policy's reference: the stale
// nominal handle (sacgmm) or the per-episode ground truth (sacgmm_gt);
// ground truth labels always flow to the detector trainer, never to the
// policy outside sacgmm_gt.
SourceTrainResult refine_source(const RunConfig& config,
                                const dynsys::GaussianMixtureParams& gmm, uint64_t seed);

struct TargetArmResult {
    int episodes_to_threshold = -1;  // -1: budget exhausted
    int episodes_run = 0;
    std::shared_ptr<rl::SacAgent> sac;
    std::shared_ptr<keypoint::KeypointDetector> key;
};

struct TargetTrainResult {
    TargetArmResult refined;   // continued from the source checkpoints
    TargetArmResult scratch;   // fresh agent, zero-shot detector reference
    std::vector<CurveRow> curves;
    double success_threshold = 0.8;
};

// Target-environment refinement without ground truth: the detector's
// running reference grounds every episode, sparse rewards train the
// agent, and pseudo-labels from the last three successful trajectories
// fine-tune the detector. Also runs the from-scratch comparison arm.
TargetTrainResult refine_target(const RunConfig& config, const SkillArtifacts& source,
                                const sim::SceneConfig& target_scene, uint64_t seed);

// Validation metrics for a detector on labeled frames.
struct DetectorValidation {
    double mean_camera_error = 0.0;  // over present-labeled frames
    double presence_accuracy = 0.0;
    int frames = 0;
    int present_frames = 0;
};
DetectorValidation validate_detector(keypoint::KeypointDetector& detector,
                                     const std::vector<keypoint::KeypointSample>& samples);

}  // namespace kisgmm::harness
