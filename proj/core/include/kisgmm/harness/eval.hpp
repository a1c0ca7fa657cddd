#pragma once

#include <memory>

#include "kisgmm/harness/report.hpp"
#include "kisgmm/harness/run_config.hpp"
#include "kisgmm/keypoint/pseudo_label.hpp"
#include "kisgmm/rl/episode.hpp"

namespace kisgmm::harness {

// Everything a skill model needs at evaluation time. The agent and
// detector stay null for modes that do not use them.
struct SkillArtifacts {
    dynsys::GaussianMixtureParams gmm;
    Eigen::Vector3d source_reference = Eigen::Vector3d::Zero();  // stale, from the source scene
    std::shared_ptr<rl::SacAgent> sac;
    std::shared_ptr<keypoint::KeypointDetector> key;
};

// Drives the effector along the nominal approach direction while the
// detector's accepted predictions accumulate; the mixture controller
// engages afterwards.
keypoint::RunningReference scan_preamble(sim::Env& env, keypoint::KeypointDetector& detector,
                                         const Eigen::Vector3d& approach_dir, double control_dt,
                                         int steps);

struct EvalSpec {
    Mode mode = Mode::GMM;
    sim::DisplacementTier tier = sim::DisplacementTier::None;
    std::vector<sim::SceneConfig> scenes;
    int trials = 100;
    std::vector<uint64_t> seeds = {1, 2, 3};
    NoiseConfig noise;
    ScheduleConfig schedule;
    int preamble_steps = 20;
    int threads = 2;
};

// Runs one evaluation episode; the environment noise stream depends only
// on (seed, trial), never on the mode, so mode comparisons share episodes.
bool run_eval_episode(const SkillArtifacts& artifacts, const sim::SceneConfig& scene, Mode mode,
                      sim::DisplacementTier tier, uint64_t seed, int trial,
                      const NoiseConfig& noise, const ScheduleConfig& schedule,
                      int preamble_steps);

// Per-seed artifacts: artifacts_for(seed) must return the bundle trained
// under that seed.
using ArtifactProvider = std::function<SkillArtifacts(uint64_t seed)>;

EvalReport evaluate(const ArtifactProvider& artifacts_for, const EvalSpec& spec);

}  // namespace kisgmm::harness
