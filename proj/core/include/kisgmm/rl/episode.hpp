#pragma once

#include <memory>
#include <vector>

#include "kisgmm/dynsys/gmr.hpp"
#include "kisgmm/dynsys/refinement.hpp"
#include "kisgmm/rl/sac.hpp"
#include "kisgmm/sim/env.hpp"

namespace kisgmm::rl {

// Control frequencies: the mixture controller runs every control_dt; the
// refinement agent picks one action per window of GMM steps.
struct ControlSchedule {
    double control_dt = dynsys::kControlDt;
    int window = 16;
};

struct EpisodeOptions {
    ControlSchedule schedule;
    bool stochastic = false;        // sample vs deterministic actions
    bool store_transitions = false; // push into the agent's replay
    bool train = false;             // one update per decision after warmup
    bool collect_frames = false;    // keep decision-cadence observations
};

struct EpisodeResult {
    bool success = false;
    int steps = 0;
    int decisions = 0;
    double episode_return = 0.0;
    double mean_critic_loss = 0.0;
    double mean_actor_loss = 0.0;
    double alpha = 0.0;
    int updates = 0;
    std::vector<std::shared_ptr<const sim::Observation>> frames;
};

// Runs one episode on an already-reset environment: observe, encode,
// pick a bounded parameter perturbation, apply it to the pristine
// mixture, roll the refined controller for one window, repeat. A null
// agent runs the plain mixture (zero action).
EpisodeResult refinement_episode(sim::Env& env, const dynsys::GaussianMixtureParams& base_gmm,
                                 SacAgent* agent, const Vec3& reference,
                                 const EpisodeOptions& opt, Rng& rng);

}  // namespace kisgmm::rl
