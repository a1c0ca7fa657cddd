#pragma once

#include <string>

#include "kisgmm/approx/network.hpp"
#include "kisgmm/approx/optimizer.hpp"
#include "kisgmm/dynsys/refinement.hpp"
#include "kisgmm/rl/replay.hpp"

namespace kisgmm::rl {

struct SacConfig {
    int latent_dim = 16;
    int components = 5;  // mixture size; action dim is 4 * components
    dynsys::ActionBounds bounds;
    double gamma = 0.99;
    double tau = 0.005;          // Polyak rate
    double lr = 3e-4;
    int batch_size = 128;
    size_t replay_capacity = 50000;
    int warmup_transitions = 500;
    double init_alpha = 0.1;
    double target_entropy = 0.0;  // 0 -> defaults to -(action dim)
    int hidden = 64;
    uint64_t seed = 0;

    int state_dim() const { return latent_dim + 3; }
    int action_dim() const { return dynsys::action_dim(components); }
};

struct UpdateStats {
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    double alpha = 0.0;
    double mean_target_q = 0.0;
    bool skipped = false;
};

struct ActionSample {
    Eigen::VectorXd action;  // within bounds
    double log_prob = 0.0;
};

// Soft actor-critic over refinement actions: squashed-Gaussian actor,
// twin critics with Polyak-averaged targets, learned temperature, and a
// convolutional encoder trained by critic gradients only.
class SacAgent {
public:
    explicit SacAgent(SacConfig cfg);

    Eigen::VectorXd encode(const sim::Observation& obs);

    // The policy density lives on the normalized tanh output in [-1,1]^d;
    // the physical action is that output rescaled by the bounds. log_prob
    // therefore includes the squash correction but not the fixed rescale.
    ActionSample sample_action(const AgentState& state, bool stochastic, Rng& rng);
    double log_prob(const AgentState& state, const Eigen::VectorXd& action);

    UpdateStats update(const std::vector<const Transition*>& batch, Rng& rng);
    UpdateStats update_from_replay(Rng& rng);

    // Verification probes sharing the exact update() code paths: they
    // zero and then accumulate the relevant gradients and return the
    // loss, so hand-derived chains can be checked by finite differences.
    double critic_loss_probe(const std::vector<const Transition*>& batch,
                             const Eigen::VectorXd& targets);
    struct ActorProbe {
        double loss = 0.0;
        double mean_logpi = 0.0;
    };
    ActorProbe actor_loss_probe(const std::vector<Eigen::VectorXd>& state_vecs,
                                const Eigen::MatrixXd& eps);
    Eigen::VectorXd state_vector(const AgentState& s) const;

    ReplayBuffer& replay() { return replay_; }
    const SacConfig& config() const { return cfg_; }
    double alpha() const { return std::exp(log_alpha_); }
    int skipped_updates() const { return skipped_updates_; }
    int64_t updates() const { return update_count_; }

    void save(const std::string& path) const;
    static SacAgent load(const std::string& path);

    // direct access for tests and checkpointing
    approx::Network& actor() { return actor_; }
    approx::Network& critic1() { return critic1_; }
    approx::Network& critic2() { return critic2_; }
    approx::Network& target1() { return target1_; }
    approx::Network& target2() { return target2_; }
    approx::Network& encoder() { return encoder_; }

    // Critic regression target y = r + gamma (1 - done) (min target Q - alpha log pi).
    // Exposed for tests; uses fresh next-state actions drawn from rng.
    Eigen::VectorXd critic_targets(const std::vector<const Transition*>& batch, Rng& rng);

private:
    struct PolicyEval {
        Eigen::VectorXd mean, log_std, eps, pre_squash, squashed, action;
        std::vector<bool> clamped;
        double log_prob = 0.0;
    };

    PolicyEval policy_forward(const Eigen::VectorXd& state_vec, const Eigen::VectorXd* eps,
                              bool record_tape);
    Eigen::VectorXd latent_for(const Transition& t, bool next, bool record_tape);

    SacConfig cfg_;
    Eigen::VectorXd scale_;
    approx::Network encoder_, actor_, critic1_, critic2_, target1_, target2_;
    approx::AdamOptimizer opt_encoder_, opt_actor_, opt_critic1_, opt_critic2_;
    double log_alpha_;
    double target_entropy_;
    ReplayBuffer replay_;
    int skipped_updates_ = 0;
    int64_t update_count_ = 0;
};

}  // namespace kisgmm::rl
