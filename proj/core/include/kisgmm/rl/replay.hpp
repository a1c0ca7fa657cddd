#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "kisgmm/common/rng.hpp"
#include "kisgmm/sim/env.hpp"

namespace kisgmm::rl {

using Vec3 = Eigen::Vector3d;

// Latent observation plus robot pose, as seen by the refinement agent.
struct AgentState {
    Eigen::VectorXd latent;
    Vec3 pose = Vec3::Zero();
};

// Replay element. The raw observations are carried alongside the encoded
// state so the critic-driven encoder can keep learning from replayed
// data; consecutive transitions share observation storage.
struct Transition {
    AgentState state;
    Eigen::VectorXd action;  // flat refinement action, post-squash
    double reward = 0.0;
    AgentState next_state;
    bool done = false;
    std::shared_ptr<const sim::Observation> obs;       // optional
    std::shared_ptr<const sim::Observation> next_obs;  // optional
};

// Fixed-capacity FIFO ring.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity);

    void push(Transition t);
    size_t size() const { return buffer_.size(); }
    size_t capacity() const { return capacity_; }
    const Transition& at(size_t i) const { return buffer_[i]; }

    std::vector<const Transition*> sample(int batch, Rng& rng) const;

private:
    size_t capacity_;
    size_t next_ = 0;  // overwrite cursor once full
    std::vector<Transition> buffer_;
};

}  // namespace kisgmm::rl
