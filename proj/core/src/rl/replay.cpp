#include "kisgmm/rl/replay.hpp"

#include "kisgmm/common/errors.hpp"

namespace kisgmm::rl {

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay: capacity must be positive");
    buffer_.reserve(std::min<size_t>(capacity, 4096));
}

void ReplayBuffer::push(Transition t) {
    if (buffer_.size() < capacity_) {
        buffer_.push_back(std::move(t));
    } else {
        buffer_[next_] = std::move(t);  // FIFO: oldest slot is overwritten
        next_ = (next_ + 1) % capacity_;
    }
}

std::vector<const Transition*> ReplayBuffer::sample(int batch, Rng& rng) const {
    if (buffer_.empty()) throw StateError("replay: cannot sample from an empty buffer");
    std::vector<const Transition*> out;
    out.reserve(batch);
    for (int i = 0; i < batch; ++i)
        out.push_back(&buffer_[static_cast<size_t>(rng.below(buffer_.size()))]);
    return out;
}

}  // namespace kisgmm::rl
