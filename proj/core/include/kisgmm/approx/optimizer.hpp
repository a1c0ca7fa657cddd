#pragma once

#include <cstdint>
#include <vector>

#include "kisgmm/approx/network.hpp"

namespace kisgmm::approx {

struct AdamOptions {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adaptive moment estimation. Moment buffers are sized lazily on the
// first step and must match the parameter layout afterwards.
class AdamOptimizer {
public:
    explicit AdamOptimizer(AdamOptions opt = {});

    // Applies one update using each tensor's accumulated grad. Throws
    // NumericError on non-finite gradients before touching any value.
    void step(std::vector<ParamTensor>& params);

    void set_lr(double lr);
    double lr() const { return opt_.lr; }
    int64_t steps() const { return t_; }

    // checkpoint access
    const std::vector<std::vector<double>>& first_moments() const { return m_; }
    const std::vector<std::vector<double>>& second_moments() const { return v_; }
    void restore(int64_t t, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v);

private:
    AdamOptions opt_;
    int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace kisgmm::approx
