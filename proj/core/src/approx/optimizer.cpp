#include "kisgmm/approx/optimizer.hpp"

#include <cmath>

#include "kisgmm/common/errors.hpp"

namespace kisgmm::approx {

AdamOptimizer::AdamOptimizer(AdamOptions opt) : opt_(opt) {
    if (opt_.lr < 0.0) throw ConfigError("adam: learning rate must be >= 0");
    if (opt_.beta1 < 0.0 || opt_.beta1 >= 1.0 || opt_.beta2 < 0.0 || opt_.beta2 >= 1.0)
        throw ConfigError("adam: betas must be in [0, 1)");
}

void AdamOptimizer::set_lr(double lr) {
    if (lr < 0.0) throw ConfigError("adam: learning rate must be >= 0");
    opt_.lr = lr;
}

void AdamOptimizer::step(std::vector<ParamTensor>& params) {
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i].values.size(), 0.0);
            v_[i].assign(params[i].values.size(), 0.0);
        }
    }
    if (m_.size() != params.size()) throw ConfigError("adam: parameter layout changed");

    for (const auto& p : params)
        for (double g : p.grad)
            if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient, update skipped");

    ++t_;
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        if (m_[i].size() != p.values.size()) throw ConfigError("adam: tensor size changed");
        for (size_t k = 0; k < p.values.size(); ++k) {
            const double g = p.grad[k];
            m_[i][k] = opt_.beta1 * m_[i][k] + (1.0 - opt_.beta1) * g;
            v_[i][k] = opt_.beta2 * v_[i][k] + (1.0 - opt_.beta2) * g * g;
            const double mhat = m_[i][k] / bc1;
            const double vhat = v_[i][k] / bc2;
            p.values[k] -= opt_.lr * mhat / (std::sqrt(vhat) + opt_.eps);
            if (!std::isfinite(p.values[k]))
                throw NumericError("adam: non-finite parameter after update");
        }
    }
}

void AdamOptimizer::restore(int64_t t, std::vector<std::vector<double>> m,
                            std::vector<std::vector<double>> v) {
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
}

}  // namespace kisgmm::approx
