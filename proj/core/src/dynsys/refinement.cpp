#include "kisgmm/dynsys/refinement.hpp"

#include <algorithm>
#include <cmath>

#include "kisgmm/common/errors.hpp"
#include "kisgmm/common/log.hpp"

namespace kisgmm::dynsys {

RefinementAction RefinementAction::zeros(int components) {
    RefinementAction a;
    a.delta_priors = Eigen::VectorXd::Zero(components);
    a.delta_means.assign(components, Vec3::Zero());
    return a;
}

int action_dim(int components) { return components * 4; }

Eigen::VectorXd action_to_vector(const RefinementAction& action) {
    const int K = action.components();
    Eigen::VectorXd v(action_dim(K));
    v.head(K) = action.delta_priors;
    for (int k = 0; k < K; ++k) v.segment<3>(K + 3 * k) = action.delta_means[k];
    return v;
}

RefinementAction action_from_vector(const Eigen::VectorXd& v, int components) {
    if (v.size() != action_dim(components))
        throw ConfigError("refinement action: vector length mismatch");
    RefinementAction a;
    a.delta_priors = v.head(components);
    a.delta_means.resize(components);
    for (int k = 0; k < components; ++k) a.delta_means[k] = v.segment<3>(components + 3 * k);
    return a;
}

Eigen::VectorXd action_scale_vector(int components, const ActionBounds& bounds) {
    Eigen::VectorXd s(action_dim(components));
    s.head(components).setConstant(bounds.prior);
    s.tail(3 * components).setConstant(bounds.mean);
    return s;
}

GaussianMixtureParams apply_refinement(const GaussianMixtureParams& base,
                                       const RefinementAction& action,
                                       const ActionBounds& bounds) {
    if (action.components() != base.components ||
        action.delta_priors.size() != base.components)
        throw ConfigError("apply_refinement: action does not match component count");

    int clipped = 0;
    Eigen::VectorXd dp = action.delta_priors;
    for (int k = 0; k < base.components; ++k) {
        const double c = std::clamp(dp(k), -bounds.prior, bounds.prior);
        if (c != dp(k)) ++clipped;
        dp(k) = c;
    }
    std::vector<Vec3> dm(action.delta_means);
    for (auto& d : dm) {
        for (int i = 0; i < 3; ++i) {
            const double c = std::clamp(d(i), -bounds.mean, bounds.mean);
            if (c != d(i)) ++clipped;
            d(i) = c;
        }
    }
    if (clipped > 0) log::debug("apply_refinement: clipped %d action entries", clipped);

    // exact no-op short circuit keeps zero-action rollouts bitwise stable
    bool all_zero = dp.isZero(0.0);
    for (const auto& d : dm) all_zero = all_zero && d.isZero(0.0);
    if (all_zero) return base;

    GaussianMixtureParams out = base;
    out.priors += dp;
    out.priors = out.priors.cwiseMax(kPriorFloor);
    out.priors /= out.priors.sum();
    for (int k = 0; k < base.components; ++k) out.means[k].head<3>() += dm[k];
    return out;
}

}  // namespace kisgmm::dynsys
