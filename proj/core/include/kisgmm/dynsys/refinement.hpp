#pragma once

#include <vector>

#include "kisgmm/dynsys/gmm.hpp"

namespace kisgmm::dynsys {

// Bounded perturbation of mixture priors and position means, selected by
// the refinement agent once per control window.
struct RefinementAction {
    Eigen::VectorXd delta_priors;    // one per component
    std::vector<Vec3> delta_means;   // position shift per component, meters

    static RefinementAction zeros(int components);
    int components() const { return static_cast<int>(delta_means.size()); }
};

struct ActionBounds {
    double prior = 0.05;
    double mean = 0.06;  // meters
};

// Flat layout: [delta_priors (K), delta_means (K*3 row-major)].
Eigen::VectorXd action_to_vector(const RefinementAction& action);
RefinementAction action_from_vector(const Eigen::VectorXd& v, int components);
int action_dim(int components);
Eigen::VectorXd action_scale_vector(int components, const ActionBounds& bounds);

// Applies the action to a pristine mixture: priors shifted then clamped to
// kPriorFloor and renormalized, position means shifted, covariances and
// velocity means untouched. Out-of-bound entries are clipped. The input is
// never mutated; a zero action returns an identical copy.
GaussianMixtureParams apply_refinement(const GaussianMixtureParams& base,
                                       const RefinementAction& action,
                                       const ActionBounds& bounds);

}  // namespace kisgmm::dynsys
