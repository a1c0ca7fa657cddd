#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kisgmm/dynsys/trajectory.hpp"

namespace kisgmm::dynsys {

inline constexpr double kSigmaFloor = 1e-6;   // added to covariance diagonals
inline constexpr double kPriorFloor = 1e-4;   // lower clamp on mixture priors

// Joint Gaussian mixture over (position - reference, velocity) in R^6.
struct GaussianMixtureParams {
    int components = 0;
    Eigen::VectorXd priors;             // components, sums to 1
    std::vector<Vec6> means;            // position block [0..2], velocity block [3..5]
    std::vector<Mat6> covariances;      // symmetric positive definite
};

// Throws ConfigError if the mixture violates its invariants (prior
// normalization within 1e-9, symmetric covariances with min eigenvalue
// >= kSigmaFloor).
void validate(const GaussianMixtureParams& gmm);

// One joint sample per consecutive pose pair: (xi_i - ref, (xi_{i+1} - xi_i)/dt).
// Rejects trajectories containing a non-positive dt.
std::vector<Vec6> extract_joint_samples(const DemonstrationSet& demos);

struct EmOptions {
    int components = 5;
    uint64_t seed = 0;
    int max_iter = 200;
    double tol = 1e-7;
};

struct EmResult {
    GaussianMixtureParams gmm;
    std::vector<double> log_likelihood;  // one entry per EM iteration
    int reseeded_components = 0;
    int iterations = 0;
};

// Expectation-maximization fit. Log-likelihood is checked to be
// non-decreasing (1e-9 slack) every iteration; degenerate components are
// re-seeded from a random sample.
EmResult fit_em(const std::vector<Vec6>& samples, const EmOptions& opt);

nlohmann::json gmm_to_json(const GaussianMixtureParams& gmm);
GaussianMixtureParams gmm_from_json(const nlohmann::json& j);
void save_gmm(const GaussianMixtureParams& gmm, const std::string& path);
GaussianMixtureParams load_gmm(const std::string& path);

}  // namespace kisgmm::dynsys
