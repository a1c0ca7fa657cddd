#include "kisgmm/dynsys/gmm.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <Eigen/Eigenvalues>

#include "kisgmm/common/errors.hpp"
#include "kisgmm/common/log.hpp"
#include "kisgmm/common/rng.hpp"

namespace kisgmm::dynsys {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// log N(x; mu, Sigma) given the Cholesky factor of Sigma
double log_gaussian(const Vec6& x, const Vec6& mu, const Eigen::LLT<Mat6>& llt) {
    const Vec6 d = x - mu;
    const Vec6 z = llt.matrixL().solve(d);
    double log_det = 0.0;
    for (int i = 0; i < 6; ++i) log_det += std::log(llt.matrixL()(i, i));
    return -0.5 * z.squaredNorm() - log_det - 3.0 * kLog2Pi;
}

Mat6 sample_covariance(const std::vector<Vec6>& samples, const Vec6& mean) {
    Mat6 cov = Mat6::Zero();
    for (const auto& s : samples) {
        const Vec6 d = s - mean;
        cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(samples.size());
    return cov;
}

// Constrained M-step solution over {Sigma : lambda_min >= floor}: clamp
// the eigenvalues. Unlike an additive ridge this leaves well-conditioned
// covariances untouched, which keeps EM monotone.
Mat6 floor_eigenvalues(const Mat6& cov) {
    Eigen::SelfAdjointEigenSolver<Mat6> eig(cov);
    if (eig.eigenvalues().minCoeff() >= kSigmaFloor) return cov;
    const Eigen::Matrix<double, 6, 1> lam = eig.eigenvalues().cwiseMax(kSigmaFloor);
    const Mat6 m = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (m + m.transpose());
}

}  // namespace

void validate(const GaussianMixtureParams& gmm) {
    if (gmm.components < 1) throw ConfigError("gmm: needs at least one component");
    if (gmm.priors.size() != gmm.components ||
        static_cast<int>(gmm.means.size()) != gmm.components ||
        static_cast<int>(gmm.covariances.size()) != gmm.components)
        throw ConfigError("gmm: inconsistent component counts");
    if ((gmm.priors.array() < 0.0).any()) throw ConfigError("gmm: negative prior");
    if (std::abs(gmm.priors.sum() - 1.0) > 1e-9)
        throw ConfigError("gmm: priors must sum to 1 within 1e-9");
    for (int k = 0; k < gmm.components; ++k) {
        if (!gmm.means[k].allFinite() || !gmm.covariances[k].allFinite())
            throw ConfigError("gmm: non-finite parameters in component " + std::to_string(k));
        if ((gmm.covariances[k] - gmm.covariances[k].transpose()).cwiseAbs().maxCoeff() > 1e-9)
            throw ConfigError("gmm: covariance " + std::to_string(k) + " not symmetric");
        Eigen::SelfAdjointEigenSolver<Mat6> eig(gmm.covariances[k]);
        if (eig.eigenvalues().minCoeff() < kSigmaFloor - 1e-12)
            throw ConfigError("gmm: covariance " + std::to_string(k) +
                              " below the eigenvalue floor");
    }
}

std::vector<Vec6> extract_joint_samples(const DemonstrationSet& demos) {
    validate_for_fitting(demos);
    std::vector<Vec6> samples;
    for (size_t j = 0; j < demos.trajectories.size(); ++j) {
        const auto& poses = demos.trajectories[j].poses;
        for (size_t i = 0; i + 1 < poses.size(); ++i) {
            const double dt = poses[i + 1].time - poses[i].time;
            if (dt <= 0.0)
                throw ConfigError("demonstrations: trajectory " + std::to_string(j) +
                                  " has non-positive time delta");
            Vec6 s;
            s.head<3>() = poses[i].position - demos.reference_point;
            s.tail<3>() = (poses[i + 1].position - poses[i].position) / dt;
            samples.push_back(s);
        }
    }
    return samples;
}

EmResult fit_em(const std::vector<Vec6>& samples, const EmOptions& opt) {
    const int n = static_cast<int>(samples.size());
    const int K = opt.components;
    if (K < 1) throw ConfigError("fit_em: component count must be >= 1");
    if (n < K)
        throw ConfigError("fit_em: " + std::to_string(n) + " samples cannot support " +
                          std::to_string(K) + " components");

    Vec6 global_mean = Vec6::Zero();
    for (const auto& s : samples) global_mean += s;
    global_mean /= n;
    const Mat6 global_cov = floor_eigenvalues(sample_covariance(samples, global_mean));

    Rng rng(opt.seed);
    EmResult result;
    auto& gmm = result.gmm;
    gmm.components = K;
    gmm.priors = Eigen::VectorXd::Constant(K, 1.0 / K);
    gmm.means.resize(K);
    gmm.covariances.assign(K, global_cov);
    for (int k = 0; k < K; ++k)
        gmm.means[k] = samples[static_cast<size_t>(rng.below(static_cast<uint64_t>(n)))];

    Eigen::MatrixXd resp(n, K);
    std::vector<Eigen::LLT<Mat6>> llts(K);
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < opt.max_iter; ++iter) {
        // E-step
        for (int k = 0; k < K; ++k) {
            llts[k].compute(gmm.covariances[k]);
            if (llts[k].info() != Eigen::Success)
                throw NumericError("fit_em: covariance factorization failed");
        }
        Eigen::VectorXd log_prior(K);
        for (int k = 0; k < K; ++k)
            log_prior(k) = std::log(std::max(gmm.priors(k), 1e-300));

        double ll = 0.0;
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd lp(K);
            for (int k = 0; k < K; ++k)
                lp(k) = log_prior(k) + log_gaussian(samples[i], gmm.means[k], llts[k]);
            const double m = lp.maxCoeff();
            const double lse = m + std::log((lp.array() - m).exp().sum());
            ll += lse;
            for (int k = 0; k < K; ++k) resp(i, k) = std::exp(lp(k) - lse);
        }

        // slack covers rounding plus the covariance-floor perturbation,
        // which is not exactly monotone on rank-deficient data
        if (ll + 1e-9 + 1e-10 * std::abs(prev_ll) < prev_ll)
            throw NumericError("fit_em: log-likelihood decreased (" + std::to_string(prev_ll) +
                               " -> " + std::to_string(ll) + ")");
        result.log_likelihood.push_back(ll);
        result.iterations = iter + 1;
        const bool converged = std::abs(ll - prev_ll) < opt.tol;
        prev_ll = ll;

        // M-step
        bool reseeded = false;
        for (int k = 0; k < K; ++k) {
            const double nk = resp.col(k).sum();
            if (nk < 1e-12) {
                const auto pick = static_cast<size_t>(rng.below(static_cast<uint64_t>(n)));
                gmm.means[k] = samples[pick];
                gmm.covariances[k] = global_cov;
                gmm.priors(k) = 1.0 / n;
                ++result.reseeded_components;
                reseeded = true;
                log::warn("fit_em: component %d degenerate, re-seeded from sample %zu", k, pick);
                continue;
            }
            Vec6 mu = Vec6::Zero();
            for (int i = 0; i < n; ++i) mu += resp(i, k) * samples[i];
            mu /= nk;
            Mat6 cov = Mat6::Zero();
            for (int i = 0; i < n; ++i) {
                const Vec6 d = samples[i] - mu;
                cov.noalias() += resp(i, k) * (d * d.transpose());
            }
            cov /= nk;
            gmm.means[k] = mu;
            cov = 0.5 * (cov + cov.transpose());
            gmm.covariances[k] = floor_eigenvalues(cov);
            gmm.priors(k) = nk / n;
        }
        gmm.priors /= gmm.priors.sum();

        if (reseeded) {
            prev_ll = -std::numeric_limits<double>::infinity();  // restart monotonicity window
        } else if (converged) {
            break;
        }
    }

    // final prior floor, kept consistent with apply_refinement
    gmm.priors = gmm.priors.cwiseMax(kPriorFloor);
    gmm.priors /= gmm.priors.sum();
    validate(gmm);
    return result;
}

nlohmann::json gmm_to_json(const GaussianMixtureParams& gmm) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["components"] = gmm.components;
    j["priors"] = std::vector<double>(gmm.priors.data(), gmm.priors.data() + gmm.priors.size());
    j["means"] = nlohmann::json::array();
    j["covariances"] = nlohmann::json::array();
    for (int k = 0; k < gmm.components; ++k) {
        j["means"].push_back(std::vector<double>(gmm.means[k].data(), gmm.means[k].data() + 6));
        nlohmann::json rows = nlohmann::json::array();
        for (int r = 0; r < 6; ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (int c = 0; c < 6; ++c) row.push_back(gmm.covariances[k](r, c));
            rows.push_back(std::move(row));
        }
        j["covariances"].push_back(std::move(rows));
    }
    return j;
}

GaussianMixtureParams gmm_from_json(const nlohmann::json& j) {
    if (j.value("format_version", 0) != 1) throw ConfigError("gmm: unsupported format_version");
    GaussianMixtureParams gmm;
    gmm.components = j.at("components");
    const auto priors = j.at("priors").get<std::vector<double>>();
    gmm.priors = Eigen::Map<const Eigen::VectorXd>(priors.data(), priors.size());
    for (const auto& mj : j.at("means")) {
        Vec6 m;
        for (int i = 0; i < 6; ++i) m(i) = mj.at(i);
        gmm.means.push_back(m);
    }
    for (const auto& cj : j.at("covariances")) {
        Mat6 c;
        for (int r = 0; r < 6; ++r)
            for (int col = 0; col < 6; ++col) c(r, col) = cj.at(r).at(col);
        gmm.covariances.push_back(c);
    }
    validate(gmm);
    return gmm;
}

void save_gmm(const GaussianMixtureParams& gmm, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw ConfigError("gmm: cannot open '" + path + "' for writing");
    os << gmm_to_json(gmm).dump(2) << "\n";
}

GaussianMixtureParams load_gmm(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("gmm: cannot open '" + path + "'");
    nlohmann::json j;
    is >> j;
    return gmm_from_json(j);
}

}  // namespace kisgmm::dynsys
