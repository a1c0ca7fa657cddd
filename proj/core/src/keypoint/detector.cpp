#include "kisgmm/keypoint/detector.hpp"

#include <algorithm>
#include <cmath>

#include "kisgmm/approx/checkpoint.hpp"
#include "kisgmm/approx/presets.hpp"
#include "kisgmm/common/errors.hpp"
#include "kisgmm/common/log.hpp"
#include "kisgmm/common/rng.hpp"
#include "kisgmm/sim/camera.hpp"

namespace kisgmm::keypoint {

namespace {

constexpr int kPixels = sim::kImageSize * sim::kImageSize;

approx::NetworkSpec head_spec(int in, int out, uint64_t seed) {
    approx::NetworkSpec spec;
    spec.seed = seed;
    spec.layers = {approx::DenseSpec{in, out, approx::Activation::Linear}};
    return spec;
}

}  // namespace

double loss_ed(const std::vector<Vec3>& predictions, const std::vector<Vec3>& ground_truth) {
    if (predictions.size() != ground_truth.size())
        throw ConfigError("loss_ed: prediction/ground-truth size mismatch");
    if (predictions.empty()) return 0.0;
    double sum = 0.0;
    for (size_t i = 0; i < predictions.size(); ++i)
        sum += (predictions[i] - ground_truth[i]).norm();
    return sum / static_cast<double>(predictions.size());
}

double loss_kp(const std::vector<double>& presences, const std::vector<char>& labels) {
    if (presences.size() != labels.size())
        throw ConfigError("loss_kp: prediction/label size mismatch");
    if (presences.empty()) return 0.0;
    double sum = 0.0;
    for (size_t i = 0; i < presences.size(); ++i) {
        const double p = std::clamp(presences[i], kPresenceClamp, 1.0 - kPresenceClamp);
        sum += labels[i] ? -std::log(p) : -std::log(1.0 - p);
    }
    return sum / static_cast<double>(presences.size());
}

KeypointDetector::KeypointDetector(uint64_t seed, double lr)
    : seed_(seed),
      backbone_(approx::conv_backbone_spec(4, sim::kImageSize, sim::kImageSize, seed)),
      heat_head_(head_spec(approx::conv_backbone_output(sim::kImageSize, sim::kImageSize), kPixels,
                           hash_combine(seed, 11))),
      depth_head_(head_spec(approx::conv_backbone_output(sim::kImageSize, sim::kImageSize),
                            kPixels, hash_combine(seed, 12))),
      presence_head_(head_spec(approx::conv_backbone_output(sim::kImageSize, sim::kImageSize), 1,
                               hash_combine(seed, 13))),
      opt_backbone_({lr}),
      opt_heat_({lr}),
      opt_depth_({lr}),
      opt_presence_({lr}) {
    // depth prior: start the readout near a plausible range instead of 0,
    // which the heatmap-weighted sum is slow to escape
    for (auto& b : depth_head_.params()[1].values) b = 0.5;
}

KeypointDetector::ForwardCache KeypointDetector::run(const sim::Observation& obs,
                                                     bool record_tape) {
    const auto input = sim::observation_to_input(obs);
    const auto feat = backbone_.forward(input, record_tape);
    const auto heat = heat_head_.forward(feat, record_tape);
    const auto depth = depth_head_.forward(feat, record_tape);
    const auto pres = presence_head_.forward(feat, record_tape);

    ForwardCache c;
    c.depth_vals = depth;
    c.softmax.resize(kPixels);
    double mx = heat[0];
    for (double h : heat) mx = std::max(mx, h);
    double sum = 0.0;
    for (int i = 0; i < kPixels; ++i) {
        c.softmax[i] = std::exp(heat[i] - mx);
        sum += c.softmax[i];
    }
    for (auto& s : c.softmax) s /= sum;

    // spatial soft-argmax over pixel-center coordinates, plus the
    // heatmap-weighted depth readout
    for (int row = 0; row < sim::kImageSize; ++row) {
        for (int col = 0; col < sim::kImageSize; ++col) {
            const double w = c.softmax[row * sim::kImageSize + col];
            c.u += w * col;
            c.v += w * row;
            c.z += w * depth[row * sim::kImageSize + col];
        }
    }
    c.presence = 1.0 / (1.0 + std::exp(-pres[0]));
    c.camera_point = sim::backproject(c.u, c.v, c.z, obs.intrinsics);
    return c;
}

KeypointEstimate KeypointDetector::predict(const sim::Observation& obs) {
    const auto c = run(obs, false);
    KeypointEstimate est;
    est.camera_point = c.camera_point;
    est.presence = c.presence;
    est.world_point = sim::camera_to_world(c.camera_point, obs.camera_pos);
    return est;
}

DetectorTrainStats KeypointDetector::loss_and_gradients(const std::vector<KeypointSample>& batch,
                                                        double lambda_kp) {
    if (batch.empty()) throw ConfigError("keypoint: empty training batch");
    const int N = static_cast<int>(batch.size());
    int n_present = 0;
    for (const auto& s : batch)
        if (s.present_label) ++n_present;

    backbone_.zero_grad();
    heat_head_.zero_grad();
    depth_head_.zero_grad();
    presence_head_.zero_grad();

    DetectorTrainStats stats;
    stats.ed_samples = n_present;

    std::vector<double> g_heat(kPixels), g_depth(kPixels), g_pres(1);
    for (const auto& sample : batch) {
        const auto& obs = *sample.observation;
        const auto c = run(obs, true);
        const auto& K = obs.intrinsics;

        std::fill(g_heat.begin(), g_heat.end(), 0.0);
        std::fill(g_depth.begin(), g_depth.end(), 0.0);
        g_pres[0] = 0.0;

        if (sample.present_label && n_present > 0) {
            const Vec3 diff = c.camera_point - sample.gt_camera_point;
            const double dist = diff.norm();
            stats.loss_ed += dist / n_present;
            if (dist > 1e-12) {
                const Vec3 gp = diff / (dist * n_present);  // dL/d camera_point
                const double gu = gp.x() * c.z / K.fx;
                const double gv = gp.y() * c.z / K.fy;
                const double gz =
                    gp.x() * (c.u - K.cx) / K.fx + gp.y() * (c.v - K.cy) / K.fy + gp.z();
                // soft-argmax and weighted-depth backward through softmax
                double dot = 0.0;
                std::vector<double> gs(kPixels);
                for (int row = 0; row < sim::kImageSize; ++row) {
                    for (int col = 0; col < sim::kImageSize; ++col) {
                        const int i = row * sim::kImageSize + col;
                        gs[i] = gu * col + gv * row + gz * c.depth_vals[i];
                        dot += gs[i] * c.softmax[i];
                    }
                }
                for (int i = 0; i < kPixels; ++i) {
                    g_heat[i] = c.softmax[i] * (gs[i] - dot);
                    g_depth[i] = gz * c.softmax[i];
                }
            }
        }

        if (lambda_kp != 0.0) {
            const double y = sample.present_label ? 1.0 : 0.0;
            const double p = std::clamp(c.presence, kPresenceClamp, 1.0 - kPresenceClamp);
            stats.loss_kp += (sample.present_label ? -std::log(p) : -std::log(1.0 - p)) *
                             lambda_kp / N;
            // fused sigmoid+BCE gradient; zero where the clamp is active
            if (c.presence > kPresenceClamp && c.presence < 1.0 - kPresenceClamp)
                g_pres[0] = lambda_kp * (c.presence - y) / N;
        }

        const auto gf_heat = heat_head_.backward(g_heat);
        const auto gf_depth = depth_head_.backward(g_depth);
        const auto gf_pres = presence_head_.backward(g_pres);
        std::vector<double> gf(gf_heat.size());
        for (size_t i = 0; i < gf.size(); ++i) gf[i] = gf_heat[i] + gf_depth[i] + gf_pres[i];
        backbone_.backward(gf);
    }
    stats.total = stats.loss_ed + stats.loss_kp;
    return stats;
}

DetectorTrainStats KeypointDetector::train_step(const std::vector<KeypointSample>& batch,
                                                double lambda_kp) {
    auto stats = loss_and_gradients(batch, lambda_kp);
    if (!std::isfinite(stats.total) || !backbone_.all_finite() || !heat_head_.all_finite() ||
        !depth_head_.all_finite() || !presence_head_.all_finite()) {
        ++skipped_steps_;
        log::warn("keypoint: non-finite loss or gradient, step skipped");
        stats.skipped = true;
        return stats;
    }
    opt_backbone_.step(backbone_.params());
    opt_heat_.step(heat_head_.params());
    opt_depth_.step(depth_head_.params());
    opt_presence_.step(presence_head_.params());
    return stats;
}

void KeypointDetector::save(const std::string& path) const {
    approx::Checkpoint ck;
    ck.meta["kind"] = "keypoint";
    ck.meta["seed"] = seed_;
    ck.add_network("backbone", backbone_);
    ck.add_network("heatmap", heat_head_);
    ck.add_network("depth", depth_head_);
    ck.add_network("presence", presence_head_);
    ck.save(path);
}

KeypointDetector KeypointDetector::load(const std::string& path) {
    const auto ck = approx::Checkpoint::load(path);
    if (ck.meta.value("kind", "") != "keypoint")
        throw ConfigError("keypoint: '" + path + "' is not a detector checkpoint");
    KeypointDetector det(ck.meta.at("seed").get<uint64_t>());
    det.backbone_ = ck.network("backbone");
    det.heat_head_ = ck.network("heatmap");
    det.depth_head_ = ck.network("depth");
    det.presence_head_ = ck.network("presence");
    return det;
}

}  // namespace kisgmm::keypoint
