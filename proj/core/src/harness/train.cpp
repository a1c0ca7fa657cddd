#include "kisgmm/harness/train.hpp"

#include <deque>

#include "kisgmm/common/errors.hpp"
#include "kisgmm/common/log.hpp"
#include "kisgmm/keypoint/augment.hpp"

namespace kisgmm::harness {

namespace {

constexpr size_t kKeyDatasetCap = 20000;
constexpr size_t kValDatasetCap = 2000;
constexpr int kKeyBurstSteps = 25;
constexpr int kKeyBatch = 32;
constexpr double kOcclusionFraction = 0.25;
constexpr size_t kKeyMinDataset = 200;
constexpr size_t kTargetFrameCap = 3000;
constexpr int kThresholdWindow = 50;

// fixed-capacity sample pool with overwrite-on-wrap
struct SamplePool {
    std::vector<keypoint::KeypointSample> data;
    size_t cursor = 0;
    size_t cap;

    explicit SamplePool(size_t capacity) : cap(capacity) {}
    void push(keypoint::KeypointSample s) {
        if (data.size() < cap) {
            data.push_back(std::move(s));
        } else {
            data[cursor] = std::move(s);
            cursor = (cursor + 1) % cap;
        }
    }
};

keypoint::KeypointSample labeled_sample(const std::shared_ptr<const sim::Observation>& obs,
                                        const Eigen::Vector3d& handle_world) {
    keypoint::KeypointSample s;
    s.observation = obs;
    const Eigen::Vector3d cam_pt = sim::world_to_camera(handle_world, obs->camera_pos);
    const auto proj = sim::project(cam_pt, obs->intrinsics);
    s.present_label = proj.present;
    if (proj.present) s.gt_camera_point = cam_pt;
    return s;
}

void key_training_burst(keypoint::KeypointDetector& detector, const SamplePool& pool, Rng& rng) {
    for (int step = 0; step < kKeyBurstSteps; ++step) {
        std::vector<keypoint::KeypointSample> batch;
        batch.reserve(kKeyBatch);
        for (int b = 0; b < kKeyBatch; ++b) {
            const auto& s = pool.data[static_cast<size_t>(rng.below(pool.data.size()))];
            batch.push_back(keypoint::augment_occlude(s, rng.next_u64(), kOcclusionFraction));
        }
        detector.train_step(batch, 1.0);
    }
}

double window_rate(const std::deque<int>& window) {
    if (window.empty()) return 0.0;
    int s = 0;
    for (int v : window) s += v;
    return static_cast<double>(s) / window.size();
}

}  // namespace

DetectorValidation validate_detector(keypoint::KeypointDetector& detector,
                                     const std::vector<keypoint::KeypointSample>& samples) {
    DetectorValidation val;
    double err_sum = 0.0;
    int correct = 0;
    for (const auto& s : samples) {
        const auto est = detector.predict(*s.observation);
        const bool predicted_present = est.presence > 0.5;
        if (predicted_present == s.present_label) ++correct;
        if (s.present_label) {
            err_sum += (est.camera_point - s.gt_camera_point).norm();
            ++val.present_frames;
        }
    }
    val.frames = static_cast<int>(samples.size());
    if (val.present_frames > 0) val.mean_camera_error = err_sum / val.present_frames;
    if (val.frames > 0) val.presence_accuracy = static_cast<double>(correct) / val.frames;
    return val;
}

SourceTrainResult refine_source(const RunConfig& config,
                                const dynsys::GaussianMixtureParams& gmm, uint64_t seed) {
    if (config.mode != Mode::SACGMM && config.mode != Mode::SACGMM_GT)
        throw ConfigError("refine_source: mode must be sacgmm or sacgmm_gt, got " +
                          to_string(config.mode));
    const auto suite = config.variant_suite();
    const auto& source = suite.front();
    if (source.variant != sim::Variant::A)
        throw ConfigError("refine_source: suite must start with the source variant");

    SourceTrainResult result;
    rl::SacConfig sac_cfg;
    sac_cfg.components = gmm.components;
    sac_cfg.seed = hash_combine(seed, 0x5ac);
    result.sac = std::make_shared<rl::SacAgent>(sac_cfg);
    result.key = std::make_shared<keypoint::KeypointDetector>(hash_combine(seed, 0x3e7));

    SamplePool train_pool(kKeyDatasetCap), val_pool(kValDatasetCap);
    uint64_t frame_counter = 0;

    Rng rng(hash_combine(seed, 0x7241));
    sim::Env env(source);
    std::deque<int> first_window, last_window;

    rl::EpisodeOptions opt;
    opt.schedule = config.control_schedule();
    opt.stochastic = true;
    opt.store_transitions = true;
    opt.train = true;
    opt.collect_frames = true;

    for (int ep = 0; ep < config.budgets.refine_episodes; ++ep) {
        env.reset({config.noise.start_std, config.noise.ref_halfwidth},
                  hash_combine(seed, hash_combine(0xE9, static_cast<uint64_t>(ep))));
        const Eigen::Vector3d reference = config.mode == Mode::SACGMM_GT
                                              ? env.effective_handle()
                                              : source.handle_position;
        const auto res = rl::refinement_episode(env, gmm, result.sac.get(), reference, opt, rng);

        // every observed frame becomes detector training data, labeled
        // with the simulator's ground truth (source environment only)
        for (const auto& frame : res.frames) {
            auto sample = labeled_sample(frame, env.effective_handle());
            if (frame_counter % 10 == 9)
                val_pool.push(std::move(sample));
            else
                train_pool.push(std::move(sample));
            ++frame_counter;
        }
        if ((ep + 1) % config.schedule.key_update_period == 0 &&
            train_pool.data.size() >= kKeyMinDataset)
            key_training_burst(*result.key, train_pool, rng);

        TrainMetricsRow row;
        row.episode = ep;
        row.episode_return = res.episode_return;
        row.success = res.success;
        row.critic_loss = res.mean_critic_loss;
        row.actor_loss = res.mean_actor_loss;
        row.alpha = res.alpha;
        result.metrics.push_back(row);

        if (static_cast<int>(first_window.size()) < 100) first_window.push_back(res.success);
        last_window.push_back(res.success);
        if (last_window.size() > 100) last_window.pop_front();
    }

    result.initial_success = window_rate(first_window);
    result.final_success = window_rate(last_window);
    result.improvement_warning = result.final_success <= result.initial_success;
    if (result.improvement_warning)
        log::warn("refine_source: budget exhausted without improvement (%.2f -> %.2f)",
                  result.initial_success, result.final_success);

    const auto val = validate_detector(*result.key, val_pool.data);
    result.key_val_error = val.mean_camera_error;
    result.key_val_presence_acc = val.presence_accuracy;
    result.key_val_frames = val.frames;
    return result;
}

TargetTrainResult refine_target(const RunConfig& config, const SkillArtifacts& source,
                                const sim::SceneConfig& target_scene, uint64_t seed) {
    if (!source.sac || !source.key)
        throw ConfigError("refine_target: source artifacts need both agent and detector");

    TargetTrainResult result;

    struct Arm {
        const char* name;
        int budget;
        std::shared_ptr<rl::SacAgent> sac;
        std::shared_ptr<keypoint::KeypointDetector> key;
        bool pseudo_labels;
    };
    Arm arms[2] = {
        {"refined", config.budgets.target_episodes, std::make_shared<rl::SacAgent>(*source.sac),
         std::make_shared<keypoint::KeypointDetector>(*source.key), true},
        {"scratch", config.budgets.scratch_episodes, nullptr,
         std::make_shared<keypoint::KeypointDetector>(*source.key), false},
    };
    rl::SacConfig scratch_cfg = source.sac->config();
    scratch_cfg.seed = hash_combine(seed, 0x5c7a);
    arms[1].sac = std::make_shared<rl::SacAgent>(scratch_cfg);

    Eigen::Vector3d approach = source.source_reference - sim::kNominalStart;
    approach.normalize();

    rl::EpisodeOptions opt;
    opt.schedule = config.control_schedule();
    opt.stochastic = true;
    opt.store_transitions = true;
    opt.train = true;
    opt.collect_frames = true;

    keypoint::PseudoLabelOptions pl_opt;
    pl_opt.occlusion_fraction = kOcclusionFraction;

    for (int a = 0; a < 2; ++a) {
        auto& arm = arms[a];
        Rng rng(hash_combine(seed, hash_combine(0x7a26e7, static_cast<uint64_t>(a))));
        sim::Env env(target_scene);
        std::vector<std::shared_ptr<const sim::Observation>> frame_store;
        keypoint::SuccessWindow window(3);
        std::deque<int> moving;
        TargetArmResult arm_result;
        arm_result.sac = arm.sac;
        arm_result.key = arm.key;

        for (int ep = 0; ep < arm.budget; ++ep) {
            env.reset({config.noise.start_std, config.noise.ref_halfwidth},
                      hash_combine(seed, hash_combine(0x7E2, static_cast<uint64_t>(ep))));
            const auto running = scan_preamble(env, *arm.key, approach,
                                               opt.schedule.control_dt, config.preamble_steps);
            const Eigen::Vector3d reference =
                running.has_estimate() ? running.mean() : source.source_reference;

            const auto res =
                rl::refinement_episode(env, source.gmm, arm.sac.get(), reference, opt, rng);
            ++arm_result.episodes_run;

            if (arm.pseudo_labels) {
                for (const auto& f : res.frames) {
                    if (frame_store.size() >= kTargetFrameCap)
                        frame_store.erase(frame_store.begin());
                    frame_store.push_back(f);
                }
                if (res.success) {
                    keypoint::SuccessfulEpisode ep_frames;
                    ep_frames.frames = res.frames;
                    for (const auto& f : res.frames)
                        ep_frames.estimates.push_back(arm.key->predict(*f));
                    window.add(std::move(ep_frames));
                    keypoint::pseudo_label_refine(*arm.key, window, frame_store, pl_opt, rng);
                }
            }

            moving.push_back(res.success ? 1 : 0);
            if (static_cast<int>(moving.size()) > kThresholdWindow) moving.pop_front();
            CurveRow row;
            row.arm = arm.name;
            row.episode = ep;
            row.success = res.success;
            row.moving_success = window_rate(moving);
            result.curves.push_back(row);

            if (static_cast<int>(moving.size()) == kThresholdWindow &&
                row.moving_success >= result.success_threshold) {
                arm_result.episodes_to_threshold = ep + 1;
                break;
            }
        }
        if (a == 0)
            result.refined = std::move(arm_result);
        else
            result.scratch = std::move(arm_result);
    }
    return result;
}

}  // namespace kisgmm::harness
