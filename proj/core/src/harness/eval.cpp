#include "kisgmm/harness/eval.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include "kisgmm/common/errors.hpp"
#include "kisgmm/common/log.hpp"

namespace kisgmm::harness {

namespace {

bool mode_uses_agent(Mode mode) {
    return mode == Mode::SACGMM || mode == Mode::SACGMM_GT || mode == Mode::KISGMM_ZERO ||
           mode == Mode::KISGMM_REFINED;
}

bool mode_uses_detector(Mode mode) {
    return mode == Mode::KEYGMM || mode == Mode::KISGMM_ZERO || mode == Mode::KISGMM_REFINED;
}

}  // namespace

keypoint::RunningReference scan_preamble(sim::Env& env, keypoint::KeypointDetector& detector,
                                         const Eigen::Vector3d& approach_dir, double control_dt,
                                         int steps) {
    keypoint::RunningReference running;
    const Eigen::Vector3d v = 0.1 * approach_dir;
    for (int i = 0; i < steps && !env.episode_done(); ++i) {
        const auto obs = env.render();
        running = keypoint::update_reference(running, detector.predict(obs));
        env.step(v, control_dt);
    }
    return running;
}

bool run_eval_episode(const SkillArtifacts& artifacts, const sim::SceneConfig& scene, Mode mode,
                      sim::DisplacementTier tier, uint64_t seed, int trial,
                      const NoiseConfig& noise, const ScheduleConfig& schedule,
                      int preamble_steps) {
    if (mode_uses_agent(mode) && !artifacts.sac)
        throw ConfigError("eval: mode " + to_string(mode) + " requires a refinement agent");
    if (mode_uses_detector(mode) && !artifacts.key)
        throw ConfigError("eval: mode " + to_string(mode) + " requires a keypoint detector");

    // the episode stream must not depend on the mode under evaluation
    const uint64_t episode_seed =
        hash_combine(hash_combine(seed, static_cast<uint64_t>(trial)), 0xE7A1);

    sim::SceneConfig cfg = scene;
    if (tier != sim::DisplacementTier::None) {
        Rng disp_rng(hash_combine(episode_seed, 0xD15C));
        cfg.displacement = sim::sample_displacement(tier, scene, disp_rng);
    }

    sim::Env env(cfg);
    env.reset({noise.start_std, noise.ref_halfwidth}, episode_seed);

    Eigen::Vector3d reference;
    switch (mode) {
        case Mode::GMM:
        case Mode::SACGMM:
            reference = artifacts.source_reference;
            break;
        case Mode::SACGMM_GT:
            reference = env.effective_handle();  // the one mode allowed ground truth
            break;
        case Mode::KEYGMM:
        case Mode::KISGMM_ZERO:
        case Mode::KISGMM_REFINED: {
            Eigen::Vector3d approach = artifacts.source_reference - sim::kNominalStart;
            approach.normalize();
            const auto running = scan_preamble(env, *artifacts.key, approach,
                                               1.0 / schedule.control_hz, preamble_steps);
            if (running.has_estimate()) {
                reference = running.mean();
            } else {
                log::debug("eval: no accepted keypoint during preamble, stale fallback");
                reference = artifacts.source_reference;
            }
            break;
        }
    }

    rl::EpisodeOptions opt;
    opt.schedule = {1.0 / schedule.control_hz, schedule.window};
    opt.stochastic = false;
    Rng policy_rng(hash_combine(episode_seed, 0xAC7));
    rl::SacAgent* agent = mode_uses_agent(mode) ? artifacts.sac.get() : nullptr;
    rl::refinement_episode(env, artifacts.gmm, agent, reference, opt, policy_rng);
    return env.succeeded();
}

EvalReport evaluate(const ArtifactProvider& artifacts_for, const EvalSpec& spec) {
    EvalReport report;
    for (const auto& scene : spec.scenes)
        for (uint64_t seed : spec.seeds) {
            EvalCell cell;
            cell.mode = spec.mode;
            cell.variant = sim::to_string(scene.variant);
            cell.tier = spec.tier;
            cell.seed = seed;
            cell.trials = spec.trials;
            report.cells.push_back(cell);
        }

    const int n_threads = std::max(1, spec.threads);
    std::vector<std::thread> workers;
    std::atomic<size_t> next_cell{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int w = 0; w < n_threads; ++w) {
        workers.emplace_back([&]() {
            try {
                while (!failed.load()) {
                    const size_t i = next_cell.fetch_add(1);
                    if (i >= report.cells.size()) return;
                    auto& cell = report.cells[i];
                    const auto& scene = spec.scenes[i / spec.seeds.size()];
                    // each worker owns its artifact copy; agents are stateful
                    SkillArtifacts artifacts = artifacts_for(cell.seed);
                    int successes = 0;
                    for (int t = 0; t < spec.trials; ++t)
                        successes += run_eval_episode(artifacts, scene, spec.mode, spec.tier,
                                                      cell.seed, t, spec.noise, spec.schedule,
                                                      spec.preamble_steps)
                                         ? 1
                                         : 0;
                    cell.successes = successes;
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    if (failed.load() && first_error) std::rethrow_exception(first_error);

    report.compute_aggregates();
    return report;
}

}  // namespace kisgmm::harness
