#include "kisgmm/harness/commands.hpp"

#include <chrono>
#include <filesystem>

#include "kisgmm/common/errors.hpp"
#include "kisgmm/common/log.hpp"

namespace kisgmm::harness {

namespace {

namespace fs = std::filesystem;

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create directory '" + dir + "'");
}

std::string mode_slug(Mode mode) {
    // checkpoint files are shared by every mode evaluating the same arm
    return mode == Mode::SACGMM_GT ? "sacgmm_gt" : "sacgmm";
}

}  // namespace

std::string demos_filename(const RunConfig& config) {
    return "demos_" + sim::to_string(config.skill) + ".json";
}
std::string gmm_filename(const RunConfig& config) {
    return "gmm_" + sim::to_string(config.skill) + ".json";
}
std::string sac_filename(const RunConfig& config, Mode mode, uint64_t seed) {
    return "sac_" + sim::to_string(config.skill) + "_" + mode_slug(mode) + "_s" +
           std::to_string(seed) + ".ckpt";
}
std::string key_filename(const RunConfig& config, Mode mode, uint64_t seed) {
    return "key_" + sim::to_string(config.skill) + "_" + mode_slug(mode) + "_s" +
           std::to_string(seed) + ".ckpt";
}
std::string refined_sac_filename(const RunConfig& config, sim::Variant variant, uint64_t seed) {
    return "sac_" + sim::to_string(config.skill) + "_refined_" + sim::to_string(variant) + "_s" +
           std::to_string(seed) + ".ckpt";
}
std::string refined_key_filename(const RunConfig& config, sim::Variant variant, uint64_t seed) {
    return "key_" + sim::to_string(config.skill) + "_refined_" + sim::to_string(variant) + "_s" +
           std::to_string(seed) + ".ckpt";
}

dynsys::DemonstrationSet cmd_gen_demos(const RunConfig& config, const std::string& out_dir) {
    config.validate();
    if (config.demo_count < 1) throw ConfigError("gen-demos: demo_count must be >= 1");
    ensure_dir(out_dir);

    const auto suite = config.variant_suite();
    const auto& source = suite.front();
    if (source.variant != sim::Variant::A)
        throw ConfigError("gen-demos: demonstrations come from the source variant only");

    const uint64_t seed = config.seeds.front();
    const double dt = 1.0 / config.schedule.control_hz;

    dynsys::DemonstrationSet demos;
    demos.reference_point = source.handle_position;

    sim::Env env(source);
    int attempts = 0;
    while (static_cast<int>(demos.trajectories.size()) < config.demo_count) {
        if (++attempts > config.demo_count * 20)
            throw StateError("gen-demos: expert keeps failing, check scene constants");
        // every episode carries the full noise model, demonstrations
        // included; the recorded reference stays the nominal one
        env.reset({config.noise.start_std, config.noise.ref_halfwidth},
                  hash_combine(seed, hash_combine(0xDE30, static_cast<uint64_t>(attempts))));
        Rng jitter(hash_combine(seed, hash_combine(0x3177e2, static_cast<uint64_t>(attempts))));

        dynsys::Trajectory traj;
        traj.poses.push_back({env.state().effector, 0.0});
        while (!env.episode_done()) {
            const auto v = env.scripted_expert(config.expert_jitter_std, jitter);
            env.step(v, dt);
            traj.poses.push_back({env.state().effector, env.state().step_count * dt});
        }
        if (env.succeeded()) demos.trajectories.push_back(std::move(traj));
    }

    save_demos(demos, join(out_dir, demos_filename(config)));
    return demos;
}

dynsys::GaussianMixtureParams cmd_fit(const RunConfig& config, const std::string& demos_path,
                                      const std::string& out_dir) {
    config.validate();
    ensure_dir(out_dir);
    const auto demos = dynsys::load_demos(demos_path);
    dynsys::EmOptions opt;
    opt.components = config.gmm_components;
    opt.seed = config.seeds.front();
    const auto result = dynsys::fit_em_selected(demos, opt, 16);
    save_gmm(result.gmm, join(out_dir, gmm_filename(config)));
    return result.gmm;
}

std::vector<SourceTrainResult> cmd_refine_source(const RunConfig& config,
                                                 const std::string& gmm_path,
                                                 const std::string& out_dir) {
    config.validate();
    if (config.mode == Mode::GMM || config.mode == Mode::KEYGMM)
        throw ConfigError("refine-source: mode " + to_string(config.mode) +
                          " has nothing to refine");
    if (config.mode != Mode::SACGMM && config.mode != Mode::SACGMM_GT)
        throw ConfigError("refine-source: train with mode sacgmm or sacgmm_gt");
    ensure_dir(out_dir);
    const auto gmm = dynsys::load_gmm(gmm_path);

    std::vector<SourceTrainResult> results;
    for (uint64_t seed : config.seeds) {
        auto res = refine_source(config, gmm, seed);
        res.sac->save(join(out_dir, sac_filename(config, config.mode, seed)));
        res.key->save(join(out_dir, key_filename(config, config.mode, seed)));
        write_text_file(join(out_dir, "train_metrics_" + sim::to_string(config.skill) + "_" +
                                          mode_slug(config.mode) + "_s" + std::to_string(seed) +
                                          ".csv"),
                        train_metrics_csv(res.metrics));
        results.push_back(std::move(res));
    }
    return results;
}

SkillArtifacts load_artifacts(const RunConfig& config, const std::string& artifact_dir, Mode mode,
                              uint64_t seed, std::optional<sim::Variant> refined_variant) {
    SkillArtifacts art;
    art.gmm = dynsys::load_gmm(join(artifact_dir, gmm_filename(config)));
    art.source_reference = config.variant_suite().front().handle_position;

    const bool wants_agent = mode != Mode::GMM && mode != Mode::KEYGMM;
    const bool wants_key =
        mode == Mode::KEYGMM || mode == Mode::KISGMM_ZERO || mode == Mode::KISGMM_REFINED;

    if (mode == Mode::KISGMM_REFINED) {
        if (!refined_variant)
            throw ConfigError("load_artifacts: refined mode needs the target variant");
        const auto sac_path = join(artifact_dir, refined_sac_filename(config, *refined_variant, seed));
        const auto key_path = join(artifact_dir, refined_key_filename(config, *refined_variant, seed));
        art.sac = std::make_shared<rl::SacAgent>(rl::SacAgent::load(sac_path));
        art.key = std::make_shared<keypoint::KeypointDetector>(keypoint::KeypointDetector::load(key_path));
        return art;
    }

    if (wants_agent) {
        const auto path = join(artifact_dir, sac_filename(config, mode, seed));
        art.sac = std::make_shared<rl::SacAgent>(rl::SacAgent::load(path));
    }
    if (wants_key) {
        // the detector is trained during the stale-reference arm
        const auto path = join(artifact_dir, key_filename(config, Mode::SACGMM, seed));
        art.key = std::make_shared<keypoint::KeypointDetector>(keypoint::KeypointDetector::load(path));
    }
    return art;
}

EvalReport cmd_eval(const RunConfig& config, const std::string& artifact_dir,
                    const std::string& out_dir, const std::vector<sim::Variant>& variants,
                    sim::DisplacementTier tier) {
    config.validate();
    ensure_dir(out_dir);
    const auto t0 = std::chrono::steady_clock::now();

    const auto suite = config.variant_suite();
    EvalSpec spec;
    spec.mode = config.mode;
    spec.tier = tier;
    for (auto v : variants) {
        bool found = false;
        for (const auto& s : suite)
            if (s.variant == v) {
                spec.scenes.push_back(s);
                found = true;
            }
        if (!found) throw ConfigError("eval: variant not in suite");
    }
    spec.trials = config.trials_per_eval;
    spec.seeds = config.seeds;
    spec.noise = config.noise;
    spec.schedule = config.schedule;
    spec.preamble_steps = config.preamble_steps;

    auto provider = [&](uint64_t seed) {
        std::optional<sim::Variant> refined;
        if (config.mode == Mode::KISGMM_REFINED) {
            if (variants.size() != 1)
                throw ConfigError("eval: refined mode evaluates one variant at a time");
            refined = variants.front();
        }
        return load_artifacts(config, artifact_dir, config.mode, seed, refined);
    };

    auto report = evaluate(provider, spec);
    report.manifest = make_manifest(config, seconds_since(t0));
    write_text_file(join(out_dir, "metrics.csv"), report.metrics_csv());
    write_text_file(join(out_dir, "report.json"), report.to_json().dump(2) + "\n");
    return report;
}

std::vector<TargetTrainResult> cmd_refine_target(const RunConfig& config,
                                                 const std::string& artifact_dir,
                                                 sim::Variant target,
                                                 const std::string& out_dir) {
    config.validate();
    if (target == sim::Variant::A)
        throw ConfigError("refine-target: the source variant is not a transfer target");
    ensure_dir(out_dir);

    const auto suite = config.variant_suite();
    const sim::SceneConfig* scene = nullptr;
    for (const auto& s : suite)
        if (s.variant == target) scene = &s;
    if (!scene) throw ConfigError("refine-target: variant not in suite");

    std::vector<TargetTrainResult> results;
    for (uint64_t seed : config.seeds) {
        const auto source = load_artifacts(config, artifact_dir, Mode::KISGMM_ZERO, seed);
        auto res = refine_target(config, source, *scene, seed);
        res.refined.sac->save(join(out_dir, refined_sac_filename(config, target, seed)));
        res.refined.key->save(join(out_dir, refined_key_filename(config, target, seed)));
        write_text_file(join(out_dir, "curves_" + sim::to_string(config.skill) + "_" +
                                          sim::to_string(target) + "_s" + std::to_string(seed) +
                                          ".csv"),
                        curves_csv(res.curves));
        results.push_back(std::move(res));
    }
    return results;
}

EvalReport cmd_displacement_study(const RunConfig& config, const std::string& artifact_dir,
                                  const std::string& out_dir) {
    config.validate();
    ensure_dir(out_dir);
    const auto t0 = std::chrono::steady_clock::now();

    const Mode modes[] = {Mode::GMM, Mode::SACGMM, Mode::KEYGMM, Mode::KISGMM_ZERO};
    const sim::DisplacementTier tiers[] = {sim::DisplacementTier::Easy,
                                           sim::DisplacementTier::Medium,
                                           sim::DisplacementTier::Hard};
    EvalReport merged;
    for (Mode mode : modes) {
        for (auto tier : tiers) {
            EvalSpec spec;
            spec.mode = mode;
            spec.tier = tier;
            spec.scenes = {config.variant_suite().front()};
            spec.trials = config.trials_per_eval;
            spec.seeds = config.seeds;
            spec.noise = config.noise;
            spec.schedule = config.schedule;
            spec.preamble_steps = config.preamble_steps;
            auto provider = [&](uint64_t seed) {
                return load_artifacts(config, artifact_dir, mode, seed);
            };
            auto rep = evaluate(provider, spec);
            merged.cells.insert(merged.cells.end(), rep.cells.begin(), rep.cells.end());
        }
    }
    merged.compute_aggregates();
    merged.manifest = make_manifest(config, seconds_since(t0));
    write_text_file(join(out_dir, "metrics.csv"), merged.metrics_csv());
    write_text_file(join(out_dir, "report.json"), merged.to_json().dump(2) + "\n");
    return merged;
}

}  // namespace kisgmm::harness
