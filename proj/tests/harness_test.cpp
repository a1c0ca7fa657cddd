#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "kisgmm/common/errors.hpp"
#include "kisgmm/common/rng.hpp"
#include "kisgmm/harness/commands.hpp"

using namespace kisgmm;
using namespace kisgmm::harness;

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    EXPECT_TRUE(is.good()) << path;
    return std::string(std::istreambuf_iterator<char>(is), {});
}

RunConfig small_config() {
    RunConfig c;
    c.skill = sim::Skill::Drawer;
    c.seeds = {1, 2};
    c.trials_per_eval = 10;
    c.demo_count = 6;
    c.gmm_components = 8;
    return c;
}

std::string fresh_dir(const std::string& name) {
    const std::string dir = testing::TempDir() + "/" + name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST(GenDemos, AllTrajectoriesEndAtTaskCompletion) {
    const auto dir = fresh_dir("gen1");
    auto config = small_config();
    config.demo_count = 10;
    const auto demos = cmd_gen_demos(config, dir);
    EXPECT_EQ(demos.trajectories.size(), 10u);

    const auto scene = config.variant_suite().front();
    const dynsys::Vec3 terminal =
        scene.handle_position + scene.open_distance * scene.pull_axis;
    for (const auto& traj : demos.trajectories) {
        ASSERT_GE(traj.size(), 2);
        EXPECT_LT((traj.back().position - terminal).norm(), 0.05);
    }
    EXPECT_TRUE(fs::exists(dir + "/" + demos_filename(config)));
}

TEST(GenDemos, FixedSeedGivesIdenticalBytes) {
    const auto dir1 = fresh_dir("gen2a");
    const auto dir2 = fresh_dir("gen2b");
    const auto config = small_config();
    cmd_gen_demos(config, dir1);
    cmd_gen_demos(config, dir2);
    EXPECT_EQ(read_file(dir1 + "/" + demos_filename(config)),
              read_file(dir2 + "/" + demos_filename(config)));
}

TEST(GenDemos, ZeroCountRejected) {
    auto config = small_config();
    config.demo_count = 0;
    EXPECT_THROW(cmd_gen_demos(config, fresh_dir("gen3")), ConfigError);
}

TEST(Fit, RefitIsIdentical) {
    const auto dir = fresh_dir("fit1");
    const auto config = small_config();
    cmd_gen_demos(config, dir);
    const auto demos_path = dir + "/" + demos_filename(config);
    cmd_fit(config, demos_path, dir);
    const auto first = read_file(dir + "/" + gmm_filename(config));
    cmd_fit(config, demos_path, dir);
    EXPECT_EQ(read_file(dir + "/" + gmm_filename(config)), first);
}

TEST(Fit, TooManyComponentsSurfacesError) {
    const auto dir = fresh_dir("fit2");
    auto config = small_config();
    config.demo_count = 1;
    cmd_gen_demos(config, dir);
    // shrink the demo to 3 poses so samples < K
    auto demos = dynsys::load_demos(dir + "/" + demos_filename(config));
    demos.trajectories[0].poses.resize(3);
    save_demos(demos, dir + "/tiny.json");
    config.gmm_components = 5;
    EXPECT_THROW(cmd_fit(config, dir + "/tiny.json", dir), ConfigError);
}

TEST(RefineSource, RefusesNonRefinableModes) {
    const auto dir = fresh_dir("rs1");
    auto config = small_config();
    cmd_gen_demos(config, dir);
    cmd_fit(config, dir + "/" + demos_filename(config), dir);
    config.mode = Mode::GMM;
    EXPECT_THROW(cmd_refine_source(config, dir + "/" + gmm_filename(config), dir), ConfigError);
    config.mode = Mode::KEYGMM;
    EXPECT_THROW(cmd_refine_source(config, dir + "/" + gmm_filename(config), dir), ConfigError);
}

TEST(RefineSource, ProducesCheckpointsAndMetrics) {
    const auto dir = fresh_dir("rs2");
    auto config = small_config();
    config.seeds = {1};
    config.budgets.refine_episodes = 3;  // plumbing check, stays inside warmup
    cmd_gen_demos(config, dir);
    cmd_fit(config, dir + "/" + demos_filename(config), dir);
    config.mode = Mode::SACGMM;
    const auto results = cmd_refine_source(config, dir + "/" + gmm_filename(config), dir);
    ASSERT_EQ(results.size(), 1u);
    EXPECT_EQ(static_cast<int>(results[0].metrics.size()), 3);
    EXPECT_TRUE(fs::exists(dir + "/" + sac_filename(config, Mode::SACGMM, 1)));
    EXPECT_TRUE(fs::exists(dir + "/" + key_filename(config, Mode::SACGMM, 1)));
    EXPECT_TRUE(fs::exists(dir + "/train_metrics_drawer_sacgmm_s1.csv"));
}

TEST(Eval, DeterministicMetricsFiles) {
    const auto dir = fresh_dir("ev1");
    auto config = small_config();
    cmd_gen_demos(config, dir);
    cmd_fit(config, dir + "/" + demos_filename(config), dir);
    config.mode = Mode::GMM;

    const auto out1 = fresh_dir("ev1_out1");
    const auto out2 = fresh_dir("ev1_out2");
    cmd_eval(config, dir, out1, {sim::Variant::A, sim::Variant::B});
    cmd_eval(config, dir, out2, {sim::Variant::A, sim::Variant::B});
    EXPECT_EQ(read_file(out1 + "/metrics.csv"), read_file(out2 + "/metrics.csv"));

    // report matches modulo the wall-time field
    auto j1 = nlohmann::json::parse(read_file(out1 + "/report.json"));
    auto j2 = nlohmann::json::parse(read_file(out2 + "/report.json"));
    j1["manifest"].erase("wall_time_sec");
    j2["manifest"].erase("wall_time_sec");
    EXPECT_EQ(j1, j2);
}

TEST(Eval, SingleTrialFixedSeedIsDeterministic) {
    const auto dir = fresh_dir("ev2");
    auto config = small_config();
    config.seeds = {7};
    config.trials_per_eval = 1;
    cmd_gen_demos(config, dir);
    cmd_fit(config, dir + "/" + demos_filename(config), dir);
    config.mode = Mode::GMM;
    const auto r1 = cmd_eval(config, dir, fresh_dir("ev2o1"), {sim::Variant::A});
    const auto r2 = cmd_eval(config, dir, fresh_dir("ev2o2"), {sim::Variant::A});
    ASSERT_EQ(r1.cells.size(), 1u);
    EXPECT_EQ(r1.cells[0].successes, r2.cells[0].successes);
}

TEST(Eval, FittedGmmBeatsRandomPolicyInSource) {
    const auto dir = fresh_dir("ev3");
    auto config = small_config();
    config.demo_count = 10;
    config.seeds = {1};
    config.trials_per_eval = 20;
    cmd_gen_demos(config, dir);
    cmd_fit(config, dir + "/" + demos_filename(config), dir);
    config.mode = Mode::GMM;
    const auto report = cmd_eval(config, dir, fresh_dir("ev3o"), {sim::Variant::A});
    const double gmm_rate = report.rate(Mode::GMM, "A");

    // random-velocity baseline on the same episodes
    const auto scene = config.variant_suite().front();
    int random_successes = 0;
    for (int t = 0; t < config.trials_per_eval; ++t) {
        sim::Env env(scene);
        env.reset({config.noise.start_std, config.noise.ref_halfwidth},
                  hash_combine(hash_combine(1, static_cast<uint64_t>(t)), 0xE7A1));
        Rng rng(hash_combine(50, t));
        while (!env.episode_done()) {
            const dynsys::Vec3 v(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                                 rng.uniform(-0.5, 0.5));
            env.step(v, 0.02);
        }
        random_successes += env.succeeded() ? 1 : 0;
    }
    const double random_rate = static_cast<double>(random_successes) / config.trials_per_eval;
    EXPECT_GT(gmm_rate, random_rate);
    EXPECT_GE(gmm_rate, 0.5);
}

TEST(Eval, MissingCheckpointIsConfigError) {
    const auto dir = fresh_dir("ev4");
    auto config = small_config();
    cmd_gen_demos(config, dir);
    cmd_fit(config, dir + "/" + demos_filename(config), dir);
    config.mode = Mode::SACGMM;  // no sac checkpoint on disk
    EXPECT_THROW(cmd_eval(config, dir, fresh_dir("ev4o"), {sim::Variant::A}), ConfigError);
}

TEST(Eval, StaleReferenceNeverReadsEffectiveHandle) {
    // with a huge tier-independent displacement, the stale reference must
    // keep pointing at the source handle: success collapses instead of
    // tracking the moved scene
    const auto dir = fresh_dir("ev5");
    auto config = small_config();
    config.seeds = {3};
    config.trials_per_eval = 10;
    cmd_gen_demos(config, dir);
    cmd_fit(config, dir + "/" + demos_filename(config), dir);

    auto suite = sim::make_variant_suite(config.skill);
    for (auto& s : suite) s.displacement = dynsys::Vec3(0.0, 0.25, 0.0);
    suite[0].validate();
    config.suite_override = suite;
    config.mode = Mode::GMM;
    const auto report = cmd_eval(config, dir, fresh_dir("ev5o"), {sim::Variant::A});
    EXPECT_LE(report.rate(Mode::GMM, "A"), 0.1);
}

TEST(Report, SeedMeanIsExactArithmeticMean) {
    EvalReport report;
    for (uint64_t s = 1; s <= 3; ++s) {
        EvalCell c;
        c.mode = Mode::GMM;
        c.variant = "A";
        c.seed = s;
        c.trials = 100;
        c.successes = static_cast<int>(30 + 7 * s);
        report.cells.push_back(c);
    }
    report.compute_aggregates();
    const double expect = (0.37 + 0.44 + 0.51) / 3.0;
    EXPECT_DOUBLE_EQ(report.rate(Mode::GMM, "A"), expect);
}

TEST(RefineTarget, ZeroBudgetReturnsZeroShotUnchanged) {
    auto config = small_config();
    config.seeds = {1};
    config.budgets.target_episodes = 0;
    config.budgets.scratch_episodes = 0;

    // in-memory source artifacts
    const auto dir = fresh_dir("rt1");
    cmd_gen_demos(config, dir);
    const auto gmm = cmd_fit(config, dir + "/" + demos_filename(config), dir);

    SkillArtifacts source;
    source.gmm = gmm;
    source.source_reference = config.variant_suite().front().handle_position;
    rl::SacConfig scfg;
    scfg.components = config.gmm_components;
    scfg.seed = 5;
    source.sac = std::make_shared<rl::SacAgent>(scfg);
    source.key = std::make_shared<keypoint::KeypointDetector>(6);

    const auto scene = config.variant_suite()[1];
    const auto result = refine_target(config, source, scene, 1);
    EXPECT_EQ(result.refined.episodes_run, 0);
    EXPECT_EQ(result.refined.episodes_to_threshold, -1);
    for (size_t p = 0; p < source.sac->actor().params().size(); ++p)
        EXPECT_EQ(result.refined.sac->actor().params()[p].values,
                  source.sac->actor().params()[p].values);
    for (size_t p = 0; p < source.key->backbone().params().size(); ++p)
        EXPECT_EQ(result.refined.key->backbone().params()[p].values,
                  source.key->backbone().params()[p].values);
}

TEST(RunConfigJson, RoundTripAndHashStability) {
    auto config = small_config();
    config.mode = Mode::KISGMM_ZERO;
    config.noise.start_std = 0.04;
    const auto j = run_config_to_json(config);
    const auto back = run_config_from_json(j);
    EXPECT_EQ(back.mode, config.mode);
    EXPECT_EQ(back.seeds, config.seeds);
    EXPECT_EQ(back.noise.start_std, config.noise.start_std);
    EXPECT_EQ(config_hash(back), config_hash(config));

    auto other = config;
    other.trials_per_eval += 1;
    EXPECT_NE(config_hash(other), config_hash(config));
}

TEST(EpisodeLog, JsonLinesShape) {
    const auto line = episode_log_line(12, dynsys::Vec3(0.1, 0.2, 0.3), 1.0, true);
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("step"), 12);
    EXPECT_EQ(j.at("pose").size(), 3u);
    EXPECT_EQ(j.at("reward"), 1.0);
    EXPECT_EQ(j.at("done"), true);
    EXPECT_EQ(line.find('\n'), std::string::npos);
}

TEST(ZeroWidthTier, MatchesUndisplacedEvalExactly) {
    const auto dir = fresh_dir("zt1");
    auto config = small_config();
    config.seeds = {11};
    config.trials_per_eval = 8;
    cmd_gen_demos(config, dir);
    const auto gmm = cmd_fit(config, dir + "/" + demos_filename(config), dir);

    SkillArtifacts art;
    art.gmm = gmm;
    art.source_reference = config.variant_suite().front().handle_position;
    const auto scene = config.variant_suite().front();

    for (int t = 0; t < config.trials_per_eval; ++t) {
        const bool none = run_eval_episode(art, scene, Mode::GMM, sim::DisplacementTier::None, 11,
                                           t, config.noise, config.schedule, 0);
        // a zero-displacement scene must reproduce the tier-free episode
        auto displaced = scene;
        Rng rng(1234);
        displaced.displacement = sim::sample_displacement_range(0.0, 0.0, scene, rng);
        const bool zero = run_eval_episode(art, displaced, Mode::GMM,
                                           sim::DisplacementTier::None, 11, t, config.noise,
                                           config.schedule, 0);
        EXPECT_EQ(none, zero);
    }
}
