#include <cmath>

#include <gtest/gtest.h>

#include "kisgmm/common/rng.hpp"
#include "kisgmm/sim/env.hpp"
#include "kisgmm/sim/scene.hpp"

using namespace kisgmm;
using namespace kisgmm::sim;

namespace {

SceneConfig drawer_a() { return make_scene(Skill::Drawer, Variant::A); }

int handle_pixel_index(const Observation& obs, double u, double v) {
    const int col = static_cast<int>(std::lround(u));
    const int row = static_cast<int>(std::lround(v));
    return row * kImageSize + col;
}

bool pixel_has_color(const Observation& obs, int idx, const Vec3& color) {
    const int plane = kImageSize * kImageSize;
    return std::abs(obs.rgb[idx] - color.x()) < 1e-6 &&
           std::abs(obs.rgb[plane + idx] - color.y()) < 1e-6 &&
           std::abs(obs.rgb[2 * plane + idx] - color.z()) < 1e-6;
}

}  // namespace

TEST(Reset, ZeroNoiseLandsOnNominals) {
    Env env(drawer_a());
    env.reset({0.0, 0.0}, 7);
    EXPECT_EQ(env.state().effector, kNominalStart);
    EXPECT_EQ(env.effective_handle(), drawer_a().handle_position);
    EXPECT_FALSE(env.state().attached);
    EXPECT_EQ(env.state().progress, 0.0);
}

TEST(Reset, SameSeedIsIdentical) {
    Env a(drawer_a()), b(drawer_a());
    a.reset({0.03, 0.02}, 123);
    b.reset({0.03, 0.02}, 123);
    EXPECT_EQ(a.state().effector, b.state().effector);
    EXPECT_EQ(a.effective_handle(), b.effective_handle());
}

TEST(Reset, EmpiricalStartStdMatches) {
    Env env(drawer_a());
    const double target = 0.02;
    const int n = 10000;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero(), sq = Eigen::Vector3d::Zero();
    for (int i = 0; i < n; ++i) {
        env.reset({target, 0.0}, 1000 + i);
        const Eigen::Vector3d d = env.state().effector - kNominalStart;
        sum += d;
        sq += d.cwiseProduct(d);
    }
    for (int c = 0; c < 3; ++c) {
        const double mean = sum(c) / n;
        const double std = std::sqrt(sq(c) / n - mean * mean);
        EXPECT_NEAR(std, target, 0.1 * target);
    }
}

TEST(Step, StraightPullOpensDrawer) {
    Env env(drawer_a());
    env.reset({0.0, 0.0}, 1);
    // place the effector on the handle, then pull along the axis
    const auto cfg = drawer_a();
    Env on_handle(cfg);
    on_handle.reset({0.0, 0.0}, 1);
    // drive toward handle first
    for (int i = 0; i < 400 && !on_handle.state().attached; ++i) {
        Eigen::Vector3d v = cfg.handle_position - on_handle.state().effector;
        if (v.norm() > 0.3) v *= 0.3 / v.norm();
        on_handle.step(v / 0.02 * 0.02, 0.02);
    }
    ASSERT_TRUE(on_handle.state().attached);

    const double speed = 0.1;
    const int steps = static_cast<int>(std::ceil(cfg.open_distance / (speed * 0.02)));
    double total_reward = 0.0;
    bool success = false;
    for (int i = 0; i <= steps + 2; ++i) {
        const auto r = on_handle.step(speed * cfg.pull_axis, 0.02);
        total_reward += r.reward;
        success = success || r.success;
    }
    EXPECT_TRUE(success);
    EXPECT_DOUBLE_EQ(total_reward, 1.0);  // reward exactly once
}

TEST(Step, ZeroVelocityTimesOutWithoutReward) {
    Env env(drawer_a());
    env.reset({0.0, 0.0}, 2);
    double total = 0.0;
    StepResult last;
    for (int i = 0; i < kEpisodeTimeout; ++i) {
        last = env.step(Eigen::Vector3d::Zero(), 0.02);
        total += last.reward;
    }
    EXPECT_TRUE(last.done);
    EXPECT_FALSE(last.success);
    EXPECT_EQ(total, 0.0);
}

TEST(Step, OrthogonalMotionWhileAttachedLeavesProgress) {
    const auto cfg = drawer_a();
    Env env(cfg);
    env.reset({0.0, 0.0}, 3);
    for (int i = 0; i < 400 && !env.state().attached; ++i) {
        Eigen::Vector3d v = cfg.handle_position - env.state().effector;
        env.step(v.normalized() * 0.3, 0.02);
    }
    ASSERT_TRUE(env.state().attached);
    const double before = env.state().progress;
    Eigen::Vector3d ortho(0.2, 0, 0);
    ASSERT_DOUBLE_EQ(ortho.dot(cfg.pull_axis), 0.0);
    env.step(ortho, 0.02);
    EXPECT_DOUBLE_EQ(env.state().progress, before);
}

TEST(Step, AttachedInvariantHoldsExactly) {
    const auto cfg = drawer_a();
    Env env(cfg);
    env.reset({0.0, 0.0}, 4);
    Rng rng(9);
    bool was_attached = false;
    for (int i = 0; i < kEpisodeTimeout && !env.episode_done(); ++i) {
        Eigen::Vector3d v;
        if (!env.state().attached)
            v = (env.effective_handle() - env.state().effector).normalized() * 0.3;
        else
            v = Eigen::Vector3d(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                                rng.uniform(-0.3, 0.3));
        env.step(v, 0.02);
        if (env.state().attached) {
            was_attached = true;
            EXPECT_LE((env.state().effector - env.current_handle()).norm(), kGraspRadius + 1e-12);
        }
    }
    EXPECT_TRUE(was_attached);
}

TEST(Step, DeterministicGivenSeedAndActions) {
    const auto cfg = drawer_a();
    Env a(cfg), b(cfg);
    a.reset({0.02, 0.01}, 55);
    b.reset({0.02, 0.01}, 55);
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const Eigen::Vector3d v(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4),
                                rng.uniform(-0.4, 0.4));
        const auto ra = a.step(v, 0.02);
        const auto rb = b.step(v, 0.02);
        EXPECT_EQ(a.state().effector, b.state().effector);
        EXPECT_EQ(ra.reward, rb.reward);
        EXPECT_EQ(ra.done, rb.done);
    }
}

TEST(Render, BlobCenteredAndDepthCorrect) {
    const auto cfg = drawer_a();
    Env env(cfg);
    env.reset({0.0, 0.0}, 6);
    // the nominal start faces the panel; move the effector onto the
    // handle's axis at 0.3 m
    Env facing(cfg);
    facing.reset({0.0, 0.0}, 6);
    // effector directly facing the handle at 0.3 m
    auto obs = facing.render();
    (void)obs;
    Env direct(cfg);
    direct.reset({0.0, 0.0}, 6);
    // teleport by stepping with a large velocity is clamped, so build the
    // observation from a fresh env whose start we control via noise-free
    // reset plus manual drive
    Eigen::Vector3d target = cfg.handle_position - Eigen::Vector3d(0.3, 0.0, 0.0);
    for (int i = 0; i < 2000; ++i) {
        const Eigen::Vector3d d = target - direct.state().effector;
        if (d.norm() < 1e-9) break;
        Eigen::Vector3d v = d / 0.02;
        if (v.norm() > 0.5) v = v.normalized() * 0.5;
        direct.step(v, 0.02);
    }
    ASSERT_LT((direct.state().effector - target).norm(), 1e-6);

    const auto frame = direct.render();
    const auto proj = direct.project_keypoint();
    ASSERT_TRUE(proj.present);
    EXPECT_NEAR(proj.u, frame.intrinsics.cx, 1e-6);
    EXPECT_NEAR(proj.v, frame.intrinsics.cy, 1e-6);
    EXPECT_NEAR(proj.z, 0.3, 1e-6);
    const int idx = handle_pixel_index(frame, proj.u, proj.v);
    EXPECT_TRUE(pixel_has_color(frame, idx, cfg.handle_color));
    EXPECT_NEAR(frame.depth[idx], 0.3, 1e-5);
}

TEST(Render, DeterministicPixels) {
    Env env(drawer_a());
    env.reset({0.01, 0.01}, 8);
    const auto a = env.render();
    const auto b = env.render();
    EXPECT_EQ(a.rgb, b.rgb);
    EXPECT_EQ(a.depth, b.depth);
}

TEST(Render, TextureChangesOnlyRgb) {
    auto cfg1 = drawer_a();
    auto cfg2 = cfg1;
    cfg2.texture_seed = 999;
    cfg2.panel_base = Vec3(0.1, 0.6, 0.3);
    cfg2.panel_alt = Vec3(0.8, 0.2, 0.7);
    Env a(cfg1), b(cfg2);
    a.reset({0.0, 0.0}, 10);
    b.reset({0.0, 0.0}, 10);
    const auto oa = a.render(), ob = b.render();
    EXPECT_EQ(oa.depth, ob.depth);
    EXPECT_NE(oa.rgb, ob.rgb);
}

TEST(ProjectKeypoint, OnAxisPoint) {
    const CameraIntrinsics K;
    const auto p = project_keypoint(Vec3(0.5, 0.5, 0.5) + Vec3(0.5, 0, 0), Vec3(0.5, 0.5, 0.5), K);
    EXPECT_TRUE(p.present);
    EXPECT_DOUBLE_EQ(p.u, K.cx);
    EXPECT_DOUBLE_EQ(p.v, K.cy);
    EXPECT_DOUBLE_EQ(p.z, 0.5);
}

TEST(ProjectKeypoint, BehindCameraAbsent) {
    const CameraIntrinsics K;
    const auto p = project_keypoint(Vec3(0.0, 0.5, 0.5), Vec3(0.5, 0.5, 0.5), K);
    EXPECT_FALSE(p.present);
}

TEST(ProjectKeypoint, BackprojectionRoundTrip) {
    const CameraIntrinsics K;
    Rng rng(12);
    for (int i = 0; i < 200; ++i) {
        const double u = rng.uniform(0, kImageSize - 1);
        const double v = rng.uniform(0, kImageSize - 1);
        const double z = rng.uniform(0.05, 2.0);
        const Vec3 cam = backproject(u, v, z, K);
        const auto p = project(cam, K);
        EXPECT_NEAR(p.u, u, 1e-9);
        EXPECT_NEAR(p.v, v, 1e-9);
        EXPECT_NEAR(p.z, z, 1e-9);
    }
}

TEST(RenderKeypointConsistency, NearestPixelCarriesHandleColor) {
    const auto cfg = drawer_a();
    Env env(cfg);
    Rng rng(13);
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
        env.reset({0.08, 0.02}, 9000 + i);
        const auto proj = env.project_keypoint();
        if (!proj.present) continue;
        const auto obs = env.render();
        const int idx = handle_pixel_index(obs, proj.u, proj.v);
        EXPECT_TRUE(pixel_has_color(obs, idx, cfg.handle_color))
            << "miss at u=" << proj.u << " v=" << proj.v << " z=" << proj.z;
        ++checked;
    }
    EXPECT_GT(checked, 100);
}

TEST(ScriptedExpert, SucceedsAlmostAlways) {
    for (auto skill : {Skill::Drawer, Skill::Button}) {
        const auto cfg = make_scene(skill, Variant::A);
        Env env(cfg);
        int successes = 0;
        for (int ep = 0; ep < 100; ++ep) {
            env.reset({0.05, 0.025}, 400 + ep);
            Rng jitter(500 + ep);
            while (!env.episode_done()) env.step(env.scripted_expert(0.01, jitter), 0.02);
            successes += env.succeeded() ? 1 : 0;
        }
        EXPECT_GE(successes, 99) << "skill " << to_string(skill);
    }
}

TEST(ScriptedExpert, AttachesWhenAtHandle) {
    const auto cfg = drawer_a();
    Env env(cfg);
    env.reset({0.0, 0.0}, 14);
    // drive to the handle
    for (int i = 0; i < 600 && !env.state().attached; ++i) {
        Rng jitter(1);
        env.step(env.scripted_expert(0.0, jitter), 0.02);
    }
    EXPECT_TRUE(env.state().attached);
}

TEST(ScriptedExpert, ZeroJitterIsDeterministic) {
    const auto cfg = drawer_a();
    Env a(cfg), b(cfg);
    a.reset({0.02, 0.0}, 15);
    b.reset({0.02, 0.0}, 15);
    Rng ra(1), rb(2);  // different rngs must not matter at zero jitter
    for (int i = 0; i < 300 && !a.episode_done(); ++i) {
        a.step(a.scripted_expert(0.0, ra), 0.02);
        b.step(b.scripted_expert(0.0, rb), 0.02);
    }
    EXPECT_EQ(a.state().effector, b.state().effector);
}

TEST(VariantSuite, TierMagnitudesStayInBand) {
    const auto cfg = drawer_a();
    Rng rng(16);
    const struct {
        DisplacementTier tier;
        double lo, hi;
    } bands[] = {{DisplacementTier::Easy, 0.0, 0.10},
                 {DisplacementTier::Medium, 0.10, 0.20},
                 {DisplacementTier::Hard, 0.20, 0.30}};
    for (const auto& band : bands) {
        for (int i = 0; i < 1000; ++i) {
            const auto d = sample_displacement(band.tier, cfg, rng);
            EXPECT_GE(d.norm(), band.lo - 1e-12);
            EXPECT_LE(d.norm(), band.hi + 1e-12);
        }
    }
}

TEST(VariantSuite, SourceHasZeroDisplacement) {
    for (auto skill : {Skill::Drawer, Skill::Button}) {
        const auto suite = make_variant_suite(skill);
        ASSERT_EQ(suite.size(), 4u);
        EXPECT_EQ(suite[0].variant, Variant::A);
        EXPECT_EQ(suite[0].displacement, Vec3::Zero());
    }
}

TEST(VariantSuite, TargetBHandleFarFromSource) {
    const auto suite = make_variant_suite(Skill::Drawer);
    EXPECT_GE((suite[1].handle_position - suite[0].handle_position).norm(), 0.15);
}

TEST(VariantSuite, SceneJsonRoundTrip) {
    const auto cfg = make_scene(Skill::Button, Variant::C);
    const auto j = scene_to_json(cfg);
    const auto back = scene_from_json(j);
    EXPECT_EQ(back.variant, cfg.variant);
    EXPECT_EQ(back.skill, cfg.skill);
    EXPECT_EQ(back.handle_position, cfg.handle_position);
    EXPECT_EQ(back.texture_seed, cfg.texture_seed);
    EXPECT_EQ(back.handle_color, cfg.handle_color);
}

TEST(VariantSuite, ZeroWidthTierIsZeroVector) {
    Rng rng(21);
    EXPECT_EQ(sample_displacement_range(0.0, 0.0, drawer_a(), rng), Vec3::Zero());
}
