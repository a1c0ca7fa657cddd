#include "kisgmm/sim/scene.hpp"

#include <cmath>

#include "kisgmm/common/errors.hpp"
#include "kisgmm/common/log.hpp"

namespace kisgmm::sim {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::A: return "A";
        case Variant::B: return "B";
        case Variant::C: return "C";
        case Variant::D: return "D";
    }
    return "?";
}

std::string to_string(Skill s) { return s == Skill::Drawer ? "drawer" : "button"; }

std::string to_string(DisplacementTier t) {
    switch (t) {
        case DisplacementTier::None: return "none";
        case DisplacementTier::Easy: return "easy";
        case DisplacementTier::Medium: return "medium";
        case DisplacementTier::Hard: return "hard";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    if (s == "A") return Variant::A;
    if (s == "B") return Variant::B;
    if (s == "C") return Variant::C;
    if (s == "D") return Variant::D;
    throw ConfigError("unknown variant '" + s + "'");
}

Skill skill_from_string(const std::string& s) {
    if (s == "drawer") return Skill::Drawer;
    if (s == "button") return Skill::Button;
    throw ConfigError("unknown skill '" + s + "'");
}

DisplacementTier tier_from_string(const std::string& s) {
    if (s == "none") return DisplacementTier::None;
    if (s == "easy") return DisplacementTier::Easy;
    if (s == "medium") return DisplacementTier::Medium;
    if (s == "hard") return DisplacementTier::Hard;
    throw ConfigError("unknown displacement tier '" + s + "'");
}

void SceneConfig::validate() const {
    if (std::abs(pull_axis.norm() - 1.0) > 1e-9)
        throw ConfigError("scene: pull_axis must be unit length");
    if (open_distance <= 0.0) throw ConfigError("scene: open_distance must be positive");
    const Vec3 h = handle_position + displacement;
    for (int i = 0; i < 3; ++i)
        if (h(i) < 0.0 || h(i) > 1.0)
            throw ConfigError("scene: displaced handle leaves the workspace");
}

namespace {

struct VariantLook {
    Vec3 handle_offset;  // relative to A
    uint64_t texture_seed;
    Vec3 panel_base, panel_alt, handle_color;
};

// B carries the large texture/handle change, C and D moderate ones.
const VariantLook kLooks[4] = {
    {{0.00, 0.00, 0.00}, 101, {0.45, 0.38, 0.30}, {0.64, 0.56, 0.45}, {0.85, 0.12, 0.10}},
    {{0.00, 0.17, 0.08}, 202, {0.10, 0.52, 0.22}, {0.72, 0.18, 0.62}, {0.10, 0.70, 0.75}},
    {{0.00, -0.10, 0.03}, 303, {0.40, 0.44, 0.52}, {0.60, 0.63, 0.70}, {0.80, 0.35, 0.12}},
    {{0.00, 0.06, -0.10}, 404, {0.50, 0.48, 0.33}, {0.36, 0.41, 0.27}, {0.78, 0.15, 0.30}},
};

}  // namespace

SceneConfig make_scene(Skill skill, Variant variant) {
    const auto& look = kLooks[static_cast<int>(variant)];
    SceneConfig cfg;
    cfg.variant = variant;
    cfg.skill = skill;
    cfg.texture_seed = look.texture_seed;
    cfg.panel_base = look.panel_base;
    cfg.panel_alt = look.panel_alt;
    cfg.handle_color = look.handle_color;
    cfg.panel_plane_x = 0.92;
    if (skill == Skill::Drawer) {
        // slides sideways: the articulation is perpendicular to the
        // approach, as with a tabletop slider
        cfg.handle_position = Vec3(0.86, 0.50, 0.55) + look.handle_offset;
        cfg.pull_axis = Vec3(0, 1, 0);
        cfg.open_distance = 0.15;
    } else {
        cfg.handle_position = Vec3(0.88, 0.45, 0.47) + look.handle_offset;
        cfg.pull_axis = Vec3(1, 0, 0);
        cfg.open_distance = 0.02;
    }
    cfg.validate();
    return cfg;
}

std::vector<SceneConfig> make_variant_suite(Skill skill) {
    return {make_scene(skill, Variant::A), make_scene(skill, Variant::B),
            make_scene(skill, Variant::C), make_scene(skill, Variant::D)};
}

std::pair<double, double> tier_range(DisplacementTier tier) {
    switch (tier) {
        case DisplacementTier::None: return {0.0, 0.0};
        case DisplacementTier::Easy: return {0.0, 0.10};
        case DisplacementTier::Medium: return {0.10, 0.20};
        case DisplacementTier::Hard: return {0.20, 0.30};
    }
    return {0.0, 0.0};
}

Vec3 sample_displacement(DisplacementTier tier, const SceneConfig& config, Rng& rng) {
    const auto [lo, hi] = tier_range(tier);
    return sample_displacement_range(lo, hi, config, rng);
}

Vec3 sample_displacement_range(double lo, double hi, const SceneConfig& config, Rng& rng) {
    if (hi <= 0.0) return Vec3::Zero();
    const CameraIntrinsics K;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double mag = rng.uniform(lo, hi);
        Vec3 dir(rng.normal(), rng.normal(), rng.normal());
        if (dir.norm() < 1e-9) continue;
        dir.normalize();
        const Vec3 d = mag * dir;
        const Vec3 h = config.handle_position + d;
        bool ok = true;
        for (int i = 0; i < 3; ++i) ok = ok && h(i) >= 0.05 && h(i) <= 0.95;
        if (!ok) continue;
        if (config.panel_plane_x + d.x() > 0.99) continue;
        // the displaced handle must stay visible from the nominal start,
        // otherwise keypoint grounding has nothing to work with
        const auto proj = project_keypoint(h, kNominalStart, K);
        if (!proj.present || proj.z < 0.15) continue;
        if (proj.u < 1.5 || proj.u > kImageSize - 2.5 || proj.v < 1.5 ||
            proj.v > kImageSize - 2.5)
            continue;
        return d;
    }
    log::warn("sample_displacement: no admissible offset found, returning zero");
    return Vec3::Zero();
}

nlohmann::json scene_to_json(const SceneConfig& c) {
    nlohmann::json j;
    j["variant"] = to_string(c.variant);
    j["skill"] = to_string(c.skill);
    j["handle_position"] = {c.handle_position.x(), c.handle_position.y(), c.handle_position.z()};
    j["pull_axis"] = {c.pull_axis.x(), c.pull_axis.y(), c.pull_axis.z()};
    j["open_distance"] = c.open_distance;
    j["texture_seed"] = c.texture_seed;
    j["displacement"] = {c.displacement.x(), c.displacement.y(), c.displacement.z()};
    j["panel_plane_x"] = c.panel_plane_x;
    j["panel_base"] = {c.panel_base.x(), c.panel_base.y(), c.panel_base.z()};
    j["panel_alt"] = {c.panel_alt.x(), c.panel_alt.y(), c.panel_alt.z()};
    j["handle_color"] = {c.handle_color.x(), c.handle_color.y(), c.handle_color.z()};
    return j;
}

namespace {
Vec3 vec3_from_json(const nlohmann::json& j) { return Vec3(j.at(0), j.at(1), j.at(2)); }
}  // namespace

SceneConfig scene_from_json(const nlohmann::json& j) {
    SceneConfig c;
    c.variant = variant_from_string(j.at("variant"));
    c.skill = skill_from_string(j.at("skill"));
    c.handle_position = vec3_from_json(j.at("handle_position"));
    c.pull_axis = vec3_from_json(j.at("pull_axis"));
    c.open_distance = j.at("open_distance");
    c.texture_seed = j.at("texture_seed").get<uint64_t>();
    if (j.contains("displacement")) c.displacement = vec3_from_json(j.at("displacement"));
    c.panel_plane_x = j.value("panel_plane_x", 0.92);
    if (j.contains("panel_base")) c.panel_base = vec3_from_json(j.at("panel_base"));
    if (j.contains("panel_alt")) c.panel_alt = vec3_from_json(j.at("panel_alt"));
    if (j.contains("handle_color")) c.handle_color = vec3_from_json(j.at("handle_color"));
    c.validate();
    return c;
}

}  // namespace kisgmm::sim
