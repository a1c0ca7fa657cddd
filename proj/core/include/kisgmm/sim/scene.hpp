#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kisgmm/common/rng.hpp"
#include "kisgmm/sim/camera.hpp"

namespace kisgmm::sim {

enum class Variant { A, B, C, D };
enum class Skill { Drawer, Button };
enum class DisplacementTier { None, Easy, Medium, Hard };

std::string to_string(Variant v);
std::string to_string(Skill s);
std::string to_string(DisplacementTier t);
Variant variant_from_string(const std::string& s);
Skill skill_from_string(const std::string& s);
DisplacementTier tier_from_string(const std::string& s);

// workspace is the unit cube
inline constexpr double kGraspRadius = 0.03;       // meters
inline constexpr double kHandleRadius = 0.035;     // rendered blob radius
inline constexpr int kEpisodeTimeout = 600;        // env steps
inline const Vec3 kNominalStart{0.30, 0.50, 0.50};

struct SceneConfig {
    Variant variant = Variant::A;
    Skill skill = Skill::Drawer;
    Vec3 handle_position = Vec3::Zero();  // ground truth, before displacement
    Vec3 pull_axis = Vec3(-1, 0, 0);      // unit; drawer pulls out, button presses in
    double open_distance = 0.15;          // meters of progress for success
    uint64_t texture_seed = 0;
    Vec3 displacement = Vec3::Zero();     // rigid scene offset

    // appearance
    double panel_plane_x = 0.92;          // before displacement
    Vec3 panel_base = Vec3(0.5, 0.5, 0.5);
    Vec3 panel_alt = Vec3(0.7, 0.7, 0.7);
    Vec3 handle_color = Vec3(0.8, 0.1, 0.1);

    // Throws ConfigError if the displaced handle leaves the workspace or
    // the pull axis is not unit length.
    void validate() const;
};

SceneConfig make_scene(Skill skill, Variant variant);

// Source environment A plus targets B (large texture and handle change),
// C and D (moderate changes). Ordered A, B, C, D.
std::vector<SceneConfig> make_variant_suite(Skill skill);

// Magnitude band per tier: None {0,0}, Easy [0,0.10], Medium [0.10,0.20],
// Hard [0.20,0.30] meters.
std::pair<double, double> tier_range(DisplacementTier tier);

// Uniform magnitude in the tier band, random direction, rejection-sampled
// so the displaced handle stays inside the workspace and visible from the
// nominal start pose.
Vec3 sample_displacement(DisplacementTier tier, const SceneConfig& config, Rng& rng);
Vec3 sample_displacement_range(double lo, double hi, const SceneConfig& config, Rng& rng);

nlohmann::json scene_to_json(const SceneConfig& config);
SceneConfig scene_from_json(const nlohmann::json& j);

}  // namespace kisgmm::sim
