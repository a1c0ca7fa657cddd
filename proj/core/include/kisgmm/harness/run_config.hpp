#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kisgmm/rl/episode.hpp"
#include "kisgmm/sim/scene.hpp"

namespace kisgmm::harness {

// Skill-model variants under evaluation. GMM is the plain mixture with the
// stale source reference; SACGMM adds parameter refinement; the GT flavor
// is additionally granted the true reference in targets; KEYGMM grounds
// the plain mixture with the detector; KISGMM combines both, zero-shot or
// after target refinement.
enum class Mode { GMM, SACGMM_GT, SACGMM, KEYGMM, KISGMM_ZERO, KISGMM_REFINED };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& s);

struct NoiseConfig {
    double start_std = 0.05;        // Gaussian start sampling, meters
    double ref_halfwidth = 0.025;   // uniform reference-point noise, meters
};

struct ScheduleConfig {
    double control_hz = 50.0;  // mixture controller frequency F
    int window = 16;           // controller steps per refinement action
    int key_update_period = 5; // episodes between detector training bursts
};

struct BudgetConfig {
    int refine_episodes = 2000;   // source refinement
    int target_episodes = 600;    // target refinement
    int scratch_episodes = 2400;  // from-scratch comparison arm
};

struct RunConfig {
    sim::Skill skill = sim::Skill::Drawer;
    std::vector<uint64_t> seeds = {1, 2, 3};
    int trials_per_eval = 100;
    ScheduleConfig schedule;
    NoiseConfig noise;
    BudgetConfig budgets;
    Mode mode = Mode::GMM;
    int demo_count = 10;
    int gmm_components = 8;
    double expert_jitter_std = 0.01;
    int preamble_steps = 20;
    std::optional<std::vector<sim::SceneConfig>> suite_override;

    std::vector<sim::SceneConfig> variant_suite() const;
    rl::ControlSchedule control_schedule() const;
    void validate() const;
};

nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

// FNV-1a over the canonical JSON dump; stable across runs.
std::string config_hash(const RunConfig& config);
std::string version_string();

}  // namespace kisgmm::harness
