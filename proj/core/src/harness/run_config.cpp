#include "kisgmm/harness/run_config.hpp"

#include <fstream>

#include "kisgmm/common/errors.hpp"

namespace kisgmm::harness {

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::GMM: return "gmm";
        case Mode::SACGMM_GT: return "sacgmm_gt";
        case Mode::SACGMM: return "sacgmm";
        case Mode::KEYGMM: return "keygmm";
        case Mode::KISGMM_ZERO: return "kisgmm_zero";
        case Mode::KISGMM_REFINED: return "kisgmm_refined";
    }
    return "?";
}

Mode mode_from_string(const std::string& s) {
    if (s == "gmm") return Mode::GMM;
    if (s == "sacgmm_gt") return Mode::SACGMM_GT;
    if (s == "sacgmm") return Mode::SACGMM;
    if (s == "keygmm") return Mode::KEYGMM;
    if (s == "kisgmm_zero") return Mode::KISGMM_ZERO;
    if (s == "kisgmm_refined") return Mode::KISGMM_REFINED;
    throw ConfigError("unknown mode '" + s + "'");
}

std::vector<sim::SceneConfig> RunConfig::variant_suite() const {
    if (suite_override) return *suite_override;
    return sim::make_variant_suite(skill);
}

rl::ControlSchedule RunConfig::control_schedule() const {
    return {1.0 / schedule.control_hz, schedule.window};
}

void RunConfig::validate() const {
    if (seeds.empty()) throw ConfigError("config: seeds must be non-empty");
    if (trials_per_eval < 1) throw ConfigError("config: trials_per_eval must be >= 1");
    if (schedule.control_hz <= 0.0) throw ConfigError("config: control_hz must be positive");
    if (schedule.window < 1) throw ConfigError("config: window must be >= 1");
    if (noise.start_std < 0.0 || noise.ref_halfwidth < 0.0)
        throw ConfigError("config: noise levels must be >= 0");
    if (gmm_components < 1) throw ConfigError("config: gmm_components must be >= 1");
    if (suite_override && suite_override->empty())
        throw ConfigError("config: suite override cannot be empty");
}

nlohmann::json run_config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["skill"] = sim::to_string(c.skill);
    j["seeds"] = c.seeds;
    j["trials_per_eval"] = c.trials_per_eval;
    j["schedule"] = {{"control_hz", c.schedule.control_hz},
                     {"window", c.schedule.window},
                     {"key_update_period", c.schedule.key_update_period}};
    j["noise"] = {{"start_std", c.noise.start_std}, {"ref_halfwidth", c.noise.ref_halfwidth}};
    j["budgets"] = {{"refine_episodes", c.budgets.refine_episodes},
                    {"target_episodes", c.budgets.target_episodes},
                    {"scratch_episodes", c.budgets.scratch_episodes}};
    j["mode"] = to_string(c.mode);
    j["demo_count"] = c.demo_count;
    j["gmm_components"] = c.gmm_components;
    j["expert_jitter_std"] = c.expert_jitter_std;
    j["preamble_steps"] = c.preamble_steps;
    if (c.suite_override) {
        j["suite"] = nlohmann::json::array();
        for (const auto& s : *c.suite_override) j["suite"].push_back(sim::scene_to_json(s));
    }
    return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig c;
    if (j.contains("skill")) c.skill = sim::skill_from_string(j.at("skill"));
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<uint64_t>>();
    c.trials_per_eval = j.value("trials_per_eval", c.trials_per_eval);
    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        c.schedule.control_hz = s.value("control_hz", c.schedule.control_hz);
        c.schedule.window = s.value("window", c.schedule.window);
        c.schedule.key_update_period = s.value("key_update_period", c.schedule.key_update_period);
    }
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        c.noise.start_std = n.value("start_std", c.noise.start_std);
        c.noise.ref_halfwidth = n.value("ref_halfwidth", c.noise.ref_halfwidth);
    }
    if (j.contains("budgets")) {
        const auto& b = j.at("budgets");
        c.budgets.refine_episodes = b.value("refine_episodes", c.budgets.refine_episodes);
        c.budgets.target_episodes = b.value("target_episodes", c.budgets.target_episodes);
        c.budgets.scratch_episodes = b.value("scratch_episodes", c.budgets.scratch_episodes);
    }
    if (j.contains("mode")) c.mode = mode_from_string(j.at("mode"));
    c.demo_count = j.value("demo_count", c.demo_count);
    c.gmm_components = j.value("gmm_components", c.gmm_components);
    c.expert_jitter_std = j.value("expert_jitter_std", c.expert_jitter_std);
    c.preamble_steps = j.value("preamble_steps", c.preamble_steps);
    if (j.contains("suite")) {
        std::vector<sim::SceneConfig> suite;
        for (const auto& sj : j.at("suite")) suite.push_back(sim::scene_from_json(sj));
        c.suite_override = std::move(suite);
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open '" + path + "'");
    nlohmann::json j;
    is >> j;
    return run_config_from_json(j);
}

std::string config_hash(const RunConfig& config) {
    const std::string dump = run_config_to_json(config).dump();
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string version_string() { return "kisgmm 0.1.0"; }

}  // namespace kisgmm::harness
