#include "kisgmm/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "kisgmm/common/errors.hpp"

namespace kisgmm::harness {

void EvalReport::compute_aggregates() {
    aggregates.clear();
    std::map<std::tuple<int, std::string, int>, std::vector<double>> groups;
    for (const auto& c : cells)
        groups[{static_cast<int>(c.mode), c.variant, static_cast<int>(c.tier)}].push_back(
            c.success_rate());
    for (const auto& [key, rates] : groups) {
        EvalAggregate a;
        a.mode = static_cast<Mode>(std::get<0>(key));
        a.variant = std::get<1>(key);
        a.tier = static_cast<sim::DisplacementTier>(std::get<2>(key));
        a.seeds = static_cast<int>(rates.size());
        double sum = 0.0;
        for (double r : rates) sum += r;
        a.mean = sum / rates.size();
        double var = 0.0;
        for (double r : rates) var += (r - a.mean) * (r - a.mean);
        a.stddev = rates.size() > 1 ? std::sqrt(var / (rates.size() - 1)) : 0.0;
        aggregates.push_back(std::move(a));
    }
}

double EvalReport::rate(Mode mode, const std::string& variant, sim::DisplacementTier tier) const {
    for (const auto& a : aggregates)
        if (a.mode == mode && a.variant == variant && a.tier == tier) return a.mean;
    throw ConfigError("report: no aggregate for mode=" + to_string(mode) + " variant=" + variant);
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["manifest"] = manifest;
    j["cells"] = nlohmann::json::array();
    for (const auto& c : cells)
        j["cells"].push_back({{"mode", to_string(c.mode)},
                              {"variant", c.variant},
                              {"tier", sim::to_string(c.tier)},
                              {"seed", c.seed},
                              {"trials", c.trials},
                              {"successes", c.successes},
                              {"success_rate", c.success_rate()}});
    j["aggregates"] = nlohmann::json::array();
    for (const auto& a : aggregates)
        j["aggregates"].push_back({{"mode", to_string(a.mode)},
                                   {"variant", a.variant},
                                   {"tier", sim::to_string(a.tier)},
                                   {"mean", a.mean},
                                   {"stddev", a.stddev},
                                   {"seeds", a.seeds}});
    return j;
}

std::string EvalReport::metrics_csv() const {
    std::ostringstream os;
    os << "mode,variant,tier,seed,trials,successes,success_rate\n";
    for (const auto& c : cells) {
        os << to_string(c.mode) << ',' << c.variant << ',' << sim::to_string(c.tier) << ','
           << c.seed << ',' << c.trials << ',' << c.successes << ',';
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", c.success_rate());
        os << buf << '\n';
    }
    return os.str();
}

std::string train_metrics_csv(const std::vector<TrainMetricsRow>& rows) {
    std::ostringstream os;
    os << "episode,return,success,critic_loss,actor_loss,alpha\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%d,%.6f,%.6f,%.6f\n", r.episode,
                      r.episode_return, r.success ? 1 : 0, r.critic_loss, r.actor_loss, r.alpha);
        os << buf;
    }
    return os.str();
}

std::string curves_csv(const std::vector<CurveRow>& rows) {
    std::ostringstream os;
    os << "arm,episode,success,moving_success\n";
    char buf[96];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.6f\n", r.arm.c_str(), r.episode,
                      r.success ? 1 : 0, r.moving_success);
        os << buf;
    }
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::trunc | std::ios::binary);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    os << content;
}

nlohmann::json make_manifest(const RunConfig& config, double wall_time_sec) {
    return {{"config_hash", config_hash(config)},
            {"version", version_string()},
            {"wall_time_sec", wall_time_sec}};
}

std::string episode_log_line(int step, const Eigen::Vector3d& pose, double reward, bool done) {
    nlohmann::json j{{"step", step},
                     {"pose", {pose.x(), pose.y(), pose.z()}},
                     {"reward", reward},
                     {"done", done}};
    return j.dump();
}

}  // namespace kisgmm::harness
