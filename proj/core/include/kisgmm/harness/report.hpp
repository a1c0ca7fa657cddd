#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kisgmm/harness/run_config.hpp"

namespace kisgmm::harness {

struct EvalCell {
    Mode mode = Mode::GMM;
    std::string variant;
    sim::DisplacementTier tier = sim::DisplacementTier::None;
    uint64_t seed = 0;
    int trials = 0;
    int successes = 0;

    double success_rate() const { return trials > 0 ? static_cast<double>(successes) / trials : 0.0; }
};

struct EvalAggregate {
    Mode mode = Mode::GMM;
    std::string variant;
    sim::DisplacementTier tier = sim::DisplacementTier::None;
    double mean = 0.0;
    double stddev = 0.0;
    int seeds = 0;
};

struct EvalReport {
    std::vector<EvalCell> cells;
    std::vector<EvalAggregate> aggregates;
    nlohmann::json manifest;

    // mean across seeds is the exact arithmetic mean of per-seed rates
    void compute_aggregates();
    double rate(Mode mode, const std::string& variant,
                sim::DisplacementTier tier = sim::DisplacementTier::None) const;

    nlohmann::json to_json() const;
    // deterministic; excludes wall-time fields
    std::string metrics_csv() const;
};

struct TrainMetricsRow {
    int episode = 0;
    double episode_return = 0.0;
    bool success = false;
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    double alpha = 0.0;
};

std::string train_metrics_csv(const std::vector<TrainMetricsRow>& rows);

// Progress of the refined-vs-scratch comparison, one row per episode.
struct CurveRow {
    std::string arm;
    int episode = 0;
    bool success = false;
    double moving_success = 0.0;
};

std::string curves_csv(const std::vector<CurveRow>& rows);

void write_text_file(const std::string& path, const std::string& content);
nlohmann::json make_manifest(const RunConfig& config, double wall_time_sec);

// JSON-lines episode log record per the external interface.
std::string episode_log_line(int step, const Eigen::Vector3d& pose, double reward, bool done);

}  // namespace kisgmm::harness
