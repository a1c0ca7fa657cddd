#include "kisgmm/dynsys/trajectory.hpp"

#include <cmath>
#include <fstream>

#include "kisgmm/common/errors.hpp"

namespace kisgmm::dynsys {

void validate_for_fitting(const DemonstrationSet& demos) {
    if (demos.trajectories.empty()) throw ConfigError("demonstrations: need at least one trajectory");
    if (!demos.reference_point.allFinite())
        throw ConfigError("demonstrations: non-finite reference point");
    for (size_t j = 0; j < demos.trajectories.size(); ++j) {
        const auto& traj = demos.trajectories[j];
        if (traj.size() < 2)
            throw ConfigError("demonstrations: trajectory " + std::to_string(j) +
                              " has fewer than 2 poses");
        for (int i = 0; i < traj.size(); ++i) {
            if (!traj.poses[i].position.allFinite() || !std::isfinite(traj.poses[i].time))
                throw ConfigError("demonstrations: non-finite pose in trajectory " +
                                  std::to_string(j));
            if (i > 0 && traj.poses[i].time <= traj.poses[i - 1].time)
                throw ConfigError("demonstrations: non-increasing timestamps in trajectory " +
                                  std::to_string(j));
        }
    }
}

nlohmann::json demos_to_json(const DemonstrationSet& demos) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["reference_point"] = {demos.reference_point.x(), demos.reference_point.y(),
                            demos.reference_point.z()};
    j["trajectories"] = nlohmann::json::array();
    for (const auto& traj : demos.trajectories) {
        nlohmann::json tj;
        tj["poses"] = nlohmann::json::array();
        for (const auto& p : traj.poses)
            tj["poses"].push_back(
                {{"p", {p.position.x(), p.position.y(), p.position.z()}}, {"t", p.time}});
        j["trajectories"].push_back(std::move(tj));
    }
    return j;
}

DemonstrationSet demos_from_json(const nlohmann::json& j) {
    if (j.value("format_version", 0) != 1)
        throw ConfigError("demonstrations: unsupported format_version");
    DemonstrationSet demos;
    const auto& rp = j.at("reference_point");
    demos.reference_point = Vec3(rp.at(0), rp.at(1), rp.at(2));
    for (const auto& tj : j.at("trajectories")) {
        Trajectory traj;
        for (const auto& pj : tj.at("poses")) {
            Pose p;
            const auto& pos = pj.at("p");
            p.position = Vec3(pos.at(0), pos.at(1), pos.at(2));
            p.time = pj.at("t");
            traj.poses.push_back(p);
        }
        demos.trajectories.push_back(std::move(traj));
    }
    return demos;
}

void save_demos(const DemonstrationSet& demos, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw ConfigError("demonstrations: cannot open '" + path + "' for writing");
    os << demos_to_json(demos).dump(2) << "\n";
}

DemonstrationSet load_demos(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("demonstrations: cannot open '" + path + "'");
    nlohmann::json j;
    is >> j;
    return demos_from_json(j);
}

}  // namespace kisgmm::dynsys
