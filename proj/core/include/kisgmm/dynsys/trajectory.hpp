#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace kisgmm::dynsys {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

struct Pose {
    Vec3 position = Vec3::Zero();
    double time = 0.0;
};

struct Trajectory {
    std::vector<Pose> poses;

    int size() const { return static_cast<int>(poses.size()); }
    const Pose& back() const { return poses.back(); }
};

// Demonstrations recorded in one source scene, all relative to a single
// reference point.
struct DemonstrationSet {
    std::vector<Trajectory> trajectories;
    Vec3 reference_point = Vec3::Zero();
};

// Throws ConfigError unless every trajectory has >= 2 poses with strictly
// increasing, finite timestamps and finite positions.
void validate_for_fitting(const DemonstrationSet& demos);

nlohmann::json demos_to_json(const DemonstrationSet& demos);
DemonstrationSet demos_from_json(const nlohmann::json& j);
void save_demos(const DemonstrationSet& demos, const std::string& path);
DemonstrationSet load_demos(const std::string& path);

}  // namespace kisgmm::dynsys
