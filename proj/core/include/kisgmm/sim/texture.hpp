#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace kisgmm::sim {

// Procedural two-scale block noise over panel-local coordinates.
// Deterministic in (y, z, seed).
Eigen::Vector3d panel_texture(double y, double z, uint64_t seed, const Eigen::Vector3d& base,
                              const Eigen::Vector3d& alt);

}  // namespace kisgmm::sim
