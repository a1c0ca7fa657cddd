#include "kisgmm/sim/texture.hpp"

#include <cmath>

#include "kisgmm/common/rng.hpp"

namespace kisgmm::sim {

namespace {

double cell_noise(double y, double z, double cell, uint64_t seed) {
    const auto iy = static_cast<int64_t>(std::floor(y / cell));
    const auto iz = static_cast<int64_t>(std::floor(z / cell));
    uint64_t h = hash_combine(seed, static_cast<uint64_t>(iy) * 0x9e3779b97f4a7c15ULL ^
                                        static_cast<uint64_t>(iz));
    return static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-53;
}

}  // namespace

Eigen::Vector3d panel_texture(double y, double z, uint64_t seed, const Eigen::Vector3d& base,
                              const Eigen::Vector3d& alt) {
    const double coarse = cell_noise(y, z, 0.12, seed);
    const double fine = cell_noise(y, z, 0.04, seed ^ 0xabcdef12345ULL);
    const double t = 0.62 * coarse + 0.38 * fine;
    return base + t * (alt - base);
}

}  // namespace kisgmm::sim
