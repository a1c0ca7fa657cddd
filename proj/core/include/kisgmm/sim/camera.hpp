#pragma once

#include <Eigen/Dense>

namespace kisgmm::sim {

using Vec3 = Eigen::Vector3d;

inline constexpr int kImageSize = 24;
inline constexpr double kNearPlane = 0.02;

// Pinhole intrinsics in pixels. Pixel centers sit at integer coordinates,
// so the principal point of a 24x24 image is (11.5, 11.5).
struct CameraIntrinsics {
    double fx = 14.0;
    double fy = 14.0;
    double cx = (kImageSize - 1) / 2.0;
    double cy = (kImageSize - 1) / 2.0;
};

// The wrist camera sits at the effector and looks along world +x with a
// fixed orientation: camera x (image right) = world -y, camera y (image
// down) = world -z, camera z (forward) = world +x.
Vec3 world_to_camera(const Vec3& world_point, const Vec3& camera_pos);
Vec3 camera_to_world(const Vec3& camera_point, const Vec3& camera_pos);

struct KeypointProjection {
    double u = 0.0;
    double v = 0.0;
    double z = 0.0;  // camera-frame depth, meters
    bool present = false;
};

// Projects a camera-frame point. present is true iff the point is beyond
// the near plane and lands within the pixel-center span of the image.
KeypointProjection project(const Vec3& camera_point, const CameraIntrinsics& K);

// Projects a world point through the wrist camera at camera_pos.
KeypointProjection project_keypoint(const Vec3& world_point, const Vec3& camera_pos,
                                    const CameraIntrinsics& K);

// Exact inverse of project for z > 0.
Vec3 backproject(double u, double v, double z, const CameraIntrinsics& K);

}  // namespace kisgmm::sim
