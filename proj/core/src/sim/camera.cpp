#include "kisgmm/sim/camera.hpp"

namespace kisgmm::sim {

Vec3 world_to_camera(const Vec3& world_point, const Vec3& camera_pos) {
    const Vec3 d = world_point - camera_pos;
    return Vec3(-d.y(), -d.z(), d.x());
}

Vec3 camera_to_world(const Vec3& camera_point, const Vec3& camera_pos) {
    return camera_pos + Vec3(camera_point.z(), -camera_point.x(), -camera_point.y());
}

KeypointProjection project(const Vec3& camera_point, const CameraIntrinsics& K) {
    KeypointProjection p;
    p.z = camera_point.z();
    if (p.z < kNearPlane) return p;
    p.u = K.cx + K.fx * camera_point.x() / p.z;
    p.v = K.cy + K.fy * camera_point.y() / p.z;
    p.present = p.u >= 0.0 && p.u <= kImageSize - 1 && p.v >= 0.0 && p.v <= kImageSize - 1;
    return p;
}

KeypointProjection project_keypoint(const Vec3& world_point, const Vec3& camera_pos,
                                    const CameraIntrinsics& K) {
    return project(world_to_camera(world_point, camera_pos), K);
}

Vec3 backproject(double u, double v, double z, const CameraIntrinsics& K) {
    return Vec3((u - K.cx) * z / K.fx, (v - K.cy) * z / K.fy, z);
}

}  // namespace kisgmm::sim
