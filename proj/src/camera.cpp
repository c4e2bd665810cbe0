// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include <Eigen/Geometry>

#include "elmgs/error.hpp"
#include "elmgs/image.hpp"

namespace elmgs {

void Camera::validate() const {
    if (width < 1 || height < 1) fail(ErrorKind::InvalidArgument, "camera size must be at least 1x1");
    if (!std::isfinite(fx) || !std::isfinite(fy) || fx <= 0.0 || fy <= 0.0)
        fail(ErrorKind::InvalidArgument, "camera focal lengths must be positive");
    if (!std::isfinite(cx) || !std::isfinite(cy) || !translation.allFinite())
        fail(ErrorKind::InvalidArgument, "camera parameters must be finite");
    const Eigen::Matrix3d gram = rotation * rotation.transpose();
    if (!rotation.allFinite() || (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-8)
        fail(ErrorKind::InvalidArgument, "camera rotation is not orthonormal");
}

Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
               const Eigen::Vector3d& up, int width, int height, double focal) {
    const Eigen::Vector3d forward = (target - eye).normalized();
    const Eigen::Vector3d right = forward.cross(up).normalized();
    const Eigen::Vector3d down = forward.cross(right);
    Camera cam;
    cam.width = width;
    cam.height = height;
    cam.fx = cam.fy = focal;
    cam.cx = 0.5 * (width - 1);
    cam.cy = 0.5 * (height - 1);
    cam.rotation.row(0) = right.transpose();
    cam.rotation.row(1) = down.transpose();
    cam.rotation.row(2) = forward.transpose();
    cam.translation = -cam.rotation * eye;
    return cam;
}

}  // namespace elmgs
