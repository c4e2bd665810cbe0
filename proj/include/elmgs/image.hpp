// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace elmgs {

/// Row-major RGB image, channels interleaved, values nominally in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> rgb;

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    double& at(int x, int y, int c) { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    double at(int x, int y, int c) const {
        return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }

    bool same_shape(const Image& other) const {
        return width == other.width && height == other.height;
    }

    bool operator==(const Image&) const = default;
};

/// Pinhole camera with a rigid world-to-camera transform. Camera space looks
/// down +z; pixel (u, v) has its center at integer coordinates.
struct Camera {
    int width = 1;
    int height = 1;
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    /// Throws InvalidArgument on non-positive size or a non-orthonormal
    /// rotation (tolerance 1e-8).
    void validate() const;

    Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
        return rotation * world + translation;
    }
};

/// A camera together with its ground-truth image.
struct View {
    Camera camera;
    Image image;
};

/// Camera at `eye` looking at `target`; image rows grow opposite to `up`.
Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
               const Eigen::Vector3d& up, int width, int height, double focal);

}  // namespace elmgs
