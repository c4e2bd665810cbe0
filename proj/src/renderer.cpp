// SPDX-License-Identifier: Apache-2.0
#include "elmgs/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "elmgs/error.hpp"

namespace elmgs {

namespace {

using Mat23 = Eigen::Matrix<double, 2, 3>;

// Everything the forward pass derives from one Gaussian, kept for backward.
struct Splat {
    std::size_t index = 0;
    double depth = 0.0;
    Eigen::Vector3d t_cam;         // camera-space center
    Eigen::Vector4d q_unit;        // normalized quaternion
    double q_norm = 1.0;
    Eigen::Matrix3d rot;           // rotation matrix of q_unit
    Eigen::Vector3d scale;         // exp(log_scale)
    Eigen::Matrix3d cov3d;
    Mat23 jacobian;                // d(pixel)/d(camera-space point)
    Eigen::Vector2d mean2d;
    double cov_a = 0, cov_b = 0, cov_c = 0;        // 2D covariance [[a, b], [b, c]]
    double conic_a = 0, conic_b = 0, conic_c = 0;  // its inverse
    double opacity = 0.0;
    Eigen::Vector3d color;
};

Eigen::Matrix3d quaternion_to_matrix(const Eigen::Vector4d& u) {
    const double w = u[0], x = u[1], y = u[2], z = u[3];
    Eigen::Matrix3d r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

Mat23 projection_jacobian(const Eigen::Vector3d& t, const Camera& cam) {
    const double iz = 1.0 / t.z();
    Mat23 j;
    j << cam.fx * iz, 0.0, -cam.fx * t.x() * iz * iz,
        0.0, cam.fy * iz, -cam.fy * t.y() * iz * iz;
    return j;
}

// Builds the depth-sorted splat list for one camera.
std::vector<Splat> prepare(const SceneParams& p, const Camera& cam, const RenderOptions& opt) {
    std::vector<Splat> splats;
    splats.reserve(p.count());
    for (std::size_t i = 0; i < p.count(); ++i) {
        Splat s;
        s.index = i;
        const Eigen::Vector3d x(p.positions[3 * i], p.positions[3 * i + 1], p.positions[3 * i + 2]);
        s.t_cam = cam.to_camera(x);
        if (!(s.t_cam.z() > opt.near_plane)) continue;
        const Eigen::Vector4d q(p.rotations[4 * i], p.rotations[4 * i + 1], p.rotations[4 * i + 2],
                                p.rotations[4 * i + 3]);
        s.q_norm = q.norm();
        s.q_unit = q / s.q_norm;
        s.rot = quaternion_to_matrix(s.q_unit);
        for (int k = 0; k < 3; ++k) s.scale[k] = std::exp(p.log_scales[3 * i + k]);
        const Eigen::Matrix3d m = s.rot * s.scale.asDiagonal();
        s.cov3d = m * m.transpose();
        s.jacobian = projection_jacobian(s.t_cam, cam);
        const Mat23 t = s.jacobian * cam.rotation;
        const Eigen::Matrix2d cov = t * s.cov3d * t.transpose();
        s.cov_a = cov(0, 0) + opt.dilation;
        s.cov_b = cov(0, 1);
        s.cov_c = cov(1, 1) + opt.dilation;
        const double det = s.cov_a * s.cov_c - s.cov_b * s.cov_b;
        if (!(det > opt.min_determinant)) continue;
        s.conic_a = s.cov_c / det;
        s.conic_b = -s.cov_b / det;
        s.conic_c = s.cov_a / det;
        s.mean2d = {cam.fx * s.t_cam.x() / s.t_cam.z() + cam.cx,
                    cam.fy * s.t_cam.y() / s.t_cam.z() + cam.cy};
        s.depth = s.t_cam.z();
        s.opacity = sigmoid(p.opacity_logits[i]);
        for (int k = 0; k < 3; ++k) s.color[k] = dc_to_color(p.sh_dc[3 * i + k]);
        splats.push_back(s);
    }
    std::sort(splats.begin(), splats.end(), [](const Splat& a, const Splat& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.index < b.index;
    });
    return splats;
}

struct Hit {
    std::size_t splat;   // position in the sorted list
    double gaussian;     // exp(power)
    double alpha;        // after clamping
    double transmittance;  // before this splat
    bool clamped;
};

// Composites one pixel, recording every contributing splat when `hits` is set.
Eigen::Vector3d shade(const std::vector<Splat>& splats, double px, double py, const RenderOptions& opt,
                      double& transmittance, std::vector<Hit>* hits) {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    double t = 1.0;
    for (std::size_t k = 0; k < splats.size(); ++k) {
        const Splat& s = splats[k];
        const double dx = px - s.mean2d.x();
        const double dy = py - s.mean2d.y();
        const double power = -0.5 * (s.conic_a * dx * dx + 2.0 * s.conic_b * dx * dy + s.conic_c * dy * dy);
        const double g = std::exp(power);
        double a = s.opacity * g;
        const bool clamped = a > opt.alpha_clamp;
        if (clamped) a = opt.alpha_clamp;
        if (hits) hits->push_back({k, g, a, t, clamped});
        c += s.color * (a * t);
        t *= 1.0 - a;
        if (t < opt.min_transmittance) break;
    }
    transmittance = t;
    return c;
}

void check_inputs(const SceneParams& params, const Camera& camera) {
    validate_scene(params);
    camera.validate();
}

}  // namespace

Projection project(const Eigen::Vector3d& mean, const Eigen::Matrix3d& cov3d, const Camera& camera,
                   const RenderOptions& options) {
    Projection out;
    const Eigen::Vector3d t = camera.to_camera(mean);
    if (!(t.z() > options.near_plane)) return out;
    const Mat23 jw = projection_jacobian(t, camera) * camera.rotation;
    out.cov = jw * cov3d * jw.transpose();
    out.cov(0, 0) += options.dilation;
    out.cov(1, 1) += options.dilation;
    out.mean = {camera.fx * t.x() / t.z() + camera.cx, camera.fy * t.y() / t.z() + camera.cy};
    out.depth = t.z();
    out.culled = false;
    return out;
}

RenderResult render(const SceneParams& params, const Camera& camera, const RenderOptions& options) {
    check_inputs(params, camera);
    const auto splats = prepare(params, camera, options);
    RenderResult out{Image(camera.width, camera.height), std::vector<double>(
                                                             static_cast<std::size_t>(camera.width) * camera.height)};
    for (int y = 0; y < camera.height; ++y)
        for (int x = 0; x < camera.width; ++x) {
            double t = 1.0;
            const Eigen::Vector3d c = shade(splats, x, y, options, t, nullptr);
            for (int k = 0; k < 3; ++k) out.image.at(x, y, k) = std::clamp(c[k], 0.0, 1.0);
            out.weight[static_cast<std::size_t>(y) * camera.width + x] = 1.0 - t;
        }
    return out;
}

Image rasterize(const SceneParams& params, const Camera& camera, const RenderOptions& options) {
    return render(params, camera, options).image;
}

Image rasterize(const GaussianScene& scene, const Camera& camera, const RenderOptions& options) {
    return rasterize(scene.cast<double>(), camera, options);
}

double loss_with_gradient(const Image& rendered, const Image& truth, std::vector<double>& grad,
                          const LossOptions& options) {
    if (!rendered.same_shape(truth) || rendered.rgb.size() != truth.rgb.size())
        fail(ErrorKind::InvalidArgument, "loss: image dimension mismatch");
    if (rendered.rgb.empty()) fail(ErrorKind::InvalidArgument, "loss: empty images");
    const double n = static_cast<double>(rendered.rgb.size());
    const double l1_weight = 1.0 - options.lambda;
    double l1 = 0.0;
    grad.assign(rendered.rgb.size(), 0.0);
    for (std::size_t i = 0; i < rendered.rgb.size(); ++i) {
        const double d = rendered.rgb[i] - truth.rgb[i];
        l1 += std::abs(d);
        grad[i] = l1_weight * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / n;
    }
    double value = l1_weight * l1 / n;
    if (options.lambda != 0.0) {
        std::vector<double> g_ssim;
        const double s = ssim_with_gradient(rendered, truth, g_ssim, options.ssim);
        value += options.lambda * (1.0 - s);
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] -= options.lambda * g_ssim[i];
    }
    return value;
}

double loss(const Image& rendered, const Image& truth, const LossOptions& options) {
    std::vector<double> unused;
    return loss_with_gradient(rendered, truth, unused, options);
}

BackwardResult backward(const SceneParams& params, const Camera& camera, const Image& truth,
                        const LossOptions& loss_options, const RenderOptions& options) {
    check_inputs(params, camera);
    if (truth.width != camera.width || truth.height != camera.height)
        fail(ErrorKind::InvalidArgument, "ground-truth image does not match the camera size");
    const auto splats = prepare(params, camera, options);
    const int w = camera.width, h = camera.height;

    // Forward pass, keeping the unclamped color for the output clamp mask.
    Image image(w, h);
    std::vector<double> raw(image.rgb.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double t = 1.0;
            const Eigen::Vector3d c = shade(splats, x, y, options, t, nullptr);
            for (int k = 0; k < 3; ++k) {
                raw[(static_cast<std::size_t>(y) * w + x) * 3 + k] = c[k];
                image.at(x, y, k) = std::clamp(c[k], 0.0, 1.0);
            }
        }

    BackwardResult result;
    std::vector<double> d_image;
    result.loss = loss_with_gradient(image, truth, d_image, loss_options);
    result.grads = SceneGradients::zeros(params.count());

    // Per-splat accumulators in screen space.
    const std::size_t m = splats.size();
    std::vector<Eigen::Vector2d> d_mean2d(m, Eigen::Vector2d::Zero());
    std::vector<Eigen::Vector3d> d_conic(m, Eigen::Vector3d::Zero());  // (a, b, c), b counted once
    std::vector<double> d_opacity(m, 0.0);
    std::vector<Eigen::Vector3d> d_color(m, Eigen::Vector3d::Zero());

    std::vector<Hit> hits;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t pix = static_cast<std::size_t>(y) * w + x;
            Eigen::Vector3d d_pixel;
            for (int k = 0; k < 3; ++k) {
                const double v = raw[pix * 3 + k];
                d_pixel[k] = (v >= 0.0 && v <= 1.0) ? d_image[pix * 3 + k] : 0.0;
            }
            if (d_pixel.isZero()) continue;
            hits.clear();
            double t_final = 1.0;
            shade(splats, x, y, options, t_final, &hits);
            // Color accumulated behind the current splat.
            Eigen::Vector3d behind = Eigen::Vector3d::Zero();
            for (std::size_t r = hits.size(); r-- > 0;) {
                const Hit& hit = hits[r];
                const Splat& s = splats[hit.splat];
                const double weight = hit.alpha * hit.transmittance;
                d_color[hit.splat] += d_pixel * weight;
                const double d_alpha =
                    d_pixel.dot(s.color * hit.transmittance - behind / (1.0 - hit.alpha));
                behind += s.color * weight;
                if (hit.clamped) continue;
                d_opacity[hit.splat] += d_alpha * hit.gaussian;
                const double d_power = d_alpha * s.opacity * hit.gaussian;
                const double dx = x - s.mean2d.x();
                const double dy = y - s.mean2d.y();
                d_conic[hit.splat] += d_power * Eigen::Vector3d(-0.5 * dx * dx, -dx * dy, -0.5 * dy * dy);
                d_mean2d[hit.splat] += d_power * Eigen::Vector2d(s.conic_a * dx + s.conic_b * dy,
                                                                 s.conic_b * dx + s.conic_c * dy);
            }
        }

    // Chain each splat back to its raw parameters.
    const Eigen::Matrix3d& world_rot = camera.rotation;
    for (std::size_t k = 0; k < m; ++k) {
        const Splat& s = splats[k];
        const std::size_t i = s.index;
        auto& g = result.grads;

        for (int c = 0; c < 3; ++c) g.sh_dc[3 * i + c] = kShC0 * d_color[k][c];
        g.opacity_logits[i] = d_opacity[k] * s.opacity * (1.0 - s.opacity);

        // Conic -> 2D covariance.
        const double a = s.cov_a, b = s.cov_b, c = s.cov_c;
        const double det = a * c - b * b;
        const double inv2 = 1.0 / (det * det);
        const double ga = d_conic[k][0], gb = d_conic[k][1], gc = d_conic[k][2];
        const double d_a = inv2 * (-c * c * ga + b * c * gb - b * b * gc);
        const double d_b = inv2 * (2.0 * b * c * ga - (a * c + b * b) * gb + 2.0 * a * b * gc);
        const double d_c = inv2 * (-b * b * ga + a * b * gb - a * a * gc);
        Eigen::Matrix2d d_cov2d;
        d_cov2d << d_a, 0.5 * d_b, 0.5 * d_b, d_c;

        // 2D covariance -> 3D covariance and the Jacobian.
        const Mat23 jw = s.jacobian * world_rot;
        const Eigen::Matrix3d d_cov3d = jw.transpose() * d_cov2d * jw;
        const Mat23 d_jw = 2.0 * d_cov2d * jw * s.cov3d;
        const Mat23 d_j = d_jw * world_rot.transpose();

        // 3D covariance -> rotation and scale.
        const Eigen::Matrix3d mm = s.rot * s.scale.asDiagonal();
        const Eigen::Matrix3d d_m = 2.0 * d_cov3d * mm;
        Eigen::Matrix3d d_rot;
        for (int col = 0; col < 3; ++col) {
            d_rot.col(col) = d_m.col(col) * s.scale[col];
            const double d_scale = d_m.col(col).dot(s.rot.col(col));
            g.log_scales[3 * i + col] = d_scale * s.scale[col];
        }
        const double qw = s.q_unit[0], qx = s.q_unit[1], qy = s.q_unit[2], qz = s.q_unit[3];
        const auto& dr = d_rot;
        Eigen::Vector4d d_unit;
        d_unit[0] = 2.0 * (-qz * dr(0, 1) + qy * dr(0, 2) + qz * dr(1, 0) - qx * dr(1, 2) -
                           qy * dr(2, 0) + qx * dr(2, 1));
        d_unit[1] = 2.0 * (qy * dr(0, 1) + qz * dr(0, 2) + qy * dr(1, 0) - 2.0 * qx * dr(1, 1) -
                           qw * dr(1, 2) + qz * dr(2, 0) + qw * dr(2, 1) - 2.0 * qx * dr(2, 2));
        d_unit[2] = 2.0 * (-2.0 * qy * dr(0, 0) + qx * dr(0, 1) + qw * dr(0, 2) + qx * dr(1, 0) +
                           qz * dr(1, 2) - qw * dr(2, 0) + qz * dr(2, 1) - 2.0 * qy * dr(2, 2));
        d_unit[3] = 2.0 * (-2.0 * qz * dr(0, 0) - qw * dr(0, 1) + qx * dr(0, 2) + qw * dr(1, 0) -
                           2.0 * qz * dr(1, 1) + qy * dr(1, 2) + qx * dr(2, 0) + qy * dr(2, 1));
        const Eigen::Vector4d d_q = (d_unit - s.q_unit * s.q_unit.dot(d_unit)) / s.q_norm;
        for (int c4 = 0; c4 < 4; ++c4) g.rotations[4 * i + c4] = d_q[c4];

        // Mean: through the projected center and through the Jacobian.
        const double tx = s.t_cam.x(), ty = s.t_cam.y(), tz = s.t_cam.z();
        const double iz = 1.0 / tz, iz2 = iz * iz, iz3 = iz2 * iz;
        const double fx = camera.fx, fy = camera.fy;
        Eigen::Vector3d d_t;
        d_t.x() = d_mean2d[k].x() * fx * iz - d_j(0, 2) * fx * iz2;
        d_t.y() = d_mean2d[k].y() * fy * iz - d_j(1, 2) * fy * iz2;
        d_t.z() = -d_mean2d[k].x() * fx * tx * iz2 - d_mean2d[k].y() * fy * ty * iz2 -
                  d_j(0, 0) * fx * iz2 + d_j(0, 2) * 2.0 * fx * tx * iz3 - d_j(1, 1) * fy * iz2 +
                  d_j(1, 2) * 2.0 * fy * ty * iz3;
        const Eigen::Vector3d d_x = world_rot.transpose() * d_t;
        for (int c3 = 0; c3 < 3; ++c3) g.positions[3 * i + c3] = d_x[c3];
    }
    return result;
}

BackwardResult backward(const GaussianScene& scene, const Camera& camera, const Image& truth,
                        const LossOptions& loss_options, const RenderOptions& options) {
    return backward(scene.cast<double>(), camera, truth, loss_options, options);
}

GradientScore accumulate_scores(const GaussianScene& scene, std::span<const View> views,
                                const LossOptions& loss_options, const RenderOptions& options) {
    if (views.empty()) fail(ErrorKind::InvalidArgument, "accumulate_scores needs at least one view");
    const SceneParams params = scene.cast<double>();
    GradientScore scores(scene.count(), 0.0);
    for (const View& view : views) {
        const BackwardResult r = backward(params, view.camera, view.image, loss_options, options);
        for (std::size_t i = 0; i < scene.count(); ++i) {
            double sum = 0.0;
            for (Attribute a : kAllAttributes) {
                const std::size_t k = arity(a);
                const auto& g = r.grads.attribute(a);
                for (std::size_t j = 0; j < k; ++j) sum += std::abs(g[i * k + j]);
            }
            scores[i] += sum / static_cast<double>(kParametersPerGaussian);
        }
    }
    for (double& s : scores) s /= static_cast<double>(views.size());
    return scores;
}

}  // namespace elmgs
