// SPDX-License-Identifier: Apache-2.0
#include "splat/scene.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace splat {

const char* const kGroupNames[5] = {"position", "scale", "rotation", "opacity",
                                    "color"};

Eigen::VectorXd Scene::pack() const {
    const int k = size();
    Eigen::VectorXd x(dim());
    for (int i = 0; i < k; ++i) {
        const GaussianPrimitive& p = splats[i];
        x.segment<3>(3 * i) = p.mu;
        x.segment<3>(scale_offset() + 3 * i) = p.scale;
        x.segment<4>(quat_offset() + 4 * i) = p.quat;
        x[opacity_offset() + i] = p.opacity;
        x.segment<3>(color_offset() + 3 * i) = p.color;
    }
    return x;
}

void Scene::unpack(const Eigen::VectorXd& x) {
    if (x.size() != dim())
        throw std::invalid_argument("Scene::unpack: dimension mismatch");
    const int k = size();
    for (int i = 0; i < k; ++i) {
        GaussianPrimitive& p = splats[i];
        p.mu = x.segment<3>(3 * i);
        p.scale = x.segment<3>(scale_offset() + 3 * i);
        p.quat = x.segment<4>(quat_offset() + 4 * i);
        p.opacity = x[opacity_offset() + i];
        p.color = x.segment<3>(color_offset() + 3 * i);
    }
}

int Scene::group_of(int k) const {
    if (k < scale_offset()) return 0;
    if (k < quat_offset()) return 1;
    if (k < opacity_offset()) return 2;
    if (k < color_offset()) return 3;
    return 4;
}

void Scene::clamp(const ParamBounds& b) {
    for (GaussianPrimitive& p : splats) {
        for (int a = 0; a < 3; ++a) {
            p.scale[a] = std::max(p.scale[a], b.s_min);
            p.color[a] = std::min(std::max(p.color[a], b.c_min), b.c_max);
        }
        p.opacity = std::min(std::max(p.opacity, b.alpha_min), b.alpha_max);
    }
}

void Scene::validate(const ParamBounds& b) const {
    for (int i = 0; i < size(); ++i) {
        const GaussianPrimitive& p = splats[i];
        const std::string where = "splat " + std::to_string(i) + ": ";
        for (int a = 0; a < 3; ++a) {
            if (!std::isfinite(p.mu[a]) || !std::isfinite(p.scale[a]) ||
                !std::isfinite(p.color[a]))
                throw std::runtime_error(where + "non-finite parameter");
            if (p.scale[a] < b.s_min)
                throw std::runtime_error(where + "scale below s_min");
            if (p.color[a] < b.c_min || p.color[a] > b.c_max)
                throw std::runtime_error(where + "color out of range");
        }
        for (int a = 0; a < 4; ++a)
            if (!std::isfinite(p.quat[a]))
                throw std::runtime_error(where + "non-finite quaternion");
        if (p.quat.squaredNorm() < 1e-24)
            throw std::runtime_error(where + "degenerate quaternion");
        if (!std::isfinite(p.opacity) || p.opacity < b.alpha_min ||
            p.opacity > b.alpha_max)
            throw std::runtime_error(where + "opacity out of range");
    }
}

double scene_extent(const std::vector<Camera>& cams) {
    if (cams.size() < 2) return 1.0;
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const Camera& c : cams) centroid += c.center();
    centroid /= static_cast<double>(cams.size());
    double extent = 0.0;
    for (const Camera& c : cams)
        extent = std::max(extent, (c.center() - centroid).norm());
    return extent > 0.0 ? extent : 1.0;
}

Eigen::Vector4d rotation_to_quat(const Eigen::Matrix3d& r) {
    // returns (x, y, z, w), unit norm
    Eigen::Vector4d q;
    const double tr = r.trace();
    if (tr > 0.0) {
        double s = std::sqrt(tr + 1.0) * 2.0;
        q[3] = 0.25 * s;
        q[0] = (r(2, 1) - r(1, 2)) / s;
        q[1] = (r(0, 2) - r(2, 0)) / s;
        q[2] = (r(1, 0) - r(0, 1)) / s;
    } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
        double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
        q[3] = (r(2, 1) - r(1, 2)) / s;
        q[0] = 0.25 * s;
        q[1] = (r(0, 1) + r(1, 0)) / s;
        q[2] = (r(0, 2) + r(2, 0)) / s;
    } else if (r(1, 1) > r(2, 2)) {
        double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
        q[3] = (r(0, 2) - r(2, 0)) / s;
        q[0] = (r(0, 1) + r(1, 0)) / s;
        q[1] = 0.25 * s;
        q[2] = (r(1, 2) + r(2, 1)) / s;
    } else {
        double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
        q[3] = (r(1, 0) - r(0, 1)) / s;
        q[0] = (r(0, 2) + r(2, 0)) / s;
        q[1] = (r(1, 2) + r(2, 1)) / s;
        q[2] = 0.25 * s;
    }
    return q / q.norm();
}

Camera look_at_camera(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                      double fx, double fy, int width, int height) {
    Eigen::Vector3d z = (target - eye).normalized();
    Eigen::Vector3d up(0, 0, 1);
    if (std::abs(z.dot(up)) > 0.999) up = Eigen::Vector3d(0, 1, 0);
    const Eigen::Vector3d x = z.cross(up).normalized();
    const Eigen::Vector3d y = z.cross(x);  // +y is image-down
    Eigen::Matrix3d r;
    r.row(0) = x;
    r.row(1) = y;
    r.row(2) = z;
    Camera cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    cam.width = width;
    cam.height = height;
    cam.q_wc = rotation_to_quat(r);
    cam.t_wc = -r * eye;
    return cam;
}

}  // namespace splat
