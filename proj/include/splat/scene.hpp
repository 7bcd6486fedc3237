// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "splat/geometry.hpp"
#include "splat/image.hpp"

namespace splat {

// One splat's optimizable parameters. The quaternion is stored and optimized
// unnormalized; every consumer goes through quat_to_rotation, which divides
// by |q|^2.
struct GaussianPrimitive {
    Eigen::Vector3d mu = Eigen::Vector3d::Zero();
    Eigen::Vector3d scale = Eigen::Vector3d::Ones();
    Eigen::Vector4d quat = Eigen::Vector4d(0, 0, 0, 1);  // (x, y, z, w)
    double opacity = 0.5;
    Eigen::Vector3d color = Eigen::Vector3d::Ones();

    Eigen::Matrix3d cov() const { return covariance<double>(scale, quat); }
    double det_s() const { return scale[0] * scale[1] * scale[2]; }
};

// Box constraints enforced by post-step clamping; the trust-region radii are
// derived for the raw (activated) parameters, so there is no sigmoid/exp
// reparameterization anywhere.
struct ParamBounds {
    double s_min = 1e-6;
    double alpha_min = 1e-4;
    double alpha_max = 0.995;
    double c_min = 1e-6;
    double c_max = 1.5;
};

// Flat parameter vector layout is group-major:
//   positions [0,3K) | scales [3K,6K) | quats [6K,10K) |
//   opacities [10K,11K) | colors [11K,14K)
struct Scene {
    std::vector<GaussianPrimitive> splats;

    static constexpr int kParamsPerSplat = 14;

    int size() const { return static_cast<int>(splats.size()); }
    int dim() const { return kParamsPerSplat * size(); }

    int pos_offset() const { return 0; }
    int scale_offset() const { return 3 * size(); }
    int quat_offset() const { return 6 * size(); }
    int opacity_offset() const { return 10 * size(); }
    int color_offset() const { return 11 * size(); }

    Eigen::VectorXd pack() const;
    void unpack(const Eigen::VectorXd& x);

    // group index (0 mean, 1 scale, 2 rotation, 3 opacity, 4 color) of a
    // flat-vector coordinate
    int group_of(int k) const;

    void clamp(const ParamBounds& b);
    // throws std::runtime_error on any invariant violation
    void validate(const ParamBounds& b) const;
};

extern const char* const kGroupNames[5];

// Pinhole camera with rigid world-to-camera transform x_cam = R x_world + t.
// Camera axes: +x right, +y down, +z forward (depth).
struct Camera {
    int id = 0;
    double fx = 1, fy = 1, cx = 0, cy = 0;
    int width = 0, height = 0;
    Eigen::Vector4d q_wc = Eigen::Vector4d(0, 0, 0, 1);  // unit (x, y, z, w)
    Eigen::Vector3d t_wc = Eigen::Vector3d::Zero();
    Image gt;
    std::string image_name;

    Eigen::Matrix3d rotation() const { return quat_to_rotation<double>(q_wc); }
    Eigen::Vector3d center() const { return -rotation().transpose() * t_wc; }
};

// max distance from the centroid of camera centers, the usual spatial scale
// for position learning rates; 1 when degenerate
double scene_extent(const std::vector<Camera>& cams);

Camera look_at_camera(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                      double fx, double fy, int width, int height);

}  // namespace splat
