// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "splat/image.hpp"
#include "splat/scene.hpp"

namespace splat {

struct RenderOptions {
    double z_near = 0.01;
    double lowpass = 0.3;       // px^2 added to the 2d covariance diagonal
    double alpha_clamp = 0.99;  // keeps 1/(1-alpha) bounded in the backward
    double alpha_skip = 1.0 / 255.0;
    double t_stop = 1e-4;
    double cutoff_sigma = 3.0;  // per-splat bounding-box rejection
    Eigen::Vector3d background = Eigen::Vector3d::Zero();
    int workers = 0;  // 0 = hardware concurrency; output is identical for any
                      // worker count (per-row partials reduced in row order)
};

// EWA local-affine projection of one splat; branches (culling) are decided on
// primal values so tangents follow the branch the primal takes.
template <typename T>
struct Projection {
    bool culled = true;
    double depth = 0.0;  // camera-space z of the mean, the sort key
    Vec2T<T> mu2d = Vec2T<T>::Zero();
    T c00{}, c01{}, c11{};  // 2d covariance (low-pass floor included)
};

template <typename T>
Projection<T> project(const Vec3T<T>& mu, const Vec3T<T>& scale,
                      const Vec4T<T>& quat, const Camera& cam,
                      const RenderOptions& opt) {
    Projection<T> out;
    const Eigen::Matrix3d w = cam.rotation();
    const Vec3T<T> pc = w * mu + cam.t_wc;
    out.depth = primal(pc[2]);
    if (out.depth <= opt.z_near) return out;
    out.culled = false;

    const T inv_z = 1.0 / pc[2];
    out.mu2d[0] = cam.fx * pc[0] * inv_z + cam.cx;
    out.mu2d[1] = cam.fy * pc[1] * inv_z + cam.cy;

    const Mat3T<T> sigma_cam =
        w * covariance<T>(scale, quat) * w.transpose();
    Eigen::Matrix<T, 2, 3> jaff;
    jaff(0, 0) = cam.fx * inv_z;
    jaff(0, 1) = T(0.0);
    jaff(0, 2) = -cam.fx * pc[0] * inv_z * inv_z;
    jaff(1, 0) = T(0.0);
    jaff(1, 1) = cam.fy * inv_z;
    jaff(1, 2) = -cam.fy * pc[1] * inv_z * inv_z;
    const Mat2T<T> cov2d = jaff * sigma_cam * jaff.transpose();
    out.c00 = cov2d(0, 0) + opt.lowpass;
    out.c01 = cov2d(0, 1);
    out.c11 = cov2d(1, 1) + opt.lowpass;
    return out;
}

struct RenderedImage {
    Image color;
    std::vector<double> t_final;  // per-pixel remaining transmittance
};

// C = sum_i color_i * alpha_bar_i * T_i over the depth-sorted splats, with
// T_i the product of (1 - alpha_bar_j) in front; background fills what is
// left. Throws on non-finite parameters, naming the splat.
RenderedImage rasterize(const Scene& scene, const Camera& cam,
                        const RenderOptions& opt);

// directional derivative of the rendered image along v (forward mode),
// under frozen sort/cull/skip/termination branches
Image rasterize_jvp(const Scene& scene, const Camera& cam,
                    const Eigen::VectorXd& v, const RenderOptions& opt);

// J^T adjoint for the image Jacobian at the current point (reverse mode);
// exactly adjoint to rasterize_jvp
Eigen::VectorXd rasterize_vjp(const Scene& scene, const Camera& cam,
                              const Image& adjoint, const RenderOptions& opt);

}  // namespace splat
