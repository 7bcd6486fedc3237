// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "splat/image.hpp"
#include "splat/render.hpp"
#include "splat/scene.hpp"

namespace splat {

struct ResidualOptions {
    double lambda = 0.2;  // D-SSIM weight in the pixel loss
    double floor = 1e-12;  // keeps d(sqrt)/du finite at a perfect fit
};

// Residual vector for one image: 6*H*W entries, L1 block then D-SSIM block,
// channel-major within each block (index = c*H*W + y*W + x). Each entry is
// the square root of one floored loss component:
//   L1:     sqrt(max((1-lambda) |C - C_gt|, floor))
//   D-SSIM: sqrt(max(lambda (1 - SSIM)/2,  floor))
Eigen::VectorXd residual_vector(const Image& rendered, const Image& gt,
                                const ResidualOptions& opt);

// directional derivative of the residual vector given the rendered image and
// its tangent; entries at the floor (and |d| ties at 0) carry zero derivative
Eigen::VectorXd residual_jvp(const Image& rendered, const Image& tangent,
                             const Image& gt, const ResidualOptions& opt);

// adjoint: maps a residual-space vector back to an image-space adjoint
Image residual_vjp(const Image& rendered, const Image& gt,
                   const Eigen::VectorXd& u, const ResidualOptions& opt);

// (1/2m) ||stacked residuals||^2 with m = 6*H*W*M over all views
double objective(const Scene& scene, const std::vector<Camera>& views,
                 const ResidualOptions& ropt, const RenderOptions& render);

// 10*log10(1/MSE), capped at 100 dB when MSE < 1e-10
double psnr(const Image& a, const Image& b);

}  // namespace splat
