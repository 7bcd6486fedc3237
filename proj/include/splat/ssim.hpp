// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splat/image.hpp"

namespace splat {

// Standard SSIM with an 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2,
// C2 = 0.03^2 on unit dynamic range, whole-sample reflective padding,
// computed per pixel and per channel.
Image ssim_map(const Image& a, const Image& b);

// forward value plus directional derivative with respect to `a` along da
void ssim_jvp(const Image& a, const Image& da, const Image& b, Image& s,
              Image& ds);

// adjoint of ssim_map with respect to `a`: sum_w upstream_w * dSSIM_w/da
Image ssim_vjp(const Image& a, const Image& b, const Image& upstream);

double mean_ssim(const Image& a, const Image& b);

}  // namespace splat
