// SPDX-License-Identifier: Apache-2.0
#include "splat/residuals.hpp"

#include <cmath>
#include <stdexcept>

#include "splat/ssim.hpp"

namespace splat {

namespace {

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_shapes(const Image& a, const Image& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("residuals: image shape mismatch");
}

// channel-major entry index within one 3*H*W block
inline int block_index(const Image& img, int x, int y, int c) {
    return c * img.pixels() + y * img.width + x;
}

}  // namespace

Eigen::VectorXd residual_vector(const Image& rendered, const Image& gt,
                                const ResidualOptions& opt) {
    check_shapes(rendered, gt);
    const int n = rendered.pixels() * 3;
    const Image ssim = ssim_map(rendered, gt);
    Eigen::VectorXd r(2 * n);
    for (int y = 0; y < rendered.height; ++y)
        for (int x = 0; x < rendered.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const int i = block_index(rendered, x, y, c);
                const double d = rendered.at(x, y, c) - gt.at(x, y, c);
                r[i] = std::sqrt(
                    std::max((1.0 - opt.lambda) * std::abs(d), opt.floor));
                const double dssim =
                    opt.lambda * (1.0 - ssim.at(x, y, c)) / 2.0;
                r[n + i] = std::sqrt(std::max(dssim, opt.floor));
            }
    return r;
}

Eigen::VectorXd residual_jvp(const Image& rendered, const Image& tangent,
                             const Image& gt, const ResidualOptions& opt) {
    check_shapes(rendered, gt);
    check_shapes(rendered, tangent);
    const int n = rendered.pixels() * 3;
    Image ssim, dssim;
    ssim_jvp(rendered, tangent, gt, ssim, dssim);
    Eigen::VectorXd dr(2 * n);
    for (int y = 0; y < rendered.height; ++y)
        for (int x = 0; x < rendered.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const int i = block_index(rendered, x, y, c);
                const double d = rendered.at(x, y, c) - gt.at(x, y, c);
                const double u1 = (1.0 - opt.lambda) * std::abs(d);
                if (u1 > opt.floor) {
                    const double r = std::sqrt(u1);
                    dr[i] = (1.0 - opt.lambda) * sgn(d) *
                            tangent.at(x, y, c) / (2.0 * r);
                } else {
                    dr[i] = 0.0;
                }
                const double u2 =
                    opt.lambda * (1.0 - ssim.at(x, y, c)) / 2.0;
                if (u2 > opt.floor) {
                    const double r = std::sqrt(u2);
                    dr[n + i] =
                        -opt.lambda * dssim.at(x, y, c) / (4.0 * r);
                } else {
                    dr[n + i] = 0.0;
                }
            }
    return dr;
}

Image residual_vjp(const Image& rendered, const Image& gt,
                   const Eigen::VectorXd& u, const ResidualOptions& opt) {
    check_shapes(rendered, gt);
    const int n = rendered.pixels() * 3;
    if (u.size() != 2 * n)
        throw std::invalid_argument("residual_vjp: adjoint length mismatch");
    const Image ssim = ssim_map(rendered, gt);
    Image adj(rendered.width, rendered.height);
    Image ssim_upstream(rendered.width, rendered.height);
    for (int y = 0; y < rendered.height; ++y)
        for (int x = 0; x < rendered.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const int i = block_index(rendered, x, y, c);
                const double d = rendered.at(x, y, c) - gt.at(x, y, c);
                const double u1 = (1.0 - opt.lambda) * std::abs(d);
                if (u1 > opt.floor)
                    adj.at(x, y, c) += u[i] * (1.0 - opt.lambda) * sgn(d) /
                                       (2.0 * std::sqrt(u1));
                const double u2 =
                    opt.lambda * (1.0 - ssim.at(x, y, c)) / 2.0;
                if (u2 > opt.floor)
                    ssim_upstream.at(x, y, c) =
                        u[n + i] * (-opt.lambda / (4.0 * std::sqrt(u2)));
            }
    bool any = false;
    for (double v : ssim_upstream.data)
        if (v != 0.0) {
            any = true;
            break;
        }
    if (any) {
        const Image from_ssim = ssim_vjp(rendered, gt, ssim_upstream);
        for (size_t i = 0; i < adj.data.size(); ++i)
            adj.data[i] += from_ssim.data[i];
    }
    return adj;
}

double objective(const Scene& scene, const std::vector<Camera>& views,
                 const ResidualOptions& ropt, const RenderOptions& render) {
    if (views.empty()) throw std::invalid_argument("objective: no views");
    double sum = 0.0;
    long m = 0;
    for (const Camera& cam : views) {
        const RenderedImage img = rasterize(scene, cam, render);
        const Eigen::VectorXd f = residual_vector(img.color, cam.gt, ropt);
        sum += f.squaredNorm();
        m += f.size();
    }
    return sum / (2.0 * static_cast<double>(m));
}

double psnr(const Image& a, const Image& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("psnr: image shape mismatch");
    double mse = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    if (mse < 1e-10) return 100.0;
    return 10.0 * std::log10(1.0 / mse);
}

}  // namespace splat
