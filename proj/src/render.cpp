// SPDX-License-Identifier: Apache-2.0
#include "splat/render.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "splat/dual.hpp"
#include "splat/errors.hpp"
#include "splat/parallel.hpp"

namespace splat {

namespace {

template <typename T>
struct Fragment {
    int splat = -1;
    double depth = 0.0;
    double px = 0.0, py = 0.0;      // primal center, for bounding-box tests
    double bbox_rx = 0.0, bbox_ry = 0.0;
    Vec2T<T> mu2d = Vec2T<T>::Zero();
    T inv00{}, inv01{}, inv11{};    // inverse 2d covariance
    T alpha{};
    Vec3T<T> color = Vec3T<T>::Zero();
};

void check_finite(const Scene& scene) {
    for (int i = 0; i < scene.size(); ++i) {
        const GaussianPrimitive& p = scene.splats[i];
        bool ok = p.mu.allFinite() && p.scale.allFinite() &&
                  p.quat.allFinite() && p.color.allFinite() &&
                  std::isfinite(p.opacity);
        if (!ok)
            throw NumericError("rasterize: non-finite parameter in splat " +
                               std::to_string(i));
    }
}

// low-pass floor keeps both diagonal entries >= lowpass, so det > 0 always
template <typename T>
void invert2x2(const T& c00, const T& c01, const T& c11, T& i00, T& i01,
               T& i11) {
    const T det = c00 * c11 - c01 * c01;
    i00 = c11 / det;
    i01 = -c01 / det;
    i11 = c00 / det;
}

template <typename T>
bool make_fragment(int splat, const Vec3T<T>& mu, const Vec3T<T>& scale,
                   const Vec4T<T>& quat, const T& alpha, const Vec3T<T>& color,
                   const Camera& cam, const RenderOptions& opt,
                   Fragment<T>& frag) {
    const Projection<T> pr = project<T>(mu, scale, quat, cam, opt);
    if (pr.culled) return false;
    frag.splat = splat;
    frag.depth = pr.depth;
    frag.mu2d = pr.mu2d;
    frag.px = primal(pr.mu2d[0]);
    frag.py = primal(pr.mu2d[1]);
    frag.bbox_rx = opt.cutoff_sigma * std::sqrt(primal(pr.c00));
    frag.bbox_ry = opt.cutoff_sigma * std::sqrt(primal(pr.c11));
    invert2x2(pr.c00, pr.c01, pr.c11, frag.inv00, frag.inv01, frag.inv11);
    frag.alpha = alpha;
    frag.color = color;
    return true;
}

std::vector<Fragment<double>> build_fragments(const Scene& scene,
                                              const Camera& cam,
                                              const RenderOptions& opt) {
    std::vector<Fragment<double>> frags;
    frags.reserve(scene.splats.size());
    for (int i = 0; i < scene.size(); ++i) {
        const GaussianPrimitive& p = scene.splats[i];
        Fragment<double> f;
        if (make_fragment<double>(i, p.mu, p.scale, p.quat, p.opacity, p.color,
                                  cam, opt, f))
            frags.push_back(f);
    }
    std::sort(frags.begin(), frags.end(),
              [](const Fragment<double>& a, const Fragment<double>& b) {
                  return a.depth != b.depth ? a.depth < b.depth
                                            : a.splat < b.splat;
              });
    return frags;
}

std::vector<Fragment<Dual>> build_fragments_dual(const Scene& scene,
                                                 const Camera& cam,
                                                 const Eigen::VectorXd& v,
                                                 const RenderOptions& opt) {
    const int k = scene.size();
    std::vector<Fragment<Dual>> frags;
    frags.reserve(k);
    for (int i = 0; i < k; ++i) {
        const GaussianPrimitive& p = scene.splats[i];
        Vec3T<Dual> mu, scale, color;
        Vec4T<Dual> quat;
        for (int a = 0; a < 3; ++a) {
            mu[a] = Dual(p.mu[a], v[3 * i + a]);
            scale[a] = Dual(p.scale[a], v[scene.scale_offset() + 3 * i + a]);
            color[a] = Dual(p.color[a], v[scene.color_offset() + 3 * i + a]);
        }
        for (int a = 0; a < 4; ++a)
            quat[a] = Dual(p.quat[a], v[scene.quat_offset() + 4 * i + a]);
        const Dual alpha(p.opacity, v[scene.opacity_offset() + i]);
        Fragment<Dual> f;
        if (make_fragment<Dual>(i, mu, scale, quat, alpha, color, cam, opt, f))
            frags.push_back(f);
    }
    std::sort(frags.begin(), frags.end(),
              [](const Fragment<Dual>& a, const Fragment<Dual>& b) {
                  return a.depth != b.depth ? a.depth < b.depth
                                            : a.splat < b.splat;
              });
    return frags;
}

template <typename T>
void blend_pixel(const std::vector<Fragment<T>>& frags, double px, double py,
                 const RenderOptions& opt, Vec3T<T>& out_color, T& out_t) {
    using std::exp;
    T transmittance(1.0);
    Vec3T<T> acc = Vec3T<T>::Zero();
    for (const Fragment<T>& f : frags) {
        if (px < f.px - f.bbox_rx || px > f.px + f.bbox_rx ||
            py < f.py - f.bbox_ry || py > f.py + f.bbox_ry)
            continue;
        const T dx = px - f.mu2d[0];
        const T dy = py - f.mu2d[1];
        const T expo =
            -0.5 * (dx * dx * f.inv00 + dy * dy * f.inv11) - dx * dy * f.inv01;
        T abar = f.alpha * exp(expo);
        if (primal(abar) >= opt.alpha_clamp) abar = T(opt.alpha_clamp);
        if (primal(abar) < opt.alpha_skip) continue;
        const T w = abar * transmittance;
        acc[0] += f.color[0] * w;
        acc[1] += f.color[1] * w;
        acc[2] += f.color[2] * w;
        transmittance = transmittance * (1.0 - abar);
        if (primal(transmittance) < opt.t_stop) break;
    }
    acc[0] += opt.background[0] * transmittance;
    acc[1] += opt.background[1] * transmittance;
    acc[2] += opt.background[2] * transmittance;
    out_color = acc;
    out_t = transmittance;
}

}  // namespace

RenderedImage rasterize(const Scene& scene, const Camera& cam,
                        const RenderOptions& opt) {
    check_finite(scene);
    const auto frags = build_fragments(scene, cam, opt);
    RenderedImage out;
    out.color = Image(cam.width, cam.height);
    out.t_final.assign(static_cast<size_t>(cam.width) * cam.height, 1.0);
    parallel_for(cam.height, opt.workers, [&](int y) {
        const double py = y + 0.5;
        for (int x = 0; x < cam.width; ++x) {
            Vec3T<double> c;
            double t;
            blend_pixel<double>(frags, x + 0.5, py, opt, c, t);
            for (int ch = 0; ch < 3; ++ch) out.color.at(x, y, ch) = c[ch];
            out.t_final[y * cam.width + x] = t;
        }
    });
    return out;
}

Image rasterize_jvp(const Scene& scene, const Camera& cam,
                    const Eigen::VectorXd& v, const RenderOptions& opt) {
    if (v.size() != scene.dim())
        throw std::invalid_argument("rasterize_jvp: direction length mismatch");
    check_finite(scene);
    const auto frags = build_fragments_dual(scene, cam, v, opt);
    Image out(cam.width, cam.height);
    parallel_for(cam.height, opt.workers, [&](int y) {
        const double py = y + 0.5;
        for (int x = 0; x < cam.width; ++x) {
            Vec3T<Dual> c;
            Dual t;
            blend_pixel<Dual>(frags, x + 0.5, py, opt, c, t);
            for (int ch = 0; ch < 3; ++ch) out.at(x, y, ch) = c[ch].d;
        }
    });
    return out;
}

namespace {

// adjoint slots per splat: mu2d (2), inverse 2d covariance (3), alpha, color
constexpr int kAdjPerSplat = 9;

struct Processed {
    int frag = 0;
    double abar = 0.0;
    double gauss = 0.0;
    double t_in = 0.0;  // transmittance in front of this splat
    bool clamped = false;
    double dx = 0.0, dy = 0.0;
};

// backward replay of the blending recurrence for one pixel; adj is the
// per-splat accumulator for the owning row
void pixel_vjp(const std::vector<Fragment<double>>& frags, double px,
               double py, const double* ubar, const RenderOptions& opt,
               std::vector<Processed>& scratch, double* adj) {
    scratch.clear();
    double transmittance = 1.0;
    for (int fi = 0; fi < static_cast<int>(frags.size()); ++fi) {
        const Fragment<double>& f = frags[fi];
        if (px < f.px - f.bbox_rx || px > f.px + f.bbox_rx ||
            py < f.py - f.bbox_ry || py > f.py + f.bbox_ry)
            continue;
        const double dx = px - f.mu2d[0];
        const double dy = py - f.mu2d[1];
        const double expo =
            -0.5 * (dx * dx * f.inv00 + dy * dy * f.inv11) - dx * dy * f.inv01;
        const double gauss = std::exp(expo);
        double abar = f.alpha * gauss;
        const bool clamped = abar >= opt.alpha_clamp;
        if (clamped) abar = opt.alpha_clamp;
        if (abar < opt.alpha_skip) continue;
        scratch.push_back({fi, abar, gauss, transmittance, clamped, dx, dy});
        transmittance = transmittance * (1.0 - abar);
        if (transmittance < opt.t_stop) break;
    }

    // suffix contribution behind the splat being processed, per channel
    double behind[3] = {opt.background[0] * transmittance,
                        opt.background[1] * transmittance,
                        opt.background[2] * transmittance};
    for (int i = static_cast<int>(scratch.size()) - 1; i >= 0; --i) {
        const Processed& pr = scratch[i];
        const Fragment<double>& f = frags[pr.frag];
        double* a = adj + kAdjPerSplat * f.splat;
        double dabar = 0.0;
        for (int ch = 0; ch < 3; ++ch) {
            a[6 + ch] += ubar[ch] * pr.abar * pr.t_in;  // color
            dabar +=
                ubar[ch] * (f.color[ch] * pr.t_in - behind[ch] / (1.0 - pr.abar));
            behind[ch] += f.color[ch] * pr.abar * pr.t_in;
        }
        if (pr.clamped) continue;
        a[5] += pr.gauss * dabar;  // opacity
        const double de = pr.abar * dabar;
        a[2] += de * (-0.5 * pr.dx * pr.dx);  // inv00
        a[3] += de * (-pr.dx * pr.dy);        // inv01
        a[4] += de * (-0.5 * pr.dy * pr.dy);  // inv11
        a[0] += de * (f.inv00 * pr.dx + f.inv01 * pr.dy);  // mu2d
        a[1] += de * (f.inv01 * pr.dx + f.inv11 * pr.dy);
    }
}

}  // namespace

Eigen::VectorXd rasterize_vjp(const Scene& scene, const Camera& cam,
                              const Image& adjoint, const RenderOptions& opt) {
    if (adjoint.width != cam.width || adjoint.height != cam.height)
        throw std::invalid_argument("rasterize_vjp: adjoint shape mismatch");
    check_finite(scene);
    const auto frags = build_fragments(scene, cam, opt);
    const int k = scene.size();

    // per-row partials, reduced in row order afterwards, so the result does
    // not depend on the worker count
    std::vector<double> row_adj(static_cast<size_t>(cam.height) *
                                    kAdjPerSplat * k,
                                0.0);
    parallel_for(cam.height, opt.workers, [&](int y) {
        std::vector<Processed> scratch;
        scratch.reserve(frags.size());
        double* adj = row_adj.data() + static_cast<size_t>(y) * kAdjPerSplat * k;
        const double py = y + 0.5;
        for (int x = 0; x < cam.width; ++x) {
            const double ubar[3] = {adjoint.at(x, y, 0), adjoint.at(x, y, 1),
                                    adjoint.at(x, y, 2)};
            if (ubar[0] == 0.0 && ubar[1] == 0.0 && ubar[2] == 0.0) continue;
            pixel_vjp(frags, x + 0.5, py, ubar, opt, scratch, adj);
        }
    });

    std::vector<double> adj(static_cast<size_t>(kAdjPerSplat) * k, 0.0);
    for (int y = 0; y < cam.height; ++y) {
        const double* r = row_adj.data() + static_cast<size_t>(y) * kAdjPerSplat * k;
        for (size_t i = 0; i < adj.size(); ++i) adj[i] += r[i];
    }

    // chain through per-splat projection geometry; the 5x10 Jacobian comes
    // from the same dual-mode path the JVP uses, so the two stay adjoint
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(scene.dim());
    for (int i = 0; i < k; ++i) {
        const double* a = adj.data() + kAdjPerSplat * i;
        grad[scene.opacity_offset() + i] += a[5];
        for (int ch = 0; ch < 3; ++ch)
            grad[scene.color_offset() + 3 * i + ch] += a[6 + ch];

        bool any = false;
        for (int j = 0; j < 5; ++j) any = any || a[j] != 0.0;
        if (!any) continue;

        const GaussianPrimitive& p = scene.splats[i];
        for (int seed = 0; seed < 10; ++seed) {
            Vec3T<Dual> mu, scale;
            Vec4T<Dual> quat;
            for (int c = 0; c < 3; ++c) {
                mu[c] = Dual(p.mu[c], seed == c ? 1.0 : 0.0);
                scale[c] = Dual(p.scale[c], seed == 3 + c ? 1.0 : 0.0);
            }
            for (int c = 0; c < 4; ++c)
                quat[c] = Dual(p.quat[c], seed == 6 + c ? 1.0 : 0.0);
            const Projection<Dual> pr = project<Dual>(mu, scale, quat, cam, opt);
            if (pr.culled) break;  // no fragment, nothing to chain
            Dual i00, i01, i11;
            invert2x2(pr.c00, pr.c01, pr.c11, i00, i01, i11);
            const double dot = a[0] * pr.mu2d[0].d + a[1] * pr.mu2d[1].d +
                               a[2] * i00.d + a[3] * i01.d + a[4] * i11.d;
            const int offset =
                seed < 3 ? 3 * i + seed
                         : (seed < 6 ? scene.scale_offset() + 3 * i + (seed - 3)
                                     : scene.quat_offset() + 4 * i + (seed - 6));
            grad[offset] += dot;
        }
    }
    return grad;
}

}  // namespace splat
