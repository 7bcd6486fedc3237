// SPDX-License-Identifier: Apache-2.0
#include "splat/ssim.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "splat/dual.hpp"

namespace splat {

namespace {

constexpr int kWin = 11;
constexpr int kHalf = kWin / 2;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, kWin>& kernel1d() {
    static const std::array<double, kWin> k = [] {
        std::array<double, kWin> w{};
        double sum = 0.0;
        for (int i = 0; i < kWin; ++i) {
            const double d = i - kHalf;
            w[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
            sum += w[i];
        }
        for (double& v : w) v /= sum;
        return w;
    }();
    return k;
}

// whole-sample reflection: (d c b | a b c d); images here are >= 6 px wide
inline int reflect(int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
}

void check_shapes(const Image& a, const Image& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("ssim: image shape mismatch");
    if (a.width < kHalf + 1 || a.height < kHalf + 1)
        throw std::invalid_argument("ssim: image smaller than the window");
}

template <typename T>
T ssim_from_moments(const T& mu_a, double mu_b, const T& maa, double mbb,
                    const T& mab) {
    const T n1 = 2.0 * mu_a * mu_b + kC1;
    const T d1 = mu_a * mu_a + mu_b * mu_b + kC1;
    const T n2 = 2.0 * (mab - mu_a * mu_b) + kC2;
    const T d2 = (maa - mu_a * mu_a) + (mbb - mu_b * mu_b) + kC2;
    return (n1 * n2) / (d1 * d2);
}

template <typename T, typename GetA>
void ssim_generic(const Image& b, int width, int height, GetA get_a,
                  const std::function<void(int, int, int, const T&)>& put) {
    const auto& k = kernel1d();
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c) {
                T mu_a(0.0), maa(0.0), mab(0.0);
                double mu_b = 0.0, mbb = 0.0;
                for (int dy = -kHalf; dy <= kHalf; ++dy) {
                    const int yy = reflect(y + dy, height);
                    const double wy = k[dy + kHalf];
                    for (int dx = -kHalf; dx <= kHalf; ++dx) {
                        const int xx = reflect(x + dx, width);
                        const double w = wy * k[dx + kHalf];
                        const T av = get_a(xx, yy, c);
                        const double bv = b.at(xx, yy, c);
                        mu_a += w * av;
                        maa += w * av * av;
                        mab += (w * bv) * av;
                        mu_b += w * bv;
                        mbb += w * bv * bv;
                    }
                }
                put(x, y, c, ssim_from_moments<T>(mu_a, mu_b, maa, mbb, mab));
            }
}

}  // namespace

Image ssim_map(const Image& a, const Image& b) {
    check_shapes(a, b);
    Image out(a.width, a.height);
    ssim_generic<double>(
        b, a.width, a.height,
        [&](int x, int y, int c) { return a.at(x, y, c); },
        [&](int x, int y, int c, const double& s) { out.at(x, y, c) = s; });
    return out;
}

void ssim_jvp(const Image& a, const Image& da, const Image& b, Image& s,
              Image& ds) {
    check_shapes(a, b);
    check_shapes(a, da);
    s = Image(a.width, a.height);
    ds = Image(a.width, a.height);
    ssim_generic<Dual>(
        b, a.width, a.height,
        [&](int x, int y, int c) { return Dual(a.at(x, y, c), da.at(x, y, c)); },
        [&](int x, int y, int c, const Dual& v) {
            s.at(x, y, c) = v.v;
            ds.at(x, y, c) = v.d;
        });
}

Image ssim_vjp(const Image& a, const Image& b, const Image& upstream) {
    check_shapes(a, b);
    check_shapes(a, upstream);
    const auto& k = kernel1d();
    Image grad(a.width, a.height);
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const double u = upstream.at(x, y, c);
                if (u == 0.0) continue;
                double mu_a = 0.0, mu_b = 0.0, maa = 0.0, mbb = 0.0, mab = 0.0;
                for (int dy = -kHalf; dy <= kHalf; ++dy) {
                    const int yy = reflect(y + dy, a.height);
                    const double wy = k[dy + kHalf];
                    for (int dx = -kHalf; dx <= kHalf; ++dx) {
                        const int xx = reflect(x + dx, a.width);
                        const double w = wy * k[dx + kHalf];
                        const double av = a.at(xx, yy, c);
                        const double bv = b.at(xx, yy, c);
                        mu_a += w * av;
                        mu_b += w * bv;
                        maa += w * av * av;
                        mbb += w * bv * bv;
                        mab += w * av * bv;
                    }
                }
                const double n1 = 2.0 * mu_a * mu_b + kC1;
                const double d1 = mu_a * mu_a + mu_b * mu_b + kC1;
                const double n2 = 2.0 * (mab - mu_a * mu_b) + kC2;
                const double d2 =
                    (maa - mu_a * mu_a) + (mbb - mu_b * mu_b) + kC2;
                const double p = n1 / d1;
                const double q = n2 / d2;
                // sensitivities to the independent moments (mu_a, maa, mab)
                const double ds_dmu =
                    q * (2.0 * mu_b * d1 - 2.0 * mu_a * n1) / (d1 * d1) +
                    p * (2.0 * mu_a * n2 - 2.0 * mu_b * d2) / (d2 * d2);
                const double ds_dmaa = -p * n2 / (d2 * d2);
                const double ds_dmab = p * 2.0 / d2;
                for (int dy = -kHalf; dy <= kHalf; ++dy) {
                    const int yy = reflect(y + dy, a.height);
                    const double wy = k[dy + kHalf];
                    for (int dx = -kHalf; dx <= kHalf; ++dx) {
                        const int xx = reflect(x + dx, a.width);
                        const double w = wy * k[dx + kHalf];
                        grad.at(xx, yy, c) +=
                            u * w *
                            (ds_dmu + ds_dmaa * 2.0 * a.at(xx, yy, c) +
                             ds_dmab * b.at(xx, yy, c));
                    }
                }
            }
    return grad;
}

double mean_ssim(const Image& a, const Image& b) {
    const Image s = ssim_map(a, b);
    double sum = 0.0;
    for (double v : s.data) sum += v;
    return sum / static_cast<double>(s.data.size());
}

}  // namespace splat
