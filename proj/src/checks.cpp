// SPDX-License-Identifier: Apache-2.0
#include "splat/checks.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "splat/optimizer.hpp"
#include "splat/render.hpp"
#include "splat/residuals.hpp"

namespace splat {

double hellinger_sq_quadrature(const MassGaussian& a, const MassGaussian& b,
                               int grid) {
    auto sigma_max = [](const Eigen::Matrix3d& s) {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(s);
        return std::sqrt(es.eigenvalues().maxCoeff());
    };
    const double half = 6.0 * std::max(sigma_max(a.sigma), sigma_max(b.sigma));
    const Eigen::Vector3d center = 0.5 * (a.mu + b.mu);
    const double h = 2.0 * half / grid;

    const Eigen::Matrix3d inv_a = a.sigma.inverse();
    const Eigen::Matrix3d inv_b = b.sigma.inverse();
    const double norm_a =
        a.mass / (std::pow(2.0 * M_PI, 1.5) * std::sqrt(a.sigma.determinant()));
    const double norm_b =
        b.mass / (std::pow(2.0 * M_PI, 1.5) * std::sqrt(b.sigma.determinant()));

    double sum = 0.0;
    Eigen::Vector3d z;
    for (int i = 0; i < grid; ++i) {
        z[0] = center[0] - half + (i + 0.5) * h;
        for (int j = 0; j < grid; ++j) {
            z[1] = center[1] - half + (j + 0.5) * h;
            for (int k = 0; k < grid; ++k) {
                z[2] = center[2] - half + (k + 0.5) * h;
                const Eigen::Vector3d da = z - a.mu;
                const Eigen::Vector3d db = z - b.mu;
                const double ga = norm_a * std::exp(-0.5 * da.dot(inv_a * da));
                const double gb = norm_b * std::exp(-0.5 * db.dot(inv_b * db));
                const double d = std::sqrt(ga) - std::sqrt(gb);
                sum += d * d;
            }
        }
    }
    return sum * h * h * h;
}

CheckScene make_check_scene(int splats, int image_size, int n_views,
                            std::uint64_t seed) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        Rng rng(seed + attempt);
        Scene target;
        target.splats.resize(splats);
        for (GaussianPrimitive& p : target.splats) {
            for (int a = 0; a < 3; ++a) p.mu[a] = rng.uniform(-0.4, 0.4);
            for (int a = 0; a < 3; ++a) p.scale[a] = rng.log_uniform(0.06, 0.22);
            Eigen::Vector4d q;
            for (int a = 0; a < 4; ++a) q[a] = rng.normal();
            p.quat = q.normalized();
            p.opacity = rng.uniform(0.3, 0.8);
            for (int a = 0; a < 3; ++a) p.color[a] = rng.uniform(0.15, 1.0);
        }
        CheckScene cs;
        cs.scene = target;
        for (GaussianPrimitive& p : cs.scene.splats) {
            for (int a = 0; a < 3; ++a) {
                p.mu[a] += 0.03 * rng.normal();
                p.scale[a] *= std::exp(0.1 * rng.normal());
                p.color[a] =
                    std::min(1.2, std::max(0.1, p.color[a] + 0.1 * rng.normal()));
            }
            p.opacity =
                std::min(0.9, std::max(0.2, p.opacity + 0.05 * rng.normal()));
        }
        const double focal = 2.0 * image_size;
        const RenderOptions ropt;
        bool ok = true;
        for (int k = 0; k < n_views; ++k) {
            const double angle = 2.0 * M_PI * k / n_views + 0.4;
            Camera cam = look_at_camera(
                Eigen::Vector3d(1.9 * std::cos(angle), 1.9 * std::sin(angle),
                                0.7),
                Eigen::Vector3d::Zero(), focal, focal, image_size, image_size);
            cam.id = k;
            cam.gt = rasterize(target, cam, ropt).color;
            // keep well clear of sort-order ties for finite differencing
            std::vector<double> depths;
            for (const GaussianPrimitive& p : cs.scene.splats)
                depths.push_back((cam.rotation() * p.mu + cam.t_wc)[2]);
            std::sort(depths.begin(), depths.end());
            for (size_t i = 1; i < depths.size(); ++i)
                if (depths[i] - depths[i - 1] < 1e-3) ok = false;
            cs.views.push_back(std::move(cam));
        }
        if (ok) return cs;
    }
    throw std::runtime_error("make_check_scene: no tie-free seed found");
}

Eigen::VectorXd fd_gradient(const Scene& scene,
                            const std::vector<Camera>& views,
                            const ResidualOptions& ropt,
                            const RenderOptions& render) {
    Scene work = scene;
    Eigen::VectorXd x = scene.pack();
    Eigen::VectorXd g(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double h = 1e-6 * (1.0 + std::abs(x[k]));
        const double saved = x[k];
        x[k] = saved + h;
        work.unpack(x);
        const double fp = objective(work, views, ropt, render);
        x[k] = saved - h;
        work.unpack(x);
        const double fm = objective(work, views, ropt, render);
        x[k] = saved;
        g[k] = (fp - fm) / (2.0 * h);
    }
    work.unpack(x);
    return g;
}

Eigen::VectorXd exact_gn_diagonal(const Scene& scene,
                                  const std::vector<Camera>& views,
                                  const ResidualOptions& ropt,
                                  const RenderOptions& render) {
    const long m = 6L * views[0].gt.pixels() * static_cast<long>(views.size());
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(scene.dim());
    for (int k = 0; k < scene.dim(); ++k) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(scene.dim());
        e[k] = 1.0;
        for (const Camera& cam : views)
            diag[k] += view_jacobian_apply(scene, cam, e, ropt, render)
                           .squaredNorm();
    }
    return diag / static_cast<double>(m);
}

GaussianPrimitive random_primitive(Rng& rng) {
    GaussianPrimitive p;
    for (int a = 0; a < 3; ++a) p.mu[a] = rng.uniform(-0.5, 0.5);
    for (int a = 0; a < 3; ++a) p.scale[a] = rng.uniform(0.1, 2.0);
    Eigen::Vector4d q;
    for (int a = 0; a < 4; ++a) q[a] = rng.normal();
    p.quat = q.normalized() * rng.uniform(0.6, 1.4);
    p.opacity = rng.uniform(0.05, 0.9);
    for (int a = 0; a < 3; ++a) p.color[a] = rng.uniform(0.1, 1.0);
    return p;
}

namespace {

CheckReport check_grad(const RunConfig& cfg) {
    CheckScene cs = make_check_scene(8, 16, 2, cfg.seed);
    const ResidualOptions ropt = cfg.residual_options();
    const RenderOptions render = cfg.render_options();
    std::vector<int> all;
    for (size_t i = 0; i < cs.views.size(); ++i) all.push_back(static_cast<int>(i));
    const Eigen::VectorXd g =
        stochastic_gradient(cs.scene, cs.views, all, ropt, render);
    const Eigen::VectorXd fd = fd_gradient(cs.scene, cs.views, ropt, render);
    double max_err = 0.0;
    for (Eigen::Index k = 0; k < g.size(); ++k) {
        if (std::abs(g[k]) <= 1e-8) continue;
        const double denom = std::max(std::abs(g[k]), std::abs(fd[k]));
        max_err = std::max(max_err, std::abs(g[k] - fd[k]) / denom);
    }
    return {"grad", max_err, 1e-4, max_err <= 1e-4,
            "VJP gradient vs central differences, 8 splats, 16x16, 2 views"};
}

CheckReport check_adjoint(const RunConfig& cfg) {
    CheckScene cs = make_check_scene(8, 16, 2, cfg.seed);
    const ResidualOptions ropt = cfg.residual_options();
    const RenderOptions render = cfg.render_options();
    Rng rng(cfg.seed + 1000);
    double max_err = 0.0;
    for (const Camera& cam : cs.views) {
        const int n_img = cam.gt.pixels() * 3;
        for (int trial = 0; trial < 10; ++trial) {
            Eigen::VectorXd v(cs.scene.dim());
            for (int k = 0; k < v.size(); ++k) v[k] = rng.normal();

            // renderer-level identity
            Image u_img(cam.width, cam.height);
            for (double& val : u_img.data) val = rng.normal();
            const Image jv = rasterize_jvp(cs.scene, cam, v, render);
            double lhs = 0.0;
            for (int i = 0; i < n_img; ++i) lhs += u_img.data[i] * jv.data[i];
            const double rhs =
                rasterize_vjp(cs.scene, cam, u_img, render).dot(v);
            max_err = std::max(max_err,
                               std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));

            // full residual-chain identity
            Eigen::VectorXd u(2 * n_img);
            for (int i = 0; i < u.size(); ++i) u[i] = rng.normal();
            const double lhs2 =
                u.dot(view_jacobian_apply(cs.scene, cam, v, ropt, render));
            const double rhs2 =
                view_jacobian_applyT(cs.scene, cam, u, ropt, render).dot(v);
            max_err = std::max(max_err,
                               std::abs(lhs2 - rhs2) / (1.0 + std::abs(lhs2)));
        }
    }
    return {"adjoint", max_err, 1e-9, max_err <= 1e-9,
            "<u, Jv> vs <J^T u, v>, renderer and residual chain"};
}

CheckReport check_hutch(const RunConfig& cfg) {
    CheckScene cs = make_check_scene(14, 16, 2, cfg.seed);
    const ResidualOptions ropt = cfg.residual_options();
    const RenderOptions render = cfg.render_options();
    const Eigen::VectorXd exact =
        exact_gn_diagonal(cs.scene, cs.views, ropt, render);

    const int n = cs.scene.dim();
    const int samples = 10000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(n);
    Rng rng(cfg.seed + 2000);
    for (int s = 0; s < samples; ++s) {
        const std::vector<int> batch = rng.sample_without_replacement(
            static_cast<int>(cs.views.size()), 1);
        const Eigen::VectorXd d = hutchinson_diag(
            cs.scene, cs.views, batch, 1, rademacher_probes(rng, n), ropt,
            render);
        sum += d;
        sumsq += d.cwiseProduct(d);
    }
    double max_err = 0.0;
    for (int k = 0; k < n; ++k) {
        const double mean = sum[k] / samples;
        const double var =
            std::max(0.0, sumsq[k] / samples - mean * mean);
        const double stderr3 = 3.0 * std::sqrt(var / samples);
        const double dev = std::abs(mean - exact[k]);
        if (stderr3 == 0.0) {
            if (dev != 0.0) max_err = std::max(max_err, 1e9);
            continue;
        }
        max_err = std::max(max_err, dev / stderr3);
    }
    return {"hutch", max_err, 1.0, max_err <= 1.0,
            "per-coordinate mean of 10^4 Hutchinson samples vs the exact "
            "diagonal, in units of 3 standard errors"};
}

CheckReport check_hellinger(const RunConfig& cfg) {
    Rng rng(cfg.seed + 3000);
    double max_err = 0.0;
    double max_identity = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        auto sample = [&rng]() {
            GaussianPrimitive p;
            for (int a = 0; a < 3; ++a) p.mu[a] = rng.uniform(-0.2, 0.2);
            for (int a = 0; a < 3; ++a) p.scale[a] = rng.uniform(0.3, 1.0);
            Eigen::Vector4d q;
            for (int a = 0; a < 4; ++a) q[a] = rng.normal();
            p.quat = q.normalized();
            p.opacity = rng.uniform(0.1, 0.9);
            return opacity_mass_form(p);
        };
        const MassGaussian a = sample();
        const MassGaussian b = sample();
        const double closed = hellinger_sq(a, b);
        const double half_integral = 0.5 * hellinger_sq_quadrature(a, b);
        max_err = std::max(max_err,
                           std::abs(closed - half_integral) / half_integral);
        max_identity = std::max(max_identity, std::abs(hellinger_sq(a, a)));
    }
    const bool pass = max_err <= 1e-3 && max_identity <= 1e-12;
    std::ostringstream note;
    note << "closed form vs 64^3 midpoint quadrature (identity residual "
         << max_identity << ")";
    return {"hellinger", max_err, 1e-3, pass, note.str()};
}

CheckReport check_tr_bounds(const RunConfig& cfg) {
    Rng rng(cfg.seed + 4000);
    std::vector<double> eps_list;
    if (cfg.check_eps > 0.0)
        eps_list.push_back(cfg.check_eps);
    else
        eps_list = {1e-6, 1e-5, 1e-4};

    double worst_mean = 0.0, worst_other = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const GaussianPrimitive p = random_primitive(rng);
        const double det = p.det_s();
        for (double eps : eps_list) {
            auto h2_opacity_form = [&](const GaussianPrimitive& q) {
                return hellinger_sq(opacity_mass_form(p), opacity_mass_form(q)) /
                       det;
            };
            const Eigen::Vector3d rm = radius_mean(p, eps, 1.0);
            const Eigen::Vector3d rs = radius_scale(p, eps, 1.0);
            const Eigen::Vector4d rq = radius_rotation(p, eps, 1.0);
            const double ro = radius_opacity(p, eps, 1.0);
            const Eigen::Vector3d rc = radius_color(p, eps, 1.0);
            for (int sgn = -1; sgn <= 1; sgn += 2) {
                for (int c = 0; c < 3; ++c) {
                    GaussianPrimitive q = p;
                    q.mu[c] += sgn * rm[c];
                    worst_mean = std::max(worst_mean, h2_opacity_form(q) / eps);
                    q = p;
                    q.scale[c] += sgn * rs[c];
                    worst_other = std::max(worst_other, h2_opacity_form(q) / eps);
                    q = p;
                    q.color[c] += sgn * rc[c];
                    worst_other = std::max(
                        worst_other,
                        hellinger_sq(color_mass_form(p, c), color_mass_form(q, c)) /
                            det / eps);
                }
                for (int c = 0; c < 4; ++c) {
                    GaussianPrimitive q = p;
                    q.quat[c] += sgn * rq[c];
                    worst_other = std::max(worst_other, h2_opacity_form(q) / eps);
                }
                GaussianPrimitive q = p;
                q.opacity += sgn * ro;
                worst_other = std::max(worst_other, h2_opacity_form(q) / eps);
            }
        }
    }
    const bool pass = worst_mean <= 1.0 + 1e-6 && worst_other <= 1.15;
    std::ostringstream note;
    note << "worst normalized H^2 / eps: mean " << worst_mean
         << " (tol 1+1e-6), other families " << worst_other << " (tol 1.15)";
    return {"tr-bounds", worst_other, 1.15, pass, note.str()};
}

CheckReport check_beta(const RunConfig& cfg) {
    Rng rng(cfg.seed + 5000);
    double max_err = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        GaussianPrimitive p;
        for (int a = 0; a < 3; ++a) p.scale[a] = rng.uniform(0.2, 2.0);
        Eigen::Vector4d q;
        for (int a = 0; a < 4; ++a) q[a] = rng.normal();
        p.quat = q.normalized() * rng.uniform(0.5, 2.0);
        for (int axis = 0; axis < 4; ++axis) {
            const double closed = beta_rotation(p, axis);
            const double fd = beta_rotation_fd(p, axis);
            const double err = std::abs(closed - fd) /
                               (std::max(std::abs(closed), std::abs(fd)) + 1e-3);
            max_err = std::max(max_err, err);
        }
    }
    return {"beta", max_err, 1e-3, max_err <= 1e-3,
            "closed-form beta_c vs second difference of T(dq), 200 pairs"};
}

}  // namespace

const std::vector<std::string>& check_names() {
    static const std::vector<std::string> names = {
        "grad", "adjoint", "hutch", "hellinger", "tr-bounds", "beta"};
    return names;
}

CheckReport run_check(const std::string& name, const RunConfig& cfg) {
    if (name == "grad") return check_grad(cfg);
    if (name == "adjoint") return check_adjoint(cfg);
    if (name == "hutch") return check_hutch(cfg);
    if (name == "hellinger") return check_hellinger(cfg);
    if (name == "tr-bounds") return check_tr_bounds(cfg);
    if (name == "beta") return check_beta(cfg);
    throw std::invalid_argument("unknown check '" + name + "'");
}

std::string radii_histogram_csv(const Scene& scene, double eps,
                                const RadiusCaps& caps) {
    const Eigen::VectorXd eta = shd_radii(scene, eps, caps);
    std::ostringstream out;
    out << "family,bucket_lo,bucket_hi,count\n";
    const int buckets = 24;
    const double lo = 1e-9, hi = 10.0;
    const double step = std::log(hi / lo) / buckets;
    const int k = scene.size();
    struct Range {
        const char* name;
        int begin, len;
    };
    const Range ranges[5] = {{"position", 0, 3 * k},
                             {"scale", 3 * k, 3 * k},
                             {"rotation", 6 * k, 4 * k},
                             {"opacity", 10 * k, k},
                             {"color", 11 * k, 3 * k}};
    for (const Range& r : ranges) {
        std::vector<long> hist(buckets, 0);
        for (int i = 0; i < r.len; ++i) {
            const double v = eta[r.begin + i];
            int b = static_cast<int>(std::floor(std::log(v / lo) / step));
            b = std::max(0, std::min(buckets - 1, b));
            ++hist[b];
        }
        for (int b = 0; b < buckets; ++b) {
            if (hist[b] == 0) continue;
            out << r.name << "," << lo * std::exp(step * b) << ","
                << lo * std::exp(step * (b + 1)) << "," << hist[b] << "\n";
        }
    }
    return out.str();
}

}  // namespace splat
