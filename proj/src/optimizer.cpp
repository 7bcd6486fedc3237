// SPDX-License-Identifier: Apache-2.0
#include "splat/optimizer.hpp"

#include <cmath>
#include <stdexcept>

#include "splat/errors.hpp"

namespace splat {

OptimizerKind optimizer_kind_from_string(const std::string& s) {
    if (s == "3dgs2tr") return OptimizerKind::k3dgs2tr;
    if (s == "adam") return OptimizerKind::kAdam;
    if (s == "adam-tr") return OptimizerKind::kAdamTr;
    throw std::invalid_argument("unknown optimizer '" + s + "'");
}

Eigen::VectorXd view_jacobian_apply(const Scene& scene, const Camera& cam,
                                    const Eigen::VectorXd& v,
                                    const ResidualOptions& ropt,
                                    const RenderOptions& render) {
    const RenderedImage img = rasterize(scene, cam, render);
    const Image di = rasterize_jvp(scene, cam, v, render);
    return residual_jvp(img.color, di, cam.gt, ropt);
}

Eigen::VectorXd view_jacobian_applyT(const Scene& scene, const Camera& cam,
                                     const Eigen::VectorXd& u,
                                     const ResidualOptions& ropt,
                                     const RenderOptions& render) {
    const RenderedImage img = rasterize(scene, cam, render);
    const Image adj = residual_vjp(img.color, cam.gt, u, ropt);
    return rasterize_vjp(scene, cam, adj, render);
}

Eigen::VectorXd stochastic_gradient(const Scene& scene,
                                    const std::vector<Camera>& views,
                                    const std::vector<int>& batch,
                                    const ResidualOptions& ropt,
                                    const RenderOptions& render,
                                    double* batch_loss) {
    if (batch.empty())
        throw std::invalid_argument("stochastic_gradient: empty batch");
    const long m = 6L * views[0].gt.pixels() * static_cast<long>(views.size());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(scene.dim());
    double loss = 0.0;
    for (int vi : batch) {
        const Camera& cam = views.at(vi);
        const RenderedImage img = rasterize(scene, cam, render);
        const Eigen::VectorXd f = residual_vector(img.color, cam.gt, ropt);
        const Image adj = residual_vjp(img.color, cam.gt, f, ropt);
        g += rasterize_vjp(scene, cam, adj, render);
        loss += f.squaredNorm();
        if (!g.allFinite())
            throw NumericError("stochastic_gradient: non-finite gradient from view " +
                               std::to_string(cam.id));
    }
    const double scale = static_cast<double>(views.size()) /
                         (static_cast<double>(m) * batch.size());
    g *= scale;
    if (batch_loss)
        *batch_loss = loss * static_cast<double>(views.size()) /
                      (2.0 * static_cast<double>(m) * batch.size());
    return g;
}

ProbeSource rademacher_probes(Rng& rng, int dim) {
    return [&rng, dim](int) {
        Eigen::VectorXd z(dim);
        for (int k = 0; k < dim; ++k) z[k] = rng.rademacher();
        return z;
    };
}

Eigen::VectorXd hutchinson_diag(const Scene& scene,
                                const std::vector<Camera>& views,
                                const std::vector<int>& batch, int nu,
                                const ProbeSource& probes,
                                const ResidualOptions& ropt,
                                const RenderOptions& render) {
    if (nu < 1) throw std::invalid_argument("hutchinson_diag: nu must be >= 1");
    if (batch.empty())
        throw std::invalid_argument("hutchinson_diag: empty batch");
    const long m = 6L * views[0].gt.pixels() * static_cast<long>(views.size());
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(scene.dim());
    for (int s = 0; s < nu; ++s) {
        const Eigen::VectorXd z = probes(s);
        if (z.size() != scene.dim())
            throw std::invalid_argument("hutchinson_diag: probe length mismatch");
        Eigen::VectorXd w = Eigen::VectorXd::Zero(scene.dim());
        for (int vi : batch) {
            const Camera& cam = views.at(vi);
            const Eigen::VectorXd jz =
                view_jacobian_apply(scene, cam, z, ropt, render);
            w += view_jacobian_applyT(scene, cam, jz, ropt, render);
        }
        if (!w.allFinite())
            throw NumericError("hutchinson_diag: non-finite sample");
        acc += z.cwiseProduct(w);
    }
    const double scale = static_cast<double>(views.size()) /
                         (static_cast<double>(m) * batch.size() * nu);
    return acc * scale;
}

Eigen::VectorXd newton_step(const Eigen::VectorXd& g_hat,
                            const Eigen::VectorXd& d_hat, double gamma) {
    Eigen::VectorXd dx(g_hat.size());
    for (Eigen::Index k = 0; k < g_hat.size(); ++k)
        dx[k] = -g_hat[k] / std::max(d_hat[k], gamma);
    return dx;
}

namespace {

void check_step_finite(const Scene& scene, const Eigen::VectorXd& dx) {
    for (Eigen::Index k = 0; k < dx.size(); ++k)
        if (!std::isfinite(dx[k]))
            throw NumericError(std::string("non-finite update in group ") +
                               kGroupNames[scene.group_of(static_cast<int>(k))]);
}

// shared tail: clip against the trust region, apply, clamp to bounds
void apply_clipped(Scene& scene, const Eigen::VectorXd& dx, double eps,
                   const OptimizerOptions& opt, StepDiagnostics& diag) {
    const Eigen::VectorXd eta = shd_radii(scene, eps, opt.caps);
    const Eigen::VectorXd clipped = clip_step(dx, eta);
    check_step_finite(scene, clipped);
    int n_clipped = 0;
    double max_ratio = 0.0;
    for (Eigen::Index k = 0; k < dx.size(); ++k) {
        if (std::abs(dx[k]) > eta[k]) ++n_clipped;
        max_ratio = std::max(max_ratio, std::abs(clipped[k]) / eta[k]);
    }
    diag.eps = eps;
    diag.clip_frac = static_cast<double>(n_clipped) / dx.size();
    diag.step_post = clipped.norm();
    diag.max_step_over_radius = max_ratio;
    diag.applied_step = clipped;
    scene.unpack(scene.pack() + clipped);
    scene.clamp(opt.bounds);
}

void apply_unclipped(Scene& scene, const Eigen::VectorXd& dx,
                     const OptimizerOptions& opt, StepDiagnostics& diag) {
    check_step_finite(scene, dx);
    diag.step_post = dx.norm();
    diag.applied_step = dx;
    scene.unpack(scene.pack() + dx);
    scene.clamp(opt.bounds);
}

Eigen::VectorXd adam_direction(OptimizerState& state, const Scene& scene,
                               const Eigen::VectorXd& g,
                               const OptimizerOptions& opt) {
    const AdamOptions& a = opt.adam;
    state.adam_m = a.beta1 * state.adam_m + (1.0 - a.beta1) * g;
    state.adam_v =
        a.beta2 * state.adam_v + (1.0 - a.beta2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(a.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(a.beta2, static_cast<double>(state.t));

    // geometric position-rate decay over its own horizon, 3DGS-style
    const double span = std::max(1, a.lr_position_decay_steps);
    const double frac =
        std::min(1.0, static_cast<double>(state.t) / span);
    const double lr_pos = opt.scene_extent * a.lr_position *
                          std::pow(a.lr_position_final / a.lr_position, frac);

    Eigen::VectorXd dx(scene.dim());
    for (int k = 0; k < scene.dim(); ++k) {
        double lr = 0.0;
        switch (scene.group_of(k)) {
            case 0: lr = lr_pos; break;
            case 1: lr = a.lr_scale; break;
            case 2: lr = a.lr_rotation; break;
            case 3: lr = a.lr_opacity; break;
            default: lr = a.lr_color; break;
        }
        const double mhat = state.adam_m[k] / c1;
        const double vhat = state.adam_v[k] / c2;
        dx[k] = -lr * mhat / (std::sqrt(vhat) + a.eps);
    }
    return dx;
}

}  // namespace

StepDiagnostics step_3dgs2tr(OptimizerState& state, Scene& scene,
                             const std::vector<Camera>& views,
                             const OptimizerOptions& opt) {
    StepDiagnostics diag;
    state.t += 1;
    const int m_views = static_cast<int>(views.size());
    const std::vector<int> s1 =
        state.rng.sample_without_replacement(m_views, opt.batch_size);
    const Eigen::VectorXd g = stochastic_gradient(
        scene, views, s1, opt.residual, opt.render, &diag.batch_loss);
    diag.gnorm = g.norm();
    state.g_hat = ema(state.g_hat, g, opt.theta1);

    // refresh the diagonal only on t mod l == 1 (every step when l == 1)
    const bool refresh =
        opt.hess_interval <= 1 || state.t % opt.hess_interval == 1;
    if (refresh) {
        const std::vector<int> s2 =
            state.rng.sample_without_replacement(m_views, opt.hutch_batch_size);
        const Eigen::VectorXd d = hutchinson_diag(
            scene, views, s2, opt.hutch_samples,
            rademacher_probes(state.rng, scene.dim()), opt.residual,
            opt.render);
        state.d_hat = ema(state.d_hat, d, opt.theta2);
    }

    const Eigen::VectorXd dx = newton_step(state.g_hat, state.d_hat, opt.gamma_d);
    diag.step_pre = dx.norm();
    apply_clipped(scene, dx, eps_at(opt.schedule, static_cast<int>(state.t)),
                  opt, diag);
    return diag;
}

StepDiagnostics step_adam(OptimizerState& state, Scene& scene,
                          const std::vector<Camera>& views,
                          const OptimizerOptions& opt) {
    StepDiagnostics diag;
    state.t += 1;
    const std::vector<int> s1 = state.rng.sample_without_replacement(
        static_cast<int>(views.size()), opt.batch_size);
    const Eigen::VectorXd g = stochastic_gradient(
        scene, views, s1, opt.residual, opt.render, &diag.batch_loss);
    diag.gnorm = g.norm();
    const Eigen::VectorXd dx = adam_direction(state, scene, g, opt);
    diag.step_pre = dx.norm();
    apply_unclipped(scene, dx, opt, diag);
    return diag;
}

StepDiagnostics step_adam_tr(OptimizerState& state, Scene& scene,
                             const std::vector<Camera>& views,
                             const OptimizerOptions& opt) {
    StepDiagnostics diag;
    state.t += 1;
    const std::vector<int> s1 = state.rng.sample_without_replacement(
        static_cast<int>(views.size()), opt.batch_size);
    const Eigen::VectorXd g = stochastic_gradient(
        scene, views, s1, opt.residual, opt.render, &diag.batch_loss);
    diag.gnorm = g.norm();
    const Eigen::VectorXd dx = adam_direction(state, scene, g, opt);
    diag.step_pre = dx.norm();
    apply_clipped(scene, dx, eps_at(opt.schedule, static_cast<int>(state.t)),
                  opt, diag);
    return diag;
}

StepDiagnostics optimizer_step(OptimizerState& state, Scene& scene,
                               const std::vector<Camera>& views,
                               const OptimizerOptions& opt) {
    switch (opt.kind) {
        case OptimizerKind::k3dgs2tr: return step_3dgs2tr(state, scene, views, opt);
        case OptimizerKind::kAdam: return step_adam(state, scene, views, opt);
        default: return step_adam_tr(state, scene, views, opt);
    }
}

}  // namespace splat
