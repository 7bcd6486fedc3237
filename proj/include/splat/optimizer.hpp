// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "splat/render.hpp"
#include "splat/residuals.hpp"
#include "splat/rng.hpp"
#include "splat/scene.hpp"
#include "splat/trust_region.hpp"

namespace splat {

enum class OptimizerKind { k3dgs2tr, kAdam, kAdamTr };

OptimizerKind optimizer_kind_from_string(const std::string& s);

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;
    // per-group learning rates (original-3DGS conventions); the position
    // rate is multiplied by the scene extent and decays geometrically to
    // lr_position_final over lr_position_decay_steps
    double lr_position = 1.6e-4;
    double lr_position_final = 1.6e-6;
    int lr_position_decay_steps = 30000;
    double lr_scale = 5e-3;
    double lr_rotation = 1e-3;
    double lr_opacity = 5e-2;
    double lr_color = 2.5e-3;
};

struct OptimizerOptions {
    OptimizerKind kind = OptimizerKind::k3dgs2tr;
    double theta1 = 0.9;       // gradient EMA decay
    double theta2 = 0.999;     // diagonal EMA decay
    int hess_interval = 10;    // l: refresh the diagonal when t mod l == 1
    int hutch_samples = 1;     // nu
    int batch_size = 1;        // |S1|
    int hutch_batch_size = 1;  // |S2|
    double gamma_d = 1e-12;    // safeguard for the diagonal inversion
    TrustRegionSchedule schedule;
    RadiusCaps caps;
    AdamOptions adam;
    double scene_extent = 1.0;
    ParamBounds bounds;
    ResidualOptions residual;
    RenderOptions render;
};

// The RNG stream is consumed in a fixed order each step: the gradient batch
// first, then (on refresh steps) the Hutchinson batch followed by each probe
// vector coordinate-ascending. ADAM variants consume only the first draw.
struct OptimizerState {
    Eigen::VectorXd g_hat;
    Eigen::VectorXd d_hat;
    Eigen::VectorXd adam_m;
    Eigen::VectorXd adam_v;
    long t = 0;
    Rng rng;

    OptimizerState(int dim, std::uint64_t seed)
        : g_hat(Eigen::VectorXd::Zero(dim)),
          d_hat(Eigen::VectorXd::Zero(dim)),
          adam_m(Eigen::VectorXd::Zero(dim)),
          adam_v(Eigen::VectorXd::Zero(dim)),
          rng(seed) {}
};

struct StepDiagnostics {
    double batch_loss = 0.0;  // unbiased minibatch estimate of the objective
    double gnorm = 0.0;
    double step_pre = 0.0;    // |dx| before clipping
    double step_post = 0.0;   // |dx| after clipping
    double clip_frac = -1.0;  // fraction of clipped coordinates (-1: no TR)
    double eps = -1.0;        // trust-region epsilon used (-1: no TR)
    double max_step_over_radius = 0.0;
    Eigen::VectorXd applied_step;  // the clipped step actually added to x
};

// residual-space J_i v and J_i^T u for one view, composing the renderer with
// the residual chain
Eigen::VectorXd view_jacobian_apply(const Scene& scene, const Camera& cam,
                                    const Eigen::VectorXd& v,
                                    const ResidualOptions& ropt,
                                    const RenderOptions& render);
Eigen::VectorXd view_jacobian_applyT(const Scene& scene, const Camera& cam,
                                     const Eigen::VectorXd& u,
                                     const ResidualOptions& ropt,
                                     const RenderOptions& render);

// g = (1/m) (M/|batch|) sum_{i in batch} J_i^T f_i, an unbiased estimate of
// the objective gradient; batch_loss (optional) gets the matching unbiased
// loss estimate. Throws naming the view if anything is non-finite.
Eigen::VectorXd stochastic_gradient(const Scene& scene,
                                    const std::vector<Camera>& views,
                                    const std::vector<int>& batch,
                                    const ResidualOptions& ropt,
                                    const RenderOptions& render,
                                    double* batch_loss = nullptr);

using ProbeSource = std::function<Eigen::VectorXd(int sample)>;

ProbeSource rademacher_probes(Rng& rng, int dim);

// Hutchinson estimate of diag((1/m)(M/|batch|) sum_j J_j^T J_j): each sample
// is one JVP through render+residuals followed by one VJP
Eigen::VectorXd hutchinson_diag(const Scene& scene,
                                const std::vector<Camera>& views,
                                const std::vector<int>& batch, int nu,
                                const ProbeSource& probes,
                                const ResidualOptions& ropt,
                                const RenderOptions& render);

inline Eigen::VectorXd ema(const Eigen::VectorXd& prev,
                           const Eigen::VectorXd& next, double theta) {
    return theta * prev + (1.0 - theta) * next;
}

// dx_k = -g_k / max(d_k, gamma); the trust region bounds the large steps the
// safeguard lets through
Eigen::VectorXd newton_step(const Eigen::VectorXd& g_hat,
                            const Eigen::VectorXd& d_hat, double gamma);

StepDiagnostics step_3dgs2tr(OptimizerState& state, Scene& scene,
                             const std::vector<Camera>& views,
                             const OptimizerOptions& opt);
StepDiagnostics step_adam(OptimizerState& state, Scene& scene,
                          const std::vector<Camera>& views,
                          const OptimizerOptions& opt);
StepDiagnostics step_adam_tr(OptimizerState& state, Scene& scene,
                             const std::vector<Camera>& views,
                             const OptimizerOptions& opt);

StepDiagnostics optimizer_step(OptimizerState& state, Scene& scene,
                               const std::vector<Camera>& views,
                               const OptimizerOptions& opt);

}  // namespace splat
