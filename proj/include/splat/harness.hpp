// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "splat/config.hpp"
#include "splat/scene.hpp"

namespace splat {

struct MetricsRow {
    long iter = 0;
    double loss = 0.0;
    double psnr = -1.0;  // -1 outside eval iterations
    double ssim = -1.0;
    double gnorm = 0.0;
    double step_pre = 0.0;
    double step_post = 0.0;
    double clip_frac = -1.0;  // -1 for the unconstrained baseline
    double eps = -1.0;
    double seconds = 0.0;
};

extern const char* const kMetricsHeader;

std::string format_metrics_row(const MetricsRow& row);

struct EvalResult {
    std::vector<double> view_psnr;
    std::vector<double> view_ssim;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
};

// renders each view, snaps to the 8-bit grid the PNG pipeline stores, and
// scores against the stored ground truth; errors on an empty view list
EvalResult evaluate_scene(const Scene& scene, const std::vector<Camera>& views,
                          const RenderOptions& ropt);

struct TrainResult {
    std::vector<MetricsRow> rows;
    Scene final_scene;
};

// Full training loop: loads the dataset named by cfg.scene / cfg.cameras,
// holds out every fifth camera, runs cfg.iterations steps of the configured
// optimizer, writes metrics.csv, checkpoints and previews under cfg.out.
// cfg.iterations == 0 evaluates the initial scene and writes a single row.
TrainResult train_run(const RunConfig& cfg);

struct FitSingleResult {
    // per-method trajectories of the per-parameter normalized Hellinger
    // motion (max over coordinates) and the per-family joint values
    std::vector<double> tr_h2_max, adam_h2_max;
    std::vector<double> tr_psnr, adam_psnr;
    int tr_40db_iter = -1;  // first iteration reaching 40 dB (-1: never)
    int adam_40db_iter = -1;
    std::vector<double> tr_eps;  // epsilon schedule value per step
};

// Single-Gaussian perturbation experiment: one ground-truth splat, identical
// perturbed initialization, optimized with plain ADAM and with 3dgs2tr; logs
// per-step normalized Hellinger motion and exports frame strips.
FitSingleResult fit_single_run(const RunConfig& cfg);

}  // namespace splat
