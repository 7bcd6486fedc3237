// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "splat/optimizer.hpp"

namespace splat {

// Flat key = value configuration; every key can also be set on the command
// line as `--key value`.
struct RunConfig {
    // run
    std::string optimizer = "3dgs2tr";
    int iterations = 2000;
    std::uint64_t seed = 1;
    int workers = 0;
    double lambda = 0.2;

    // paths
    std::string scene;      // initial scene PLY
    std::string cameras;    // camera list file
    std::string out = "out";

    // cadence
    int log_every = 1;
    int eval_every = 250;
    int preview_every = 500;
    int checkpoint_every = 500;
    bool log_wall_time = true;

    // trust region (3dgs2tr and adam-tr)
    double eps_start = 1e-6;
    double eps_end = 1e-8;
    double eta_max = 1.0;
    double eta_max_mean = -1.0;  // negative: inherit eta_max
    double eta_max_scale = -1.0;
    double eta_max_rotation = -1.0;
    double eta_max_opacity = -1.0;
    double eta_max_color = -1.0;

    // 3dgs2tr
    double theta1 = 0.9;
    double theta2 = 0.999;
    int hess_interval = 10;
    int hutch_samples = 1;
    int batch_size = 1;
    int hutch_batch_size = 1;
    double gamma_d = 1e-12;

    // adam
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-15;
    double lr_position = 1.6e-4;
    double lr_position_final = 1.6e-6;
    int lr_position_decay_steps = 30000;
    double lr_scale = 5e-3;
    double lr_rotation = 1e-3;
    double lr_opacity = 5e-2;
    double lr_color = 2.5e-3;

    // renderer
    double z_near = 0.01;
    double background = 0.0;  // gray level composited behind the splats

    // parameter bounds
    double s_min = 1e-6;
    double alpha_min = 1e-4;
    double alpha_max = 0.995;
    double c_min = 1e-6;
    double c_max = 1.5;

    // synthetic dataset generation
    int gt_splats = 64;
    int init_splats = 96;
    int views = 25;
    int image_size = 64;
    double sigma_init = 0.04;
    double init_scale = 0.08;
    double init_opacity = 0.5;
    double camera_radius = 2.2;
    double camera_height = 0.77;
    double focal_factor = 2.0;  // fx = fy = focal_factor * image_size

    // single-Gaussian fitting experiment
    int fit_iterations = 500;
    double fit_perturbation = 0.05;  // sigma as a fraction of scene extent

    // checks
    double check_eps = -1.0;  // tr-bounds: single epsilon (<0: sweep)

    ParamBounds bounds() const {
        return {s_min, alpha_min, alpha_max, c_min, c_max};
    }
    RenderOptions render_options() const;
    ResidualOptions residual_options() const;
    RadiusCaps radius_caps() const;
    OptimizerOptions optimizer_options(double scene_ext) const;
};

// `key = value` lines, `#` comments
RunConfig load_config(const std::string& path);
void apply_overrides(
    RunConfig& cfg,
    const std::vector<std::pair<std::string, std::string>>& overrides);
void set_key(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace splat
