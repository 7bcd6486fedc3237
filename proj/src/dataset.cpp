// SPDX-License-Identifier: Apache-2.0
#include "splat/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "splat/render.hpp"
#include "splat/rng.hpp"
#include "splat/scene_io.hpp"

namespace splat {

namespace {

Eigen::Vector4d random_unit_quat(Rng& rng) {
    Eigen::Vector4d q;
    for (int i = 0; i < 4; ++i) q[i] = rng.normal();
    const double n = q.norm();
    return n > 1e-9 ? Eigen::Vector4d(q / n) : Eigen::Vector4d(0, 0, 0, 1);
}

}  // namespace

SyntheticDataset make_synthetic(const RunConfig& cfg) {
    Rng rng(cfg.seed);
    SyntheticDataset ds;

    ds.gt.splats.resize(cfg.gt_splats);
    for (GaussianPrimitive& p : ds.gt.splats) {
        for (int a = 0; a < 3; ++a) p.mu[a] = rng.uniform(-0.5, 0.5);
        for (int a = 0; a < 3; ++a) p.scale[a] = rng.log_uniform(0.02, 0.2);
        p.quat = random_unit_quat(rng);
        p.opacity = rng.uniform(0.3, 0.9);
        for (int a = 0; a < 3; ++a) p.color[a] = rng.uniform(0.1, 1.0);
    }

    ds.init.splats.resize(cfg.init_splats);
    for (int i = 0; i < cfg.init_splats; ++i) {
        GaussianPrimitive& p = ds.init.splats[i];
        const GaussianPrimitive& src = ds.gt.splats[i % cfg.gt_splats];
        for (int a = 0; a < 3; ++a)
            p.mu[a] = src.mu[a] + cfg.sigma_init * rng.normal();
        p.scale = Eigen::Vector3d::Constant(cfg.init_scale);
        p.quat = Eigen::Vector4d(0, 0, 0, 1);
        p.opacity = cfg.init_opacity;
        p.color = Eigen::Vector3d::Constant(0.5);
    }

    const double focal = cfg.focal_factor * cfg.image_size;
    const RenderOptions ropt = cfg.render_options();
    char name[64];
    for (int k = 0; k < cfg.views; ++k) {
        const double angle = 2.0 * M_PI * k / cfg.views;
        const Eigen::Vector3d eye(cfg.camera_radius * std::cos(angle),
                                  cfg.camera_radius * std::sin(angle),
                                  cfg.camera_height);
        Camera cam = look_at_camera(eye, Eigen::Vector3d::Zero(), focal, focal,
                                    cfg.image_size, cfg.image_size);
        cam.id = k;
        std::snprintf(name, sizeof(name), "images/cam_%04d.png", k);
        cam.image_name = name;
        cam.gt = quantize8(rasterize(ds.gt, cam, ropt).color);
        ds.cameras.push_back(std::move(cam));
    }
    return ds;
}

void write_dataset(const SyntheticDataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "images");
    save_scene(ds.gt, (fs::path(dir) / "scene_gt.ply").string());
    save_scene(ds.init, (fs::path(dir) / "scene_init.ply").string());
    save_cameras(ds.cameras, (fs::path(dir) / "cameras.txt").string());
    for (const Camera& cam : ds.cameras)
        save_png(cam.gt, (fs::path(dir) / cam.image_name).string());
}

void split_views(const std::vector<Camera>& all, std::vector<Camera>& train,
                 std::vector<Camera>& held_out) {
    train.clear();
    held_out.clear();
    for (const Camera& c : all)
        (c.id % 5 == 0 ? held_out : train).push_back(c);
}

}  // namespace splat
