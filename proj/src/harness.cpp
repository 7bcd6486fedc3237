// SPDX-License-Identifier: Apache-2.0
#include "splat/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "splat/dataset.hpp"
#include "splat/errors.hpp"
#include "splat/optimizer.hpp"
#include "splat/render.hpp"
#include "splat/residuals.hpp"
#include "splat/scene_io.hpp"
#include "splat/ssim.hpp"
#include "splat/trust_region.hpp"

namespace splat {

const char* const kMetricsHeader =
    "iter,loss,psnr,ssim,gnorm,step_pre,step_post,clip_frac,eps,seconds";

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string format_metrics_row(const MetricsRow& r) {
    char sec[32];
    std::snprintf(sec, sizeof(sec), "%.3f", r.seconds);
    return std::to_string(r.iter) + "," + fmt(r.loss) + "," + fmt(r.psnr) +
           "," + fmt(r.ssim) + "," + fmt(r.gnorm) + "," + fmt(r.step_pre) +
           "," + fmt(r.step_post) + "," + fmt(r.clip_frac) + "," + fmt(r.eps) +
           "," + sec;
}

EvalResult evaluate_scene(const Scene& scene, const std::vector<Camera>& views,
                          const RenderOptions& ropt) {
    if (views.empty())
        throw std::invalid_argument("evaluate_scene: empty view list");
    EvalResult res;
    for (const Camera& cam : views) {
        const Image rendered = quantize8(rasterize(scene, cam, ropt).color);
        res.view_psnr.push_back(psnr(rendered, cam.gt));
        res.view_ssim.push_back(mean_ssim(rendered, cam.gt));
    }
    for (double v : res.view_psnr) res.mean_psnr += v;
    for (double v : res.view_ssim) res.mean_ssim += v;
    res.mean_psnr /= static_cast<double>(views.size());
    res.mean_ssim /= static_cast<double>(views.size());
    return res;
}

namespace {

struct RunDirs {
    std::filesystem::path out;
    explicit RunDirs(const std::string& dir) : out(dir) {
        std::filesystem::create_directories(out);
    }
    std::string checkpoint(long iter) const {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "checkpoint_%06ld.ply", iter);
        return (out / buf).string();
    }
    std::string preview(long iter) const {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "preview_%06ld.png", iter);
        return (out / buf).string();
    }
};

}  // namespace

TrainResult train_run(const RunConfig& cfg) {
    if (cfg.scene.empty() || cfg.cameras.empty())
        throw std::invalid_argument("train: config needs 'scene' and 'cameras'");
    Scene scene = load_scene(cfg.scene, cfg.bounds());
    const std::vector<Camera> all = load_cameras(cfg.cameras);
    std::vector<Camera> train_views, eval_views;
    split_views(all, train_views, eval_views);
    if (train_views.empty())
        throw std::invalid_argument("train: no training views after the split");

    const OptimizerOptions opt =
        cfg.optimizer_options(scene_extent(train_views));
    const RenderOptions ropt = cfg.render_options();
    OptimizerState state(scene.dim(), cfg.seed);

    RunDirs dirs(cfg.out);
    std::ofstream csv(dirs.out / "metrics.csv");
    if (!csv) throw std::runtime_error("train: cannot write metrics.csv");
    csv << kMetricsHeader << "\n";

    TrainResult result;
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&]() {
        if (!cfg.log_wall_time) return 0.0;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t0)
            .count();
    };
    auto emit = [&](const MetricsRow& row) {
        csv << format_metrics_row(row) << "\n";
        result.rows.push_back(row);
    };

    if (cfg.iterations <= 0) {
        MetricsRow row;
        row.iter = 0;
        row.loss = objective(scene, train_views, cfg.residual_options(), ropt);
        if (!eval_views.empty()) {
            const EvalResult ev = evaluate_scene(scene, eval_views, ropt);
            row.psnr = ev.mean_psnr;
            row.ssim = ev.mean_ssim;
        }
        row.seconds = elapsed();
        emit(row);
        result.final_scene = scene;
        save_scene(scene, (dirs.out / "checkpoint_final.ply").string());
        return result;
    }

    for (long t = 1; t <= cfg.iterations; ++t) {
        const StepDiagnostics diag = optimizer_step(state, scene, train_views, opt);
        if (!std::isfinite(diag.batch_loss))
            throw NumericError("train: non-finite loss at iteration " +
                               std::to_string(t));
        const bool last = t == cfg.iterations;
        const bool log_row = cfg.log_every > 0 && (t % cfg.log_every == 0);
        const bool eval_row =
            !eval_views.empty() &&
            ((cfg.eval_every > 0 && t % cfg.eval_every == 0) || last);
        if (log_row || eval_row || last) {
            MetricsRow row;
            row.iter = t;
            row.loss = diag.batch_loss;
            row.gnorm = diag.gnorm;
            row.step_pre = diag.step_pre;
            row.step_post = diag.step_post;
            row.clip_frac = diag.clip_frac;
            row.eps = diag.eps;
            if (eval_row) {
                const EvalResult ev = evaluate_scene(scene, eval_views, ropt);
                row.psnr = ev.mean_psnr;
                row.ssim = ev.mean_ssim;
            }
            row.seconds = elapsed();
            emit(row);
        }
        if (cfg.checkpoint_every > 0 && t % cfg.checkpoint_every == 0)
            save_scene(scene, dirs.checkpoint(t));
        if (cfg.preview_every > 0 && t % cfg.preview_every == 0) {
            const Camera& cam = eval_views.empty() ? train_views[0] : eval_views[0];
            save_png(rasterize(scene, cam, ropt).color, dirs.preview(t));
        }
    }
    save_scene(scene, (dirs.out / "checkpoint_final.ply").string());
    result.final_scene = scene;
    return result;
}

namespace {

// per-parameter and per-family normalized Hellinger motion of one step on a
// single-splat scene
struct StepMotion {
    double max_param = 0.0;
    double family[5] = {0, 0, 0, 0, 0};
};

double coord_h2(const GaussianPrimitive& before, const GaussianPrimitive& after,
                int group, int channel) {
    const double det = before.det_s();
    if (group == 4)
        return hellinger_sq(color_mass_form(before, channel),
                            color_mass_form(after, channel)) /
               det;
    return hellinger_sq(opacity_mass_form(before), opacity_mass_form(after)) /
           det;
}

StepMotion step_motion(const GaussianPrimitive& before,
                       const Eigen::VectorXd& delta) {
    // single-splat layout: mu 0..2 | scale 3..5 | quat 6..9 | alpha 10 |
    // color 11..13
    StepMotion m;
    auto consider = [&](int group, int channel, auto apply) {
        GaussianPrimitive p = before;
        apply(p);
        const double h2 = coord_h2(before, p, group, channel);
        m.max_param = std::max(m.max_param, h2);
    };
    for (int c = 0; c < 3; ++c)
        consider(0, 0, [&](GaussianPrimitive& p) { p.mu[c] += delta[c]; });
    for (int c = 0; c < 3; ++c)
        consider(1, 0,
                 [&](GaussianPrimitive& p) { p.scale[c] += delta[3 + c]; });
    for (int c = 0; c < 4; ++c)
        consider(2, 0,
                 [&](GaussianPrimitive& p) { p.quat[c] += delta[6 + c]; });
    consider(3, 0, [&](GaussianPrimitive& p) { p.opacity += delta[10]; });
    for (int c = 0; c < 3; ++c)
        consider(4, c,
                 [&](GaussianPrimitive& p) { p.color[c] += delta[11 + c]; });

    GaussianPrimitive f = before;
    f.mu += delta.segment<3>(0);
    m.family[0] = coord_h2(before, f, 0, 0);
    f = before;
    f.scale += delta.segment<3>(3);
    m.family[1] = coord_h2(before, f, 1, 0);
    f = before;
    f.quat += delta.segment<4>(6);
    m.family[2] = coord_h2(before, f, 2, 0);
    f = before;
    f.opacity += delta[10];
    m.family[3] = coord_h2(before, f, 3, 0);
    f = before;
    f.color += delta.segment<3>(11);
    double worst = 0.0;
    for (int c = 0; c < 3; ++c)
        worst = std::max(worst, coord_h2(before, f, 4, c));
    m.family[4] = worst;
    return m;
}

Image concat_strip(const std::vector<Image>& frames) {
    if (frames.empty()) return Image();
    const int w = frames[0].width, h = frames[0].height;
    Image strip(static_cast<int>(frames.size()) * w, h);
    for (size_t i = 0; i < frames.size(); ++i)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c)
                    strip.at(static_cast<int>(i) * w + x, y, c) =
                        frames[i].at(x, y, c);
    return strip;
}

}  // namespace

FitSingleResult fit_single_run(const RunConfig& cfg) {
    // fixed single-splat experiment geometry; iterations and perturbation
    // size come from the config
    Scene gt;
    gt.splats.resize(1);
    GaussianPrimitive& g = gt.splats[0];
    g.mu = Eigen::Vector3d(0.0, 0.0, 0.0);
    g.scale = Eigen::Vector3d(0.16, 0.07, 0.11);
    g.quat = Eigen::Vector4d(0.2, 0.1, 0.3, 0.95).normalized();
    g.opacity = 0.78;
    g.color = Eigen::Vector3d(0.9, 0.55, 0.25);

    const int img = 64;
    const double focal = 1.0 * img;
    std::vector<Camera> views;
    const RenderOptions ropt = cfg.render_options();
    for (int k = 0; k < 3; ++k) {
        const double angle = 2.0 * M_PI * k / 3.0;
        Camera cam = look_at_camera(
            Eigen::Vector3d(1.35 * std::cos(angle), 1.35 * std::sin(angle),
                            0.45),
            Eigen::Vector3d::Zero(), focal, focal, img, img);
        cam.id = k;
        // in-memory float targets: the unperturbed splat is an exact fixed
        // point of both optimizers
        cam.gt = rasterize(gt, cam, ropt).color;
        views.push_back(std::move(cam));
    }
    const double extent = scene_extent(views);

    Rng rng(cfg.seed);
    Scene init = gt;
    // displacement of length sigma = fit_perturbation * extent in a seeded
    // random direction
    Eigen::Vector3d dir;
    for (int a = 0; a < 3; ++a) dir[a] = rng.normal();
    if (dir.norm() < 1e-9) dir = Eigen::Vector3d(1, 0, 0);
    init.splats[0].mu += cfg.fit_perturbation * extent * dir.normalized();

    RunDirs dirs(cfg.out);
    std::ofstream csv(dirs.out / "fit_single.csv");
    if (!csv) throw std::runtime_error("fit-single: cannot write fit_single.csv");
    csv << "method,iter,loss,psnr,h2_max,h2_mean,h2_scale,h2_rotation,"
           "h2_opacity,h2_color,eps\n";

    FitSingleResult result;
    const int frame_every = std::max(1, cfg.fit_iterations / 6);

    for (const char* method_name : {"adam", "3dgs2tr"}) {
        const std::string method = method_name;
        const bool is_tr = method == "3dgs2tr";
        RunConfig mc = cfg;
        mc.optimizer = method;
        mc.iterations = cfg.fit_iterations;
        const OptimizerOptions opt = mc.optimizer_options(extent);
        Scene scene = init;
        OptimizerState state(scene.dim(), cfg.seed);
        std::vector<Image> frames;
        frames.push_back(quantize8(rasterize(gt, views[0], ropt).color));
        frames.push_back(quantize8(rasterize(scene, views[0], ropt).color));

        auto& h2_log = is_tr ? result.tr_h2_max : result.adam_h2_max;
        auto& psnr_log = is_tr ? result.tr_psnr : result.adam_psnr;
        int& hit40 = is_tr ? result.tr_40db_iter : result.adam_40db_iter;

        for (int t = 1; t <= cfg.fit_iterations; ++t) {
            const GaussianPrimitive before = scene.splats[0];
            const Eigen::VectorXd x0 = scene.pack();
            const StepDiagnostics diag =
                optimizer_step(state, scene, views, opt);
            const Eigen::VectorXd delta = scene.pack() - x0;
            const StepMotion motion = step_motion(before, delta);
            h2_log.push_back(motion.max_param);
            if (is_tr) result.tr_eps.push_back(diag.eps);

            double mean_psnr = 0.0;
            for (const Camera& cam : views)
                mean_psnr += psnr(rasterize(scene, cam, ropt).color, cam.gt);
            mean_psnr /= static_cast<double>(views.size());
            psnr_log.push_back(mean_psnr);
            if (hit40 < 0 && mean_psnr >= 40.0) hit40 = t;

            csv << method << "," << t << "," << fmt(diag.batch_loss) << ","
                << fmt(mean_psnr) << "," << fmt(motion.max_param) << ","
                << fmt(motion.family[0]) << "," << fmt(motion.family[1]) << ","
                << fmt(motion.family[2]) << "," << fmt(motion.family[3]) << ","
                << fmt(motion.family[4]) << "," << fmt(diag.eps) << "\n";
            if (t % frame_every == 0)
                frames.push_back(
                    quantize8(rasterize(scene, views[0], ropt).color));
        }
        save_png(concat_strip(frames),
                 (dirs.out / ("fit_strip_" + method + ".png")).string());
    }
    return result;
}

}  // namespace splat
