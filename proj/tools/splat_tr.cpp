// SPDX-License-Identifier: Apache-2.0
//
// splat-tr: second-order trust-region training for Gaussian-splat scenes.
//
//   splat-tr generate|train|eval|fit-single|check <sub>|radii
//            [--config PATH] [--key value ...]
//
// Exit codes: 0 success, 1 usage/config error, 2 numerical failure,
// 3 check failure.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "splat/checks.hpp"
#include "splat/config.hpp"
#include "splat/dataset.hpp"
#include "splat/errors.hpp"
#include "splat/harness.hpp"
#include "splat/scene_io.hpp"

namespace {

void usage() {
    std::cerr
        << "usage: splat-tr <command> [--config PATH] [--key value ...]\n"
           "commands:\n"
           "  generate        write a synthetic dataset to --out\n"
           "  train           optimize --scene against --cameras\n"
           "  eval            score --scene on the held-out views\n"
           "  fit-single      single-Gaussian perturbation experiment\n"
           "  check <sub>     grad|adjoint|hutch|hellinger|tr-bounds|beta|all\n"
           "  radii           dump per-family trust-region radius histogram\n";
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.empty()) {
        usage();
        return 1;
    }
    const std::string command = args[0];
    size_t i = 1;
    std::string check_sub;
    if (command == "check") {
        if (args.size() < 2 || args[1].rfind("--", 0) == 0) {
            std::cerr << "check: missing subcommand\n";
            return 1;
        }
        check_sub = args[1];
        i = 2;
    }

    splat::RunConfig cfg;
    std::vector<std::pair<std::string, std::string>> overrides;
    for (; i < args.size(); i += 2) {
        if (args[i].rfind("--", 0) != 0 || i + 1 >= args.size()) {
            std::cerr << "expected --key value pairs, got '" << args[i] << "'\n";
            return 1;
        }
        const std::string key = args[i].substr(2);
        if (key == "config")
            cfg = splat::load_config(args[i + 1]);
        else
            overrides.emplace_back(key, args[i + 1]);
    }
    splat::apply_overrides(cfg, overrides);

    if (command == "generate") {
        const splat::SyntheticDataset ds = splat::make_synthetic(cfg);
        splat::write_dataset(ds, cfg.out);
        std::cout << "wrote dataset with " << ds.gt.size() << " gt splats, "
                  << ds.init.size() << " init splats, " << ds.cameras.size()
                  << " views to " << cfg.out << "\n";
        return 0;
    }
    if (command == "train") {
        const splat::TrainResult res = splat::train_run(cfg);
        if (!res.rows.empty()) {
            const splat::MetricsRow& last = res.rows.back();
            std::cout << "finished at iter " << last.iter << " loss "
                      << last.loss << " psnr " << last.psnr << " ssim "
                      << last.ssim << "\n";
        }
        return 0;
    }
    if (command == "eval") {
        if (cfg.scene.empty() || cfg.cameras.empty()) {
            std::cerr << "eval: config needs 'scene' and 'cameras'\n";
            return 1;
        }
        const splat::Scene scene = splat::load_scene(cfg.scene, cfg.bounds());
        std::vector<splat::Camera> train_views, eval_views;
        splat::split_views(splat::load_cameras(cfg.cameras), train_views,
                           eval_views);
        const splat::EvalResult ev =
            splat::evaluate_scene(scene, eval_views, cfg.render_options());
        for (size_t k = 0; k < ev.view_psnr.size(); ++k)
            std::cout << "view " << eval_views[k].id << ": psnr "
                      << ev.view_psnr[k] << " ssim " << ev.view_ssim[k] << "\n";
        std::cout << "mean: psnr " << ev.mean_psnr << " ssim " << ev.mean_ssim
                  << "\n";
        return 0;
    }
    if (command == "fit-single") {
        const splat::FitSingleResult res = splat::fit_single_run(cfg);
        std::cout << "adam reached 40 dB at iter " << res.adam_40db_iter
                  << ", 3dgs2tr at iter " << res.tr_40db_iter << "\n";
        return 0;
    }
    if (command == "check") {
        std::vector<std::string> names;
        if (check_sub == "all")
            names = splat::check_names();
        else
            names.push_back(check_sub);
        bool all_pass = true;
        for (const std::string& name : names) {
            const splat::CheckReport rep = splat::run_check(name, cfg);
            std::printf("check %-10s max_err=%-12.5g tol=%-8.3g %s  (%s)\n",
                        rep.name.c_str(), rep.max_err, rep.tol,
                        rep.pass ? "PASS" : "FAIL", rep.note.c_str());
            all_pass = all_pass && rep.pass;
        }
        return all_pass ? 0 : 3;
    }
    if (command == "radii") {
        if (cfg.scene.empty()) {
            std::cerr << "radii: config needs 'scene'\n";
            return 1;
        }
        const splat::Scene scene = splat::load_scene(cfg.scene, cfg.bounds());
        const double eps = cfg.check_eps > 0.0 ? cfg.check_eps : cfg.eps_start;
        const std::string csv =
            splat::radii_histogram_csv(scene, eps, cfg.radius_caps());
        if (cfg.out.empty() || cfg.out == "out") {
            std::cout << csv;
        } else {
            std::filesystem::create_directories(
                std::filesystem::path(cfg.out).parent_path().string().empty()
                    ? "."
                    : std::filesystem::path(cfg.out).parent_path().string());
            std::ofstream f(cfg.out);
            f << csv;
            std::cout << "wrote " << cfg.out << "\n";
        }
        return 0;
    }
    usage();
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const splat::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
