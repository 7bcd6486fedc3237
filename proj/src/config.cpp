// SPDX-License-Identifier: Apache-2.0
#include "splat/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace splat {

RenderOptions RunConfig::render_options() const {
    RenderOptions r;
    r.z_near = z_near;
    r.background = Eigen::Vector3d::Constant(background);
    r.workers = workers;
    return r;
}

ResidualOptions RunConfig::residual_options() const {
    ResidualOptions r;
    r.lambda = lambda;
    return r;
}

RadiusCaps RunConfig::radius_caps() const {
    auto pick = [&](double v) { return v >= 0.0 ? v : eta_max; };
    RadiusCaps c;
    c.mean = pick(eta_max_mean);
    c.scale = pick(eta_max_scale);
    c.rotation = pick(eta_max_rotation);
    c.opacity = pick(eta_max_opacity);
    c.color = pick(eta_max_color);
    return c;
}

OptimizerOptions RunConfig::optimizer_options(double scene_ext) const {
    OptimizerOptions o;
    o.kind = optimizer_kind_from_string(optimizer);
    o.theta1 = theta1;
    o.theta2 = theta2;
    o.hess_interval = hess_interval;
    o.hutch_samples = hutch_samples;
    o.batch_size = batch_size;
    o.hutch_batch_size = hutch_batch_size;
    o.gamma_d = gamma_d;
    o.schedule = {eps_start, eps_end, iterations};
    o.caps = radius_caps();
    o.adam.beta1 = adam_beta1;
    o.adam.beta2 = adam_beta2;
    o.adam.eps = adam_eps;
    o.adam.lr_position = lr_position;
    o.adam.lr_position_final = lr_position_final;
    o.adam.lr_position_decay_steps = lr_position_decay_steps;
    o.adam.lr_scale = lr_scale;
    o.adam.lr_rotation = lr_rotation;
    o.adam.lr_opacity = lr_opacity;
    o.adam.lr_color = lr_color;
    o.scene_extent = scene_ext;
    o.bounds = bounds();
    o.residual = residual_options();
    o.render = render_options();
    return o;
}

namespace {

struct Binder {
    std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T>
T parse_value(const std::string& s);

template <>
double parse_value<double>(const std::string& s) {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad number: " + s);
    return v;
}
template <>
int parse_value<int>(const std::string& s) {
    size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad integer: " + s);
    return v;
}
template <>
std::uint64_t parse_value<std::uint64_t>(const std::string& s) {
    size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad integer: " + s);
    return v;
}
template <>
bool parse_value<bool>(const std::string& s) {
    if (s == "1" || s == "true" || s == "on") return true;
    if (s == "0" || s == "false" || s == "off") return false;
    throw std::invalid_argument("bad boolean: " + s);
}
template <>
std::string parse_value<std::string>(const std::string& s) {
    return s;
}

const std::map<std::string, Binder>& registry() {
    static const std::map<std::string, Binder> reg = [] {
        std::map<std::string, Binder> r;
        auto add = [&r](const std::string& name, auto member) {
            r[name] = Binder{[member](RunConfig& c, const std::string& v) {
                c.*member = parse_value<
                    std::decay_t<decltype(std::declval<RunConfig>().*member)>>(
                    v);
            }};
        };
        add("optimizer", &RunConfig::optimizer);
        add("iterations", &RunConfig::iterations);
        add("seed", &RunConfig::seed);
        add("workers", &RunConfig::workers);
        add("lambda", &RunConfig::lambda);
        add("scene", &RunConfig::scene);
        add("cameras", &RunConfig::cameras);
        add("out", &RunConfig::out);
        add("log_every", &RunConfig::log_every);
        add("eval_every", &RunConfig::eval_every);
        add("preview_every", &RunConfig::preview_every);
        add("checkpoint_every", &RunConfig::checkpoint_every);
        add("log_wall_time", &RunConfig::log_wall_time);
        add("eps_start", &RunConfig::eps_start);
        add("eps_end", &RunConfig::eps_end);
        add("eta_max", &RunConfig::eta_max);
        add("eta_max_mean", &RunConfig::eta_max_mean);
        add("eta_max_scale", &RunConfig::eta_max_scale);
        add("eta_max_rotation", &RunConfig::eta_max_rotation);
        add("eta_max_opacity", &RunConfig::eta_max_opacity);
        add("eta_max_color", &RunConfig::eta_max_color);
        add("theta1", &RunConfig::theta1);
        add("theta2", &RunConfig::theta2);
        add("hess_interval", &RunConfig::hess_interval);
        add("hutch_samples", &RunConfig::hutch_samples);
        add("batch_size", &RunConfig::batch_size);
        add("hutch_batch_size", &RunConfig::hutch_batch_size);
        add("gamma_d", &RunConfig::gamma_d);
        add("adam_beta1", &RunConfig::adam_beta1);
        add("adam_beta2", &RunConfig::adam_beta2);
        add("adam_eps", &RunConfig::adam_eps);
        add("lr_position", &RunConfig::lr_position);
        add("lr_position_final", &RunConfig::lr_position_final);
        add("lr_position_decay_steps", &RunConfig::lr_position_decay_steps);
        add("lr_scale", &RunConfig::lr_scale);
        add("lr_rotation", &RunConfig::lr_rotation);
        add("lr_opacity", &RunConfig::lr_opacity);
        add("lr_color", &RunConfig::lr_color);
        add("z_near", &RunConfig::z_near);
        add("background", &RunConfig::background);
        add("s_min", &RunConfig::s_min);
        add("alpha_min", &RunConfig::alpha_min);
        add("alpha_max", &RunConfig::alpha_max);
        add("c_min", &RunConfig::c_min);
        add("c_max", &RunConfig::c_max);
        add("gt_splats", &RunConfig::gt_splats);
        add("init_splats", &RunConfig::init_splats);
        add("views", &RunConfig::views);
        add("image_size", &RunConfig::image_size);
        add("sigma_init", &RunConfig::sigma_init);
        add("init_scale", &RunConfig::init_scale);
        add("init_opacity", &RunConfig::init_opacity);
        add("camera_radius", &RunConfig::camera_radius);
        add("camera_height", &RunConfig::camera_height);
        add("focal_factor", &RunConfig::focal_factor);
        add("fit_iterations", &RunConfig::fit_iterations);
        add("fit_perturbation", &RunConfig::fit_perturbation);
        add("check_eps", &RunConfig::check_eps);
        return r;
    }();
    return reg;
}

}  // namespace

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto it = registry().find(key);
    if (it == registry().end())
        throw std::invalid_argument("unknown config key '" + key + "'");
    it->second.set(cfg, value);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::istringstream check(line);
            std::string tok;
            if (check >> tok)
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": expected 'key = value'");
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string()
                                          : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            set_key(cfg, key, value);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": " + e.what());
        }
    }
    return cfg;
}

void apply_overrides(
    RunConfig& cfg,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
    for (const auto& [key, value] : overrides) set_key(cfg, key, value);
}

}  // namespace splat
