// SPDX-License-Identifier: Apache-2.0
#include "splat/scene_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "splat/image.hpp"

static_assert(std::endian::native == std::endian::little,
              "PLY I/O assumes a little-endian host");

namespace splat {

namespace {

const char* const kPlyProperties[14] = {
    "x",     "y",     "z",     "scale_0", "scale_1", "scale_2", "rot_0",
    "rot_1", "rot_2", "rot_3", "opacity", "red",     "green",   "blue"};

[[noreturn]] void parse_fail(const std::string& path, int line,
                             const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

void save_scene(const Scene& scene, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_scene: cannot open " + path);
    out << "ply\n"
        << "format binary_little_endian 1.0\n"
        << "comment splat-tr v1\n"
        << "element vertex " << scene.size() << "\n";
    for (const char* prop : kPlyProperties)
        out << "property double " << prop << "\n";
    out << "end_header\n";
    for (const GaussianPrimitive& p : scene.splats) {
        double row[14];
        for (int a = 0; a < 3; ++a) row[a] = p.mu[a];
        for (int a = 0; a < 3; ++a) row[3 + a] = p.scale[a];
        for (int a = 0; a < 4; ++a) row[6 + a] = p.quat[a];
        row[10] = p.opacity;
        for (int a = 0; a < 3; ++a) row[11 + a] = p.color[a];
        out.write(reinterpret_cast<const char*>(row), sizeof(row));
    }
    if (!out) throw std::runtime_error("save_scene: write failed for " + path);
}

Scene load_scene(const std::string& path, const ParamBounds& bounds) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_scene: cannot open " + path);

    std::string line;
    int lineno = 0;
    auto next_line = [&]() {
        if (!std::getline(in, line)) parse_fail(path, lineno, "truncated header");
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
    };

    next_line();
    if (line != "ply") parse_fail(path, lineno, "not a PLY file");
    next_line();
    if (line != "format binary_little_endian 1.0")
        parse_fail(path, lineno, "unsupported format: " + line);

    long count = -1;
    int prop_index = 0;
    while (true) {
        next_line();
        if (line == "end_header") break;
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "comment") continue;
        if (tok == "element") {
            std::string name;
            ls >> name >> count;
            if (name != "vertex" || count < 0)
                parse_fail(path, lineno, "expected 'element vertex <count>'");
            continue;
        }
        if (tok == "property") {
            std::string type, name;
            ls >> type >> name;
            if (type != "double")
                parse_fail(path, lineno, "property type must be double");
            if (prop_index >= 14 || name != kPlyProperties[prop_index])
                parse_fail(path, lineno, "unexpected property '" + name + "'");
            ++prop_index;
            continue;
        }
        parse_fail(path, lineno, "unrecognized header line: " + line);
    }
    if (count < 0) parse_fail(path, lineno, "missing element vertex");
    if (prop_index != 14)
        parse_fail(path, lineno, "expected 14 double properties, got " +
                                     std::to_string(prop_index));

    Scene scene;
    scene.splats.resize(count);
    for (long i = 0; i < count; ++i) {
        double row[14];
        in.read(reinterpret_cast<char*>(row), sizeof(row));
        if (!in)
            throw std::runtime_error(path + ": truncated payload at element " +
                                     std::to_string(i));
        GaussianPrimitive& p = scene.splats[i];
        for (int a = 0; a < 3; ++a) p.mu[a] = row[a];
        for (int a = 0; a < 3; ++a) p.scale[a] = row[3 + a];
        for (int a = 0; a < 4; ++a) p.quat[a] = row[6 + a];
        p.opacity = row[10];
        for (int a = 0; a < 3; ++a) p.color[a] = row[11 + a];
    }
    scene.validate(bounds);
    return scene;
}

void save_cameras(const std::vector<Camera>& cams, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_cameras: cannot open " + path);
    out << "# id fx fy cx cy width height qw qx qy qz tx ty tz image\n";
    out.precision(17);
    for (const Camera& c : cams) {
        out << c.id << ' ' << c.fx << ' ' << c.fy << ' ' << c.cx << ' ' << c.cy
            << ' ' << c.width << ' ' << c.height << ' ' << c.q_wc[3] << ' '
            << c.q_wc[0] << ' ' << c.q_wc[1] << ' ' << c.q_wc[2] << ' '
            << c.t_wc[0] << ' ' << c.t_wc[1] << ' ' << c.t_wc[2] << ' '
            << c.image_name << "\n";
    }
}

std::vector<Camera> load_cameras(const std::string& path, bool load_images) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_cameras: cannot open " + path);
    const std::filesystem::path dir = std::filesystem::path(path).parent_path();

    std::vector<Camera> cams;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        Camera c;
        double qw, qx, qy, qz;
        if (!(ls >> c.id)) continue;  // blank line
        if (!(ls >> c.fx >> c.fy >> c.cx >> c.cy >> c.width >> c.height >> qw >>
              qx >> qy >> qz >> c.t_wc[0] >> c.t_wc[1] >> c.t_wc[2] >>
              c.image_name))
            parse_fail(path, lineno, "malformed camera line");
        if (!(c.fx > 0.0) || !(c.fy > 0.0))
            parse_fail(path, lineno, "focal lengths must be positive");
        c.q_wc = Eigen::Vector4d(qx, qy, qz, qw);
        const double n = c.q_wc.norm();
        if (!(n > 1e-12)) parse_fail(path, lineno, "degenerate quaternion");
        c.q_wc /= n;
        if (load_images) {
            c.gt = load_png((dir / c.image_name).string());
            if (c.gt.width != c.width || c.gt.height != c.height)
                parse_fail(path, lineno, "image size mismatch for " +
                                             c.image_name);
        }
        cams.push_back(std::move(c));
    }
    return cams;
}

}  // namespace splat
