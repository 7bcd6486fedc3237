// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "splat/rng.hpp"
#include "splat/scene.hpp"
#include "splat/scene_io.hpp"

namespace fs = std::filesystem;

namespace {

splat::Scene random_scene(int k, std::uint64_t seed) {
    splat::Rng rng(seed);
    splat::Scene s;
    s.splats.resize(k);
    for (auto& p : s.splats) {
        for (int a = 0; a < 3; ++a) p.mu[a] = rng.uniform(-1, 1);
        for (int a = 0; a < 3; ++a) p.scale[a] = rng.uniform(0.05, 0.5);
        for (int a = 0; a < 4; ++a) p.quat[a] = rng.normal();
        p.quat.normalize();
        p.opacity = rng.uniform(0.1, 0.9);
        for (int a = 0; a < 3; ++a) p.color[a] = rng.uniform(0.1, 1.0);
    }
    return s;
}

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "splat_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("pack/unpack is a bitwise bijection with group-major offsets") {
    splat::Scene s = random_scene(7, 21);
    const int k = s.size();
    CHECK(s.dim() == 14 * k);
    const Eigen::VectorXd x = s.pack();

    CHECK(x[3 * 2 + 1] == s.splats[2].mu[1]);
    CHECK(x[s.scale_offset() + 3 * 4 + 2] == s.splats[4].scale[2]);
    CHECK(x[s.quat_offset() + 4 * 6 + 3] == s.splats[6].quat[3]);
    CHECK(x[s.opacity_offset() + 5] == s.splats[5].opacity);
    CHECK(x[s.color_offset() + 3 * 1] == s.splats[1].color[0]);

    splat::Scene s2 = s;
    s2.unpack(x);
    const Eigen::VectorXd x2 = s2.pack();
    for (int i = 0; i < x.size(); ++i) CHECK(x[i] == x2[i]);

    CHECK(s.group_of(0) == 0);
    CHECK(s.group_of(s.scale_offset()) == 1);
    CHECK(s.group_of(s.quat_offset()) == 2);
    CHECK(s.group_of(s.opacity_offset()) == 3);
    CHECK(s.group_of(s.color_offset()) == 4);
}

TEST_CASE("ply round trip is bitwise") {
    const splat::Scene s = random_scene(3, 33);
    const fs::path p = temp_file("roundtrip.ply");
    splat::save_scene(s, p.string());
    const splat::Scene loaded = splat::load_scene(p.string());
    const Eigen::VectorXd a = s.pack(), b = loaded.pack();
    REQUIRE(a.size() == b.size());
    for (int i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("ply rejects invariant violations") {
    splat::Scene s = random_scene(2, 5);
    s.splats[1].opacity = 1.5;
    const fs::path p = temp_file("bad_alpha.ply");
    splat::save_scene(s, p.string());
    CHECK_THROWS_WITH_AS(splat::load_scene(p.string()),
                         doctest::Contains("opacity"), std::runtime_error);
}

TEST_CASE("empty scene file is valid") {
    const splat::Scene s;
    const fs::path p = temp_file("empty.ply");
    splat::save_scene(s, p.string());
    CHECK(splat::load_scene(p.string()).size() == 0);
}

TEST_CASE("malformed ply headers give descriptive errors") {
    const fs::path p = temp_file("malformed.ply");
    {
        std::ofstream out(p);
        out << "ply\nformat binary_little_endian 1.0\nelement vertex 1\n"
               "property double x\nend_header\n";
    }
    CHECK_THROWS_WITH_AS(splat::load_scene(p.string()),
                         doctest::Contains("14"), std::runtime_error);
    {
        std::ofstream out(p);
        out << "not a ply\n";
    }
    CHECK_THROWS_AS(splat::load_scene(p.string()), std::runtime_error);
}

TEST_CASE("ply rejects non-finite values with the element index") {
    splat::Scene s = random_scene(2, 8);
    s.splats[1].mu[0] = std::numeric_limits<double>::quiet_NaN();
    const fs::path p = temp_file("nan.ply");
    splat::save_scene(s, p.string());
    CHECK_THROWS_WITH_AS(splat::load_scene(p.string()),
                         doctest::Contains("splat 1"), std::runtime_error);
}

TEST_CASE("camera file round trip") {
    std::vector<splat::Camera> cams;
    for (int i = 0; i < 3; ++i) {
        splat::Camera c = splat::look_at_camera(
            Eigen::Vector3d(2.0 + i, -1.0, 0.8), Eigen::Vector3d::Zero(), 120,
            130, 32, 24);
        c.id = i * 5;
        c.image_name = "img_" + std::to_string(i) + ".png";
        cams.push_back(c);
    }
    const fs::path p = temp_file("cams.txt");
    splat::save_cameras(cams, p.string());
    const auto loaded = splat::load_cameras(p.string(), /*load_images=*/false);
    REQUIRE(loaded.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(loaded[i].id == cams[i].id);
        CHECK(loaded[i].fx == cams[i].fx);
        CHECK(loaded[i].width == cams[i].width);
        CHECK((loaded[i].t_wc - cams[i].t_wc).norm() < 1e-15);
        CHECK((loaded[i].rotation() - cams[i].rotation()).norm() < 1e-12);
        CHECK(loaded[i].image_name == cams[i].image_name);
    }
}

TEST_CASE("camera file accepts comments and rejects bad lines") {
    const fs::path p = temp_file("cams_bad.txt");
    {
        std::ofstream out(p);
        out << "# header comment\n\n";
        out << "0 100 100 8 8 16 16 1 0 0 0 0 0 2 a.png # trailing\n";
        out << "1 100 100 8 8 16 16 1 0 0\n";
    }
    CHECK_THROWS_WITH_AS(splat::load_cameras(p.string(), false),
                         doctest::Contains("cams_bad.txt:4"),
                         std::runtime_error);
}

TEST_CASE("scene_extent") {
    std::vector<splat::Camera> cams;
    CHECK(splat::scene_extent(cams) == 1.0);
    for (int i = 0; i < 4; ++i) {
        const double a = i * M_PI / 2.0;
        cams.push_back(splat::look_at_camera(
            Eigen::Vector3d(2 * std::cos(a), 2 * std::sin(a), 0),
            Eigen::Vector3d::Zero(), 100, 100, 16, 16));
    }
    CHECK(splat::scene_extent(cams) == doctest::Approx(2.0).epsilon(1e-12));
}
