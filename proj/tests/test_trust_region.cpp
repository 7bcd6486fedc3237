// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "splat/checks.hpp"
#include "splat/errors.hpp"
#include "splat/rng.hpp"
#include "splat/trust_region.hpp"

using Eigen::Vector3d;
using Eigen::Vector4d;
using splat::GaussianPrimitive;
using splat::MassGaussian;

namespace {

GaussianPrimitive base_prim() {
    GaussianPrimitive p;
    p.mu = Vector3d(0.1, -0.2, 0.3);
    p.scale = Vector3d(0.8, 0.5, 1.2);
    p.quat = Vector4d(0.1, 0.3, -0.2, 0.9).normalized();
    p.opacity = 0.6;
    p.color = Vector3d(0.7, 0.4, 0.9);
    return p;
}

}  // namespace

TEST_CASE("hellinger_sq identity, symmetry, nonnegativity") {
    splat::Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const MassGaussian a = splat::opacity_mass_form(splat::random_primitive(rng));
        const MassGaussian b = splat::opacity_mass_form(splat::random_primitive(rng));
        CHECK(std::abs(splat::hellinger_sq(a, a)) <= 1e-12);
        const double ab = splat::hellinger_sq(a, b);
        const double ba = splat::hellinger_sq(b, a);
        CHECK(ab == ba);  // symmetric by construction
        CHECK(ab >= 0.0);
        CHECK(ab > 1e-10);  // distinct random pairs stay apart
    }
    // zero up to quaternion sign and scale
    GaussianPrimitive p = base_prim();
    GaussianPrimitive q = p;
    q.quat = -2.5 * q.quat;
    CHECK(std::abs(splat::hellinger_sq(splat::opacity_mass_form(p),
                                       splat::opacity_mass_form(q))) <= 1e-12);
}

TEST_CASE("hellinger_sq mean-shift closed form: Z(1 - exp(-t^2/8))") {
    for (double t : {0.1, 0.5, 1.3, 2.7}) {
        const double z = 0.7;
        MassGaussian a{z, Vector3d::Zero(), Eigen::Matrix3d::Identity()};
        MassGaussian b{z, Vector3d(t, 0, 0), Eigen::Matrix3d::Identity()};
        CHECK(splat::hellinger_sq(a, b) ==
              doctest::Approx(z * (1.0 - std::exp(-t * t / 8.0)))
                  .epsilon(1e-12));
    }
}

TEST_CASE("hellinger_sq rejects non-SPD covariances") {
    MassGaussian a{1.0, Vector3d::Zero(), Eigen::Matrix3d::Identity()};
    MassGaussian bad = a;
    bad.sigma(0, 0) = -1.0;
    CHECK_THROWS_AS(splat::hellinger_sq(a, bad), splat::NumericError);
}

TEST_CASE("hellinger_sq agrees with the quadrature oracle") {
    splat::Rng rng(37);
    for (int trial = 0; trial < 10; ++trial) {
        GaussianPrimitive p = splat::random_primitive(rng);
        GaussianPrimitive q = splat::random_primitive(rng);
        // keep scales in the range where the 64^3 grid resolves both kernels
        for (int a = 0; a < 3; ++a) {
            p.scale[a] = rng.uniform(0.3, 1.0);
            q.scale[a] = rng.uniform(0.3, 1.0);
            q.mu[a] = p.mu[a] + rng.uniform(-0.3, 0.3);
        }
        const MassGaussian ga = splat::opacity_mass_form(p);
        const MassGaussian gb = splat::opacity_mass_form(q);
        const double closed = splat::hellinger_sq(ga, gb);
        const double half_integral =
            0.5 * splat::hellinger_sq_quadrature(ga, gb);
        CHECK(closed ==
              doctest::Approx(half_integral).epsilon(1e-3));
    }
}

TEST_CASE("radius_mean closed-form examples") {
    GaussianPrimitive p = base_prim();
    p.scale = Vector3d(1, 1, 1);  // Sigma = I
    p.quat = Vector4d(0, 0, 0, 1);
    p.opacity = 1.0;
    const Vector3d r = splat::radius_mean(p, 1e-6, 1.0);
    CHECK(r[0] == doctest::Approx(2.828e-3).epsilon(4e-4));
    CHECK(r[0] == doctest::Approx(std::sqrt(-8.0 * std::log1p(-1e-6))));

    // vacuous constraint when eps >= alpha
    p.opacity = 0.5;
    const Vector3d rv = splat::radius_mean(p, 0.6, 1.0);
    CHECK(rv[0] == 1.0);

    // doubling Sigma_xx scales the x-radius by sqrt(2) (diagonal Sigma)
    p.opacity = 0.8;
    p.scale = Vector3d(1, 1, 1);
    const Vector3d r1 = splat::radius_mean(p, 1e-6, 1.0);
    p.scale = Vector3d(std::sqrt(2.0), 1, 1);
    const Vector3d r2 = splat::radius_mean(p, 1e-6, 1.0);
    CHECK(r2[0] / r1[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(r2[1] / r1[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("radius_mean is exact on rotated anisotropic primitives") {
    splat::Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const GaussianPrimitive p = splat::random_primitive(rng);
        const double eps = 1e-5;
        const Vector3d r = splat::radius_mean(p, eps, 1.0);
        for (int c = 0; c < 3; ++c) {
            GaussianPrimitive q = p;
            q.mu[c] += r[c];
            const double h2 = splat::hellinger_sq(splat::opacity_mass_form(p),
                                                  splat::opacity_mass_form(q)) /
                              p.det_s();
            CHECK(h2 == doctest::Approx(eps).epsilon(1e-9));
        }
    }
}

TEST_CASE("radius_scale examples and homogeneity") {
    GaussianPrimitive p = base_prim();
    p.scale = Vector3d(1, 1, 1);
    p.opacity = 0.5;
    const Vector3d r = splat::radius_scale(p, 1e-6, 1.0);
    CHECK(r[0] == doctest::Approx(2e-3).epsilon(1e-12));

    p.scale = Vector3d(2, 1, 0.5);
    const Vector3d r2 = splat::radius_scale(p, 1e-6, 1.0);
    CHECK(r2[0] / r2[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r2[2] / r2[1] == doctest::Approx(0.5).epsilon(1e-12));

    // radius scales like alpha^(-1/2)
    GaussianPrimitive lo = p, hi = p;
    lo.opacity = 0.2;
    hi.opacity = 0.8;
    CHECK(splat::radius_scale(lo, 1e-6, 1.0)[0] /
              splat::radius_scale(hi, 1e-6, 1.0)[0] ==
          doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("radius_opacity and radius_color examples") {
    GaussianPrimitive p = base_prim();
    p.opacity = 0.25;
    CHECK(splat::radius_opacity(p, 1e-6, 1.0) ==
          doctest::Approx(1e-3).epsilon(1e-12));
    p.opacity = 1.0;
    CHECK(splat::radius_opacity(p, 0.01, 1.0) ==
          doctest::Approx(0.2).epsilon(1e-12));

    p.opacity = 0.25;
    p.color = Vector3d(0.25, 0.5, 1.0);
    const Vector3d rc = splat::radius_color(p, 1e-6, 1.0);
    CHECK(rc[0] == doctest::Approx(2e-3).epsilon(1e-12));
    // proportional to sqrt(C_c) and alpha^(-1/2)
    CHECK(rc[2] / rc[0] == doctest::Approx(2.0).epsilon(1e-12));
    GaussianPrimitive floor_c = p;
    floor_c.color[0] = 1e-6;
    CHECK(splat::radius_color(floor_c, 1e-6, 1.0)[0] ==
          doctest::Approx(std::sqrt(4.0 * 1e-6 * 1e-6 / 0.25)).epsilon(1e-12));
}

TEST_CASE("beta_rotation closed form vs finite differences") {
    // isotropic scales: rotation has no effect, beta is exactly zero
    GaussianPrimitive iso = base_prim();
    iso.scale = Vector3d(1, 1, 1);
    iso.quat = Vector4d(0, 0, 0, 1);
    for (int axis = 0; axis < 4; ++axis) {
        CHECK(std::abs(splat::beta_rotation(iso, axis)) < 1e-12);
        CHECK(std::abs(splat::beta_rotation_fd(iso, axis)) < 1e-4);
    }

    // identity quaternion, anisotropic: beta_x = 8 (u + 1/u) - 16 with
    // u = (s_y/s_z)^2, from the explicit dE/d2E at q = e_w
    GaussianPrimitive p = base_prim();
    p.quat = Vector4d(0, 0, 0, 1);
    p.scale = Vector3d(1.0, 2.0, 1.0);
    const double u = 4.0;
    CHECK(splat::beta_rotation(p, 0) ==
          doctest::Approx(8.0 * (u + 1.0 / u) - 16.0).epsilon(1e-12));
    // q_w perturbations only rescale the identity quaternion
    CHECK(std::abs(splat::beta_rotation(p, 3)) < 1e-12);

    splat::Rng rng(47);
    for (int trial = 0; trial < 50; ++trial) {
        GaussianPrimitive r;
        for (int a = 0; a < 3; ++a) r.scale[a] = rng.uniform(0.2, 2.0);
        Vector4d q;
        for (int a = 0; a < 4; ++a) q[a] = rng.normal();
        r.quat = q.normalized() * rng.uniform(0.5, 2.0);
        for (int axis = 0; axis < 4; ++axis) {
            const double closed = splat::beta_rotation(r, axis);
            const double fd = splat::beta_rotation_fd(r, axis);
            CHECK(std::abs(closed - fd) <=
                  1e-3 * std::max(std::abs(closed), std::abs(fd)) + 1e-6);
        }
    }
}

TEST_CASE("beta_rotation scales as 1/|q|^2 under q -> 2q") {
    // R(q) is scale invariant but additive perturbations of 2q correspond to
    // half-size perturbations of q, so beta(2q) = beta(q)/4; the rotation
    // radius doubles accordingly. Verified against the finite-difference
    // oracle.
    GaussianPrimitive p = base_prim();
    for (int axis = 0; axis < 4; ++axis) {
        const double b1 = splat::beta_rotation(p, axis);
        GaussianPrimitive p2 = p;
        p2.quat *= 2.0;
        const double b2 = splat::beta_rotation(p2, axis);
        CHECK(b2 == doctest::Approx(b1 / 4.0).epsilon(1e-10));
        CHECK(splat::beta_rotation_fd(p2, axis) ==
              doctest::Approx(b1 / 4.0).epsilon(1e-3));
    }
}

TEST_CASE("radius_rotation caps and scaling") {
    GaussianPrimitive p = base_prim();
    // vacuous when eps >= alpha
    const Vector4d rv = splat::radius_rotation(p, p.opacity * 2.0, 1.0);
    for (int c = 0; c < 4; ++c) CHECK(rv[c] == 1.0);

    // isotropic scales: beta = 0, capped; perturbing by the returned radius
    // still leaves the normalized distance at zero (rotation is a no-op)
    GaussianPrimitive iso = p;
    iso.scale = Vector3d(0.5, 0.5, 0.5);
    const Vector4d ri = splat::radius_rotation(iso, 1e-6, 1.0);
    for (int c = 0; c < 4; ++c) {
        CHECK(ri[c] == 1.0);
        GaussianPrimitive moved = iso;
        moved.quat[c] += ri[c];
        const double h2 =
            splat::hellinger_sq(splat::opacity_mass_form(iso),
                                splat::opacity_mass_form(moved)) /
            iso.det_s();
        CHECK(h2 <= 1e-6 * 1.15);
    }

    // radius proportional to beta^(-1/2): compare two anisotropy levels
    GaussianPrimitive a = p, b = p;
    a.quat = Vector4d(0, 0, 0, 1);
    b.quat = Vector4d(0, 0, 0, 1);
    a.scale = Vector3d(1, 2, 1);
    b.scale = Vector3d(1, 4, 1);
    const double beta_a = splat::beta_rotation(a, 0);
    const double beta_b = splat::beta_rotation(b, 0);
    const double ra = splat::radius_rotation(a, 1e-6, 1.0)[0];
    const double rb = splat::radius_rotation(b, 1e-6, 1.0)[0];
    CHECK(ra / rb == doctest::Approx(std::sqrt(beta_b / beta_a)).epsilon(1e-10));
}

TEST_CASE("shd_radii composition, monotonicity, and caps") {
    splat::Scene scene;
    scene.splats.push_back(base_prim());
    const splat::RadiusCaps caps;
    const Eigen::VectorXd eta = splat::shd_radii(scene, 1e-6, caps);
    REQUIRE(eta.size() == 14);
    const GaussianPrimitive& p = scene.splats[0];
    const Vector3d rm = splat::radius_mean(p, 1e-6, caps.mean);
    const Vector3d rs = splat::radius_scale(p, 1e-6, caps.scale);
    const Vector4d rq = splat::radius_rotation(p, 1e-6, caps.rotation);
    const Vector3d rc = splat::radius_color(p, 1e-6, caps.color);
    for (int c = 0; c < 3; ++c) {
        CHECK(eta[c] == rm[c]);
        CHECK(eta[3 + c] == rs[c]);
        CHECK(eta[11 + c] == rc[c]);
    }
    for (int c = 0; c < 4; ++c) CHECK(eta[6 + c] == rq[c]);
    CHECK(eta[10] == splat::radius_opacity(p, 1e-6, caps.opacity));

    // elementwise monotone in eps
    const Eigen::VectorXd eta_half = splat::shd_radii(scene, 0.5e-6, caps);
    for (int i = 0; i < 14; ++i) CHECK(eta_half[i] <= eta[i]);

    // alpha at the floor: no NaN or Inf, everything in (0, cap]
    splat::Scene floor_scene;
    for (int i = 0; i < 4; ++i) {
        GaussianPrimitive q = base_prim();
        q.opacity = 1e-4;
        floor_scene.splats.push_back(q);
    }
    const Eigen::VectorXd ef = splat::shd_radii(floor_scene, 1e-6, caps);
    for (int i = 0; i < ef.size(); ++i) {
        CHECK(std::isfinite(ef[i]));
        CHECK(ef[i] > 0.0);
        CHECK(ef[i] <= 1.0);
    }
}

TEST_CASE("non-rotation radii are invariant under quaternion rescaling") {
    splat::Rng rng(53);
    for (int trial = 0; trial < 20; ++trial) {
        const GaussianPrimitive p = splat::random_primitive(rng);
        GaussianPrimitive q = p;
        q.quat *= rng.uniform(0.3, 3.0) * rng.rademacher();
        for (int c = 0; c < 3; ++c) {
            CHECK(splat::radius_mean(p, 1e-5, 1.0)[c] ==
                  doctest::Approx(splat::radius_mean(q, 1e-5, 1.0)[c])
                      .epsilon(1e-10));
            CHECK(splat::radius_scale(p, 1e-5, 1.0)[c] ==
                  splat::radius_scale(q, 1e-5, 1.0)[c]);
            CHECK(splat::radius_color(p, 1e-5, 1.0)[c] ==
                  splat::radius_color(q, 1e-5, 1.0)[c]);
        }
        CHECK(splat::radius_opacity(p, 1e-5, 1.0) ==
              splat::radius_opacity(q, 1e-5, 1.0));
    }
}

TEST_CASE("clip_step") {
    Eigen::VectorXd d(3), eta(3);
    d << 0.5, -0.3, 0.1;
    eta << 0.2, 0.4, 0.2;
    const Eigen::VectorXd c = splat::clip_step(d, eta);
    CHECK(c[0] == 0.2);
    CHECK(c[1] == -0.3);
    CHECK(c[2] == 0.1);
    const Eigen::VectorXd cc = splat::clip_step(c, eta);
    for (int i = 0; i < 3; ++i) CHECK(cc[i] == c[i]);  // idempotent

    Eigen::VectorXd small(3);
    small << 0.1, 0.1, -0.1;
    const Eigen::VectorXd s = splat::clip_step(small, eta);
    for (int i = 0; i < 3; ++i) CHECK(s[i] == small[i]);
}

TEST_CASE("eps_at geometric schedule") {
    const splat::TrustRegionSchedule s{1e-6, 1e-8, 1000};
    CHECK(splat::eps_at(s, 0) == 1e-6);
    CHECK(splat::eps_at(s, 1000) == doctest::Approx(1e-8).epsilon(1e-14));
    CHECK(splat::eps_at(s, 500) == doctest::Approx(1e-7).epsilon(1e-12));
    CHECK(splat::eps_at(s, 2000) == doctest::Approx(1e-8).epsilon(1e-14));
    CHECK(splat::eps_at(s, -5) == 1e-6);
}

TEST_CASE("bound certification across families (sampled)") {
    splat::Rng rng(59);
    double worst_mean = 0.0, worst_other = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const GaussianPrimitive p = splat::random_primitive(rng);
        const double det = p.det_s();
        for (double eps : {1e-6, 1e-4}) {
            auto h2 = [&](const GaussianPrimitive& q) {
                return splat::hellinger_sq(splat::opacity_mass_form(p),
                                           splat::opacity_mass_form(q)) /
                       det;
            };
            const Vector3d rm = splat::radius_mean(p, eps, 1.0);
            const Vector3d rs = splat::radius_scale(p, eps, 1.0);
            const Vector4d rq = splat::radius_rotation(p, eps, 1.0);
            const Vector3d rc = splat::radius_color(p, eps, 1.0);
            const double ro = splat::radius_opacity(p, eps, 1.0);
            for (int c = 0; c < 3; ++c) {
                GaussianPrimitive q = p;
                q.mu[c] += rm[c];
                worst_mean = std::max(worst_mean, h2(q) / eps);
                q = p;
                q.scale[c] += rs[c];
                worst_other = std::max(worst_other, h2(q) / eps);
                q = p;
                q.color[c] += rc[c];
                worst_other = std::max(
                    worst_other,
                    splat::hellinger_sq(splat::color_mass_form(p, c),
                                        splat::color_mass_form(q, c)) /
                        det / eps);
            }
            for (int c = 0; c < 4; ++c) {
                GaussianPrimitive q = p;
                q.quat[c] += rq[c];
                worst_other = std::max(worst_other, h2(q) / eps);
            }
            GaussianPrimitive q = p;
            q.opacity += ro;
            worst_other = std::max(worst_other, h2(q) / eps);
        }
    }
    CHECK(worst_mean <= 1.0 + 1e-6);
    CHECK(worst_other <= 1.15);
}
