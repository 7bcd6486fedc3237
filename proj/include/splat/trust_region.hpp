// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include "splat/scene.hpp"

namespace splat {

// Unnormalized Gaussian in mass form, g(z) = mass * N(z; mu, sigma).
struct MassGaussian {
    double mass = 0.0;
    Eigen::Vector3d mu = Eigen::Vector3d::Zero();
    Eigen::Matrix3d sigma = Eigen::Matrix3d::Identity();
};

// Mass conventions for the per-family trust-region bounds: opacity acts as
// the total mass everywhere except the color family, whose per-channel mass
// also carries the channel intensity.
MassGaussian opacity_mass_form(const GaussianPrimitive& p);
MassGaussian color_mass_form(const GaussianPrimitive& p, int channel);

// Squared Hellinger distance between unnormalized Gaussians, closed form
//   H^2 = (Z + Z')/2 - sqrt(Z Z') * S1 * exp(-dmu' S2^-1 dmu / 8)
// with S1 = det(Sig)^(1/4) det(Sig')^(1/4) / det((Sig+Sig')/2)^(1/2) and
// S2 = (Sig+Sig')/2. Equals half the integral of (sqrt g - sqrt g')^2; the
// factor is fixed against the quadrature oracle in the test suite.
// Throws on a non-SPD covariance.
double hellinger_sq(const MassGaussian& a, const MassGaussian& b);

// per-axis radius on the mean; exact: a step of this size moves the
// normalized H^2 to eps precisely (inverse-covariance diagonal form, which
// reduces to sqrt(-8 Sigma_cc ln(1 - eps/alpha)) for diagonal Sigma)
Eigen::Vector3d radius_mean(const GaussianPrimitive& p, double eps,
                            double cap);

// |dS_c| < sqrt(2 S_c^2 eps / alpha)
Eigen::Vector3d radius_scale(const GaussianPrimitive& p, double eps,
                             double cap);

// |dalpha| < sqrt(4 alpha eps)
double radius_opacity(const GaussianPrimitive& p, double eps, double cap);

// |dC_c| < sqrt(4 C_c eps / alpha)
Eigen::Vector3d radius_color(const GaussianPrimitive& p, double eps,
                             double cap);

// curvature of T(dq) = |S R(q)^T R(q + dq e_c) S^-1|_F^2 at dq = 0:
//   beta_c = 2 |S dE S^-1|_F^2 + 2 tr(d2E)
// from the closed-form dE, d2E of E = R^T R~(q') / |q'|^2 - I
double beta_rotation(const GaussianPrimitive& p, int axis);

// finite-difference fallback for beta_c (debug / oracle path)
double beta_rotation_fd(const GaussianPrimitive& p, int axis, double h = 1e-4);

// T(dq e_c) itself, used by the oracle and the bound certification
double rotation_sensitivity(const GaussianPrimitive& p, int axis, double dq);

// |dq_c| < sqrt(-8/beta_c ln(1 - eps/alpha)); cap when beta_c <= 1e-12 or
// eps >= alpha
Eigen::Vector4d radius_rotation(const GaussianPrimitive& p, double eps,
                                double cap);

struct RadiusCaps {
    double mean = 1.0;
    double scale = 1.0;
    double rotation = 1.0;
    double opacity = 1.0;
    double color = 1.0;
};

// all five families concatenated in the scene's group-major layout; entries
// lie in (0, cap]
Eigen::VectorXd shd_radii(const Scene& scene, double eps,
                          const RadiusCaps& caps = RadiusCaps{});

// elementwise clamp of delta to [-eta, +eta]
Eigen::VectorXd clip_step(const Eigen::VectorXd& delta,
                          const Eigen::VectorXd& eta);

struct TrustRegionSchedule {
    double eps_start = 1e-6;
    double eps_end = 1e-8;
    int total_steps = 1;
};

// geometric interpolation eps_start * (eps_end/eps_start)^(t/total), clamped
// to [eps_end, eps_start]
double eps_at(const TrustRegionSchedule& s, int t);

}  // namespace splat
