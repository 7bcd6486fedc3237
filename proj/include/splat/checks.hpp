// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "splat/config.hpp"
#include "splat/rng.hpp"
#include "splat/scene.hpp"
#include "splat/trust_region.hpp"

namespace splat {

// Verification surfaces. Everything here sits off the optimization path:
// the oracles are independent reference computations (quadrature, finite
// differences, unit-vector JVPs) that the check subcommands and the test
// suite both drive.

// midpoint rule for the raw integral of (sqrt g - sqrt g')^2 over a box of
// +-6 max-sigma around the midpoint of the means; hellinger_sq equals half
// of this
double hellinger_sq_quadrature(const MassGaussian& a, const MassGaussian& b,
                               int grid = 64);

// seeded scene + views for the gradient/adjoint/Hutchinson checks: a jittered
// copy of a random target scene rendered by the same renderer; the seed is
// advanced until every view keeps adjacent splat depths >= 1e-3 apart so the
// finite-difference probes stay inside one smooth piece
struct CheckScene {
    Scene scene;
    std::vector<Camera> views;
};
CheckScene make_check_scene(int splats, int image_size, int n_views,
                            std::uint64_t seed);

// objective gradient by central differences, h_k = 1e-6 (1 + |x_k|)
Eigen::VectorXd fd_gradient(const Scene& scene,
                            const std::vector<Camera>& views,
                            const ResidualOptions& ropt,
                            const RenderOptions& render);

// diag((1/m) sum_j J_j^T J_j) via one JVP per coordinate
Eigen::VectorXd exact_gn_diagonal(const Scene& scene,
                                  const std::vector<Camera>& views,
                                  const ResidualOptions& ropt,
                                  const RenderOptions& render);

// uniformly random primitive in the certification ranges (alpha in
// [0.05, 0.9], per-axis scale in [0.1, 2], |q| in [0.6, 1.4])
GaussianPrimitive random_primitive(Rng& rng);

struct CheckReport {
    std::string name;
    double max_err = 0.0;
    double tol = 0.0;
    bool pass = false;
    std::string note;
};

// grad | adjoint | hutch | hellinger | tr-bounds | beta
CheckReport run_check(const std::string& name, const RunConfig& cfg);

const std::vector<std::string>& check_names();

// per-family histogram of trust-region radii (debug surface), CSV text
std::string radii_histogram_csv(const Scene& scene, double eps,
                                const RadiusCaps& caps);

}  // namespace splat
