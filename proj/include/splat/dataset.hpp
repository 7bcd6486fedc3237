// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "splat/config.hpp"
#include "splat/scene.hpp"

namespace splat {

struct SyntheticDataset {
    Scene gt;
    Scene init;
    std::vector<Camera> cameras;  // gt images attached (8-bit quantized)
};

// Deterministic from cfg.seed: K_gt splats sampled in the unit box (mu
// uniform, scale log-uniform [0.02, 0.2], rotation uniform, alpha uniform
// [0.3, 0.9], color uniform [0.1, 1]); cameras on a ring looking at the
// origin; ground-truth renders quantized to the 8-bit grid the PNGs store.
// The init scene jitters ground-truth positions (sigma_init), with isotropic
// scales, identity rotations, alpha 0.5 and gray color, standing in for an
// SfM initialization.
SyntheticDataset make_synthetic(const RunConfig& cfg);

// scene_gt.ply, scene_init.ply, cameras.txt, images/cam_####.png
void write_dataset(const SyntheticDataset& ds, const std::string& dir);

// cameras with id % 5 == 0 are held out for evaluation
void split_views(const std::vector<Camera>& all, std::vector<Camera>& train,
                 std::vector<Camera>& held_out);

}  // namespace splat
