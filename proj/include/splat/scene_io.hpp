// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "splat/scene.hpp"

namespace splat {

// Binary little-endian PLY, element vertex with double properties
// x y z scale_0..2 rot_0..3 (q_x q_y q_z q_w) opacity red green blue,
// tagged with `comment splat-tr v1`. Round-trips parameters bitwise.
void save_scene(const Scene& scene, const std::string& path);
Scene load_scene(const std::string& path,
                 const ParamBounds& bounds = ParamBounds{});

// One camera per line:
//   id fx fy cx cy width height qw qx qy qz tx ty tz image_filename
// `#` starts a comment; image paths are resolved relative to the file.
void save_cameras(const std::vector<Camera>& cams, const std::string& path);
std::vector<Camera> load_cameras(const std::string& path,
                                 bool load_images = true);

}  // namespace splat
