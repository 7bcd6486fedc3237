// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace splat {

// RGB image, row-major, channel-interleaved, linear values in double.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h) : width(w), height(h), data(3u * w * h, 0.0) {}

    double& at(int x, int y, int c) { return data[3 * (y * width + x) + c]; }
    double at(int x, int y, int c) const {
        return data[3 * (y * width + x) + c];
    }
    int pixels() const { return width * height; }
    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height;
    }
};

// Snaps every channel to the 8-bit grid; matches what save_png stores, so
// metrics computed on quantized images are exact against a decoded PNG.
Image quantize8(const Image& img);

// 8-bit RGB PNG, values treated as linear; save clamps to [0,1]
Image load_png(const std::string& path);
void save_png(const Image& img, const std::string& path);

}  // namespace splat
