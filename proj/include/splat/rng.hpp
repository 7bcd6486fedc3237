// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace splat {

// Seeded stream with hand-rolled variate mappings. std::*_distribution is
// implementation-defined, so outputs would differ across standard libraries;
// these mappings pin the bit stream to mt19937_64 alone.
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 1) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    // standard normal via Box-Muller (consumes two uniforms per pair)
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    // +1 or -1 with equal probability
    double rademacher() { return (gen_() & 1u) ? 1.0 : -1.0; }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // rejection-free modulo bias is irrelevant at the n used here (<= a
        // few thousand views/splats against a 64-bit stream)
        return gen_() % n;
    }

    // k distinct indices from [0, n), uniform without replacement
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) idx[i] = i;
        const int m = std::min(k, n);
        for (int i = 0; i < m; ++i) {
            const int j = i + static_cast<int>(below(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(m);
        return idx;
    }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace splat
