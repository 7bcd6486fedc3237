// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "splat/dual.hpp"

namespace splat {

template <typename T>
using Vec2T = Eigen::Matrix<T, 2, 1>;
template <typename T>
using Vec3T = Eigen::Matrix<T, 3, 1>;
template <typename T>
using Vec4T = Eigen::Matrix<T, 4, 1>;
template <typename T>
using Mat2T = Eigen::Matrix<T, 2, 2>;
template <typename T>
using Mat3T = Eigen::Matrix<T, 3, 3>;

// Unnormalized rotation matrix R~(q) with q = (x, y, z, w); the true
// rotation is R~(q) / |q|^2, so the parameterization is invariant under
// rescaling of q and never needs renormalization.
template <typename T>
Mat3T<T> quat_rotation_unnormalized(const Vec4T<T>& q) {
    const T& x = q[0];
    const T& y = q[1];
    const T& z = q[2];
    const T& w = q[3];
    const T r2 = x * x + y * y + z * z + w * w;
    Mat3T<T> m;
    m(0, 0) = r2 - 2.0 * (y * y + z * z);
    m(0, 1) = 2.0 * (x * y - w * z);
    m(0, 2) = 2.0 * (x * z + w * y);
    m(1, 0) = 2.0 * (x * y + w * z);
    m(1, 1) = r2 - 2.0 * (z * z + x * x);
    m(1, 2) = 2.0 * (y * z - w * x);
    m(2, 0) = 2.0 * (x * z - w * y);
    m(2, 1) = 2.0 * (y * z + w * x);
    m(2, 2) = r2 - 2.0 * (x * x + y * y);
    return m;
}

template <typename T>
Mat3T<T> quat_to_rotation(const Vec4T<T>& q) {
    const T r2 = q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3];
    if (primal(r2) < 1e-24)
        throw std::invalid_argument("quat_to_rotation: degenerate quaternion");
    Mat3T<T> m = quat_rotation_unnormalized(q);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = m(i, j) / r2;
    return m;
}

// Sigma = R^T S^T S R with S = diag(scale).
template <typename T>
Mat3T<T> covariance(const Vec3T<T>& scale, const Vec4T<T>& q) {
    const Mat3T<T> r = quat_to_rotation(q);
    Mat3T<T> s2 = Mat3T<T>::Zero();
    s2(0, 0) = scale[0] * scale[0];
    s2(1, 1) = scale[1] * scale[1];
    s2(2, 2) = scale[2] * scale[2];
    return r.transpose() * s2 * r;
}

// quaternion (x, y, z, w) for a given rotation matrix (Shepperd's method);
// used when building cameras, not on the optimization path
Eigen::Vector4d rotation_to_quat(const Eigen::Matrix3d& r);

}  // namespace splat
