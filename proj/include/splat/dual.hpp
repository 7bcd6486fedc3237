// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace splat {

// Forward-mode scalar: primal value plus directional derivative along a
// single seed direction. Non-smooth points follow the primal branch:
// abs'(0) = 0, min/max ties take the first argument, comparisons look at
// the value only.
struct Dual {
    double v = 0.0;
    double d = 0.0;

    Dual() = default;
    Dual(double value) : v(value) {}  // constants carry zero tangent
    Dual(double value, double tangent) : v(value), d(tangent) {}

    Dual operator-() const { return {-v, -d}; }

    Dual& operator+=(const Dual& o) {
        v += o.v;
        d += o.d;
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v -= o.v;
        d -= o.d;
        return *this;
    }
    Dual& operator*=(const Dual& o) {
        d = d * o.v + v * o.d;
        v *= o.v;
        return *this;
    }
    Dual& operator/=(const Dual& o) {
        d = (d * o.v - v * o.d) / (o.v * o.v);
        v /= o.v;
        return *this;
    }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }

inline Dual operator+(Dual a, double b) { return {a.v + b, a.d}; }
inline Dual operator+(double a, Dual b) { return {a + b.v, b.d}; }
inline Dual operator-(Dual a, double b) { return {a.v - b, a.d}; }
inline Dual operator-(double a, Dual b) { return {a - b.v, -b.d}; }
inline Dual operator*(Dual a, double b) { return {a.v * b, a.d * b}; }
inline Dual operator*(double a, Dual b) { return {a * b.v, a * b.d}; }
inline Dual operator/(Dual a, double b) { return {a.v / b, a.d / b}; }
inline Dual operator/(double a, Dual b) {
    return {a / b.v, -a * b.d / (b.v * b.v)};
}

inline bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
inline bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }
inline bool operator==(const Dual& a, const Dual& b) { return a.v == b.v; }
inline bool operator!=(const Dual& a, const Dual& b) { return a.v != b.v; }

inline Dual exp(const Dual& a) {
    const double e = std::exp(a.v);
    return {e, e * a.d};
}
inline Dual log(const Dual& a) { return {std::log(a.v), a.d / a.v}; }
inline Dual sqrt(const Dual& a) {
    const double s = std::sqrt(a.v);
    return {s, a.d / (2.0 * s)};
}
inline Dual abs(const Dual& a) {
    if (a.v > 0.0) return a;
    if (a.v < 0.0) return -a;
    return {0.0, 0.0};
}
inline Dual min(const Dual& a, const Dual& b) { return a.v <= b.v ? a : b; }
inline Dual max(const Dual& a, const Dual& b) { return a.v >= b.v ? a : b; }
inline Dual pow(const Dual& a, int n) {
    const double p = std::pow(a.v, n);
    return {p, n * std::pow(a.v, n - 1) * a.d};
}
inline bool isfinite(const Dual& a) {
    return std::isfinite(a.v) && std::isfinite(a.d);
}

inline double primal(double x) { return x; }
inline double primal(const Dual& x) { return x.v; }
inline double tangent(double) { return 0.0; }
inline double tangent(const Dual& x) { return x.d; }

}  // namespace splat

namespace Eigen {

template <>
struct NumTraits<splat::Dual> : NumTraits<double> {
    typedef splat::Dual Real;
    typedef splat::Dual NonInteger;
    typedef splat::Dual Nested;
    typedef double Literal;
    enum {
        IsComplex = 0,
        IsInteger = 0,
        IsSigned = 1,
        RequireInitialization = 1,
        ReadCost = 2,
        AddCost = 2,
        MulCost = 4
    };
    static inline splat::Dual epsilon() {
        return splat::Dual(NumTraits<double>::epsilon());
    }
    static inline splat::Dual dummy_precision() {
        return splat::Dual(NumTraits<double>::dummy_precision());
    }
    static inline splat::Dual highest() {
        return splat::Dual(NumTraits<double>::highest());
    }
    static inline splat::Dual lowest() {
        return splat::Dual(NumTraits<double>::lowest());
    }
};

template <typename BinaryOp>
struct ScalarBinaryOpTraits<splat::Dual, double, BinaryOp> {
    typedef splat::Dual ReturnType;
};
template <typename BinaryOp>
struct ScalarBinaryOpTraits<double, splat::Dual, BinaryOp> {
    typedef splat::Dual ReturnType;
};

}  // namespace Eigen

namespace splat {

using DualVector = Eigen::Matrix<Dual, Eigen::Dynamic, 1>;

// Elementwise Dual(x_k, v_k); the entry point for every J*v product.
inline DualVector seed_direction(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& v) {
    if (x.size() != v.size())
        throw std::invalid_argument("seed_direction: length mismatch");
    DualVector out(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) out[k] = Dual(x[k], v[k]);
    return out;
}

}  // namespace splat
