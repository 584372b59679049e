#pragma once

// Plain-double counterparts of the differentiable elementary functions, so
// templated model code can call square/softplus/wrap_angle unqualified for
// both double and ad::Var.

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lddmd {

inline double square(double x) { return x * x; }

/// ln(1 + e^s) without overflow for large |s|.
inline double softplus(double s) {
    return std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s)));
}

/// Derivative of softplus.
inline double sigmoid(double s) {
    if (s >= 0.0) {
        return 1.0 / (1.0 + std::exp(-s));
    }
    const double e = std::exp(s);
    return e / (1.0 + e);
}

/// Reduces an angle to [-pi, pi] using a two-part 2*pi so the reduction itself
/// loses no more than one rounding even for angles of many turns.
inline double wrap_angle(double theta) {
    constexpr double two_pi_hi = 6.28318530717958623200e+00;  // nearest double to 2*pi
    constexpr double two_pi_lo = 2.44929359829470635445e-16;  // 2*pi - two_pi_hi
    const double turns = std::nearbyint(theta / two_pi_hi);
    if (turns == 0.0) {
        return theta;
    }
    return (theta - turns * two_pi_hi) - turns * two_pi_lo;
}

}  // namespace lddmd
