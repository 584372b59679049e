#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "lddmd/ad.hpp"

namespace lddmd::ad {

struct GradientCheck {
    double max_relative_error = 0.0;
    std::size_t worst_coordinate = 0;
    std::vector<double> ad_gradient;
    std::vector<double> fd_gradient;
};

/// Compares the reverse-mode gradient of `fn` with central differences.
///
/// `fn` must be callable both as `double(std::span<const double>)` and as
/// `Var(std::span<const Var>)`; a generic lambda over `auto` works. The error
/// per coordinate is |AD - CD| / max(1, |CD|). At a kink (|x| at 0) the two
/// disagree and the error is of order one, which is how nondifferentiable
/// points show up. Non-finite function values propagate into the result.
template <class Fn>
GradientCheck check_gradient(Fn&& fn, std::span<const double> point, double step) {
    GradientCheck out;

    Tape tape;
    std::vector<Var> vars;
    vars.reserve(point.size());
    for (double p : point) {
        vars.push_back(tape.variable(p));
    }
    const Var root = fn(std::span<const Var>(vars));
    tape.backward(root);
    out.ad_gradient = tape.gradient();

    std::vector<double> x(point.begin(), point.end());
    out.fd_gradient.resize(point.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + step;
        const double fp = fn(std::span<const double>(x));
        x[i] = saved - step;
        const double fm = fn(std::span<const double>(x));
        x[i] = saved;
        out.fd_gradient[i] = (fp - fm) / (2.0 * step);

        const double err = std::abs(out.ad_gradient[i] - out.fd_gradient[i]) /
                           std::max(1.0, std::abs(out.fd_gradient[i]));
        if (!(err <= out.max_relative_error)) {
            out.max_relative_error = err;
            out.worst_coordinate = i;
        }
    }
    return out;
}

}  // namespace lddmd::ad
