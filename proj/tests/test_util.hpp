#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace cfpinn::test {

inline auto rel_err(double a, double b) -> double
{
    double const scale = std::max({std::abs(a), std::abs(b), std::numeric_limits<double>::min()});
    return std::abs(a - b) / scale;
}

/// |a - b| within k units of rounding at the magnitude `scale`.
inline auto within_ulps(double a, double b, double k, double scale) -> bool
{
    return std::abs(a - b) <= k * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(scale));
}

/// Central difference of f at x with step h.
template <class F>
auto central_difference(F&& f, double x, double h) -> double
{
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Second central difference of f at x with step h.
template <class F>
auto second_difference(F&& f, double x, double h) -> double
{
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

/// Richardson extrapolation of central_difference: fourth-order accurate.
template <class F>
auto central_difference4(F&& f, double x, double h) -> double
{
    return (4.0 * central_difference(f, x, 0.5 * h) - central_difference(f, x, h)) / 3.0;
}

/// Richardson extrapolation of second_difference: fourth-order accurate.
template <class F>
auto second_difference4(F&& f, double x, double h) -> double
{
    return (4.0 * second_difference(f, x, 0.5 * h) - second_difference(f, x, h)) / 3.0;
}

} // namespace cfpinn::test
