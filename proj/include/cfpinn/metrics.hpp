#pragma once

#include "cfpinn/errors.hpp"

#include <cmath>
#include <cstddef>
#include <span>

namespace cfpinn::metrics {

struct ErrorReport {
    double relative_l2 = 0.0;
    double mean_abs_error = 0.0;
    double mean_sq_error = 0.0;
    std::size_t n_points = 0;
};

namespace detail {
inline void check_lengths(std::span<double const> pred, std::span<double const> exact)
{
    if (pred.size() != exact.size()) { throw LengthMismatch("metrics: prediction and reference differ in length"); }
    if (pred.empty()) { throw EmptyInput("metrics: empty input"); }
}
} // namespace detail

/// ||pred - exact||_2 / ||exact||_2
inline auto relative_l2(std::span<double const> pred, std::span<double const> exact) -> double
{
    detail::check_lengths(pred, exact);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double const e = pred[i] - exact[i];
        num += e * e;
        den += exact[i] * exact[i];
    }
    if (den == 0.0) { throw ZeroReference("relative_l2: reference has zero norm"); }
    return std::sqrt(num) / std::sqrt(den);
}

inline auto error_stats(std::span<double const> pred, std::span<double const> exact) -> ErrorReport
{
    detail::check_lengths(pred, exact);
    ErrorReport r;
    r.n_points = pred.size();
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double const e = pred[i] - exact[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
    }
    auto const n = static_cast<double>(pred.size());
    r.mean_abs_error = abs_sum / n;
    r.mean_sq_error = sq_sum / n;
    r.relative_l2 = relative_l2(pred, exact);
    return r;
}

/// Percent error of an estimated parameter.
inline auto lambda_error(double lambda_hat, double lambda_true) -> double
{
    if (lambda_true == 0.0) { throw ZeroReference("lambda_error: true value is zero"); }
    return 100.0 * std::abs(lambda_hat - lambda_true) / std::abs(lambda_true);
}

} // namespace cfpinn::metrics
