#pragma once

// Conformable time derivative, the diffusion residual built on it, and the
// closed-form Gaussian solution of the conformable diffusion equation
//
//   T^alpha u - lambda u_xx = 0,   T^alpha u = t^(1 - alpha) u_t.
//
// The substitution tau = t^alpha / alpha turns the equation into the heat
// equation u_tau = lambda u_xx, so the heat kernel evaluated at tau solves it.

#include "cfpinn/diffgraph.hpp"
#include "cfpinn/errors.hpp"

#include <cmath>
#include <numbers>

namespace cfpinn::conformable {

struct DomainSpec {
    double t_lo = 0.01;
    double t_hi = 1.0;
    double x_lo = -1.0;
    double x_hi = 1.0;
    double alpha = 0.5;
    double lambda = 0.5073;

    void validate() const
    {
        if (!(t_lo > 0.0)) { throw InvalidConfig("domain: t_lo must be > 0"); }
        if (!(t_lo < t_hi)) { throw InvalidConfig("domain: t_lo must be < t_hi"); }
        if (!(x_lo < x_hi)) { throw InvalidConfig("domain: x_lo must be < x_hi"); }
        if (!(alpha > 0.0 && alpha <= 1.0)) { throw InvalidConfig("domain: alpha must lie in (0, 1]"); }
        if (!(lambda > 0.0)) { throw InvalidConfig("domain: lambda must be > 0"); }
    }

    [[nodiscard]] auto contains(double t, double x) const noexcept -> bool
    {
        return t >= t_lo && t <= t_hi && x >= x_lo && x <= x_hi;
    }
};

/// t^(1 - alpha) * du/dt. At alpha = 1 the factor is the constant 1.
inline auto conformable_derivative(diffgraph::Graph& g, diffgraph::NodeRef u, diffgraph::NodeRef t, double alpha)
    -> diffgraph::NodeRef
{
    if (!(alpha > 0.0 && alpha <= 1.0)) { throw InvalidConfig("conformable_derivative: alpha must lie in (0, 1]"); }
    auto const du_dt = diffgraph::differentiate(g, u, t);
    if (alpha == 1.0) { return du_dt; }
    // The non-integer power rejects t <= 0 at evaluation time.
    return g.mul(g.pow(t, 1.0 - alpha), du_dt);
}

/// f(t, x) = T^alpha u - lambda u_xx. `lambda` may be a constant or a
/// trainable variable.
inline auto residual(diffgraph::Graph& g, diffgraph::NodeRef u, diffgraph::NodeRef t, diffgraph::NodeRef x,
                     diffgraph::NodeRef lambda, double alpha) -> diffgraph::NodeRef
{
    auto const u_x = diffgraph::differentiate(g, u, x);
    auto const u_xx = diffgraph::differentiate(g, u_x, x);
    return g.sub(conformable_derivative(g, u, t, alpha), g.mul(lambda, u_xx));
}

inline auto analytic_solution(double alpha, double lambda, double t, double x) -> double
{
    if (!(t > 0.0)) { throw DomainError(0, "analytic_solution requires t > 0"); }
    if (!(lambda > 0.0)) { throw DomainError(0, "analytic_solution requires lambda > 0"); }
    double const spread = 4.0 * lambda * std::pow(t, alpha) / alpha;
    return std::sqrt(1.0 / (std::numbers::pi * spread)) * std::exp(-x * x / spread);
}

inline auto analytic_solution(DomainSpec const& d, double t, double x) -> double
{
    return analytic_solution(d.alpha, d.lambda, t, x);
}

/// The closed-form solution as a differentiable graph in t and x.
inline auto analytic_solution_graph(diffgraph::Graph& g, diffgraph::NodeRef t, diffgraph::NodeRef x, double alpha,
                                    double lambda) -> diffgraph::NodeRef
{
    auto const spread = g.mul(g.constant(4.0 * lambda / alpha), g.pow(t, alpha));
    auto const amplitude = g.pow(g.mul(g.constant(std::numbers::pi), spread), -0.5);
    auto const exponent = g.neg(g.div(g.mul(x, x), spread));
    return g.mul(amplitude, g.exp(exponent));
}

} // namespace cfpinn::conformable
