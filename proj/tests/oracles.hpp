#pragma once

// Independent numeric checks shared by the unit tests and the acceptance
// runner. Each returns the worst relative error it saw.

#include "cfpinn/conformable.hpp"
#include "cfpinn/losses.hpp"
#include "cfpinn/net.hpp"
#include "cfpinn/sampling.hpp"
#include "reference_mlp.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace cfpinn::test {

inline constexpr std::array<double, 5> law_powers{-1.0, 0.5, 1.0, 2.0, 3.0};
inline constexpr std::array<double, 4> law_alphas{0.3, 0.5, 0.8, 1.0};
inline constexpr std::array<double, 3> law_times{0.1, 1.0, 4.0};

struct LawReport {
    double power = 0.0;
    double constant = 0.0; // absolute, the exact value is 0
    double linearity = 0.0;
    double product = 0.0;
    double quotient = 0.0;

    [[nodiscard]] auto worst() const -> double { return std::max({power, constant, linearity, product, quotient}); }
};

/// Operator laws of the conformable derivative over the (p, alpha, t)
/// lattice. The second function in the pair laws is g(t) = exp(t / 3) + t^2.
inline auto conformable_laws() -> LawReport
{
    using diffgraph::Bindings;
    LawReport r;
    for (double alpha : law_alphas) {
        for (double p : law_powers) {
            diffgraph::Graph g;
            auto const t = g.variable("t");
            auto const f = g.pow(t, p);
            auto const h = g.add(g.exp(g.div(t, g.constant(3.0))), g.mul(t, t));
            auto const tf = conformable::conformable_derivative(g, f, t, alpha);
            auto const th = conformable::conformable_derivative(g, h, t, alpha);
            auto const tc = conformable::conformable_derivative(g, g.constant(7.0), t, alpha);
            auto const lin = conformable::conformable_derivative(g, g.add(g.mul(g.constant(2.5), f), g.mul(g.constant(-1.5), h)), t, alpha);
            auto const prod = conformable::conformable_derivative(g, g.mul(f, h), t, alpha);
            auto const quot = conformable::conformable_derivative(g, g.div(f, h), t, alpha);
            for (double tv : law_times) {
                Bindings b;
                b.set(t, tv);
                auto v = [&](diffgraph::NodeRef n) { return diffgraph::eval(g, n, b); };
                double const fv = std::pow(tv, p);
                double const hv = std::exp(tv / 3.0) + tv * tv;
                double const tfv = v(tf);
                double const thv = v(th);
                r.power = std::max(r.power, rel_err(tfv, p * std::pow(tv, p - alpha)));
                r.constant = std::max(r.constant, std::abs(v(tc)));
                r.linearity = std::max(r.linearity, rel_err(v(lin), 2.5 * tfv - 1.5 * thv));
                r.product = std::max(r.product, rel_err(v(prod), fv * thv + hv * tfv));
                r.quotient = std::max(r.quotient, rel_err(v(quot), (hv * tfv - fv * thv) / (hv * hv)));
            }
        }
    }
    return r;
}

/// Limit definition (f(t + eps t^(1-alpha)) - f(t)) / eps against the
/// operator, for f = t^p over the lattice.
inline auto conformable_epsilon_limit(double eps) -> double
{
    double worst = 0.0;
    for (double alpha : law_alphas) {
        for (double p : law_powers) {
            diffgraph::Graph g;
            auto const t = g.variable("t");
            auto const tf = conformable::conformable_derivative(g, g.pow(t, p), t, alpha);
            for (double tv : law_times) {
                diffgraph::Bindings b;
                b.set(t, tv);
                double const limit = (std::pow(tv + eps * std::pow(tv, 1.0 - alpha), p) - std::pow(tv, p)) / eps;
                worst = std::max(worst, rel_err(diffgraph::eval(g, tf, b), limit));
            }
        }
    }
    return worst;
}

/// Largest |f(t, x)| of the closed-form solution at random domain points.
inline auto exact_residual_max(double alpha, double lambda, std::size_t n, std::uint64_t seed) -> double
{
    conformable::DomainSpec const d{.alpha = alpha, .lambda = lambda};
    diffgraph::Graph g;
    auto const t = g.variable("t");
    auto const x = g.variable("x");
    auto const u = conformable::analytic_solution_graph(g, t, x, alpha, lambda);
    auto const f = conformable::residual(g, u, t, x, g.constant(lambda), alpha);
    std::mt19937_64 rng{seed};
    std::uniform_real_distribution<double> ut{d.t_lo, d.t_hi};
    std::uniform_real_distribution<double> ux{d.x_lo, d.x_hi};
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        diffgraph::Bindings b;
        b.set(t, ut(rng));
        b.set(x, ux(rng));
        worst = std::max(worst, std::abs(diffgraph::eval(g, f, b)));
    }
    return worst;
}

struct DerivativeReport {
    double u_t = 0.0;
    double u_xx = 0.0;
};

/// Graph u_t and u_xx of a random Glorot network against fourth-order
/// central differences of an independent scalar evaluation.
inline auto network_derivatives_vs_fd(net::Architecture const& arch, std::uint64_t seed, std::size_t n_points)
    -> DerivativeReport
{
    diffgraph::Graph g;
    auto const params = net::make_param_nodes(g, net::param_count(arch));
    auto const t = g.variable("t");
    auto const x = g.variable("x");
    auto const u = net::forward(arch, g, params, t, x);
    auto const u_t = diffgraph::differentiate(g, u, t);
    auto const u_xx = diffgraph::differentiate(g, diffgraph::differentiate(g, u, x), x);
    auto const p = net::init_params(arch, seed);
    std::mt19937_64 rng{seed ^ 0x9e3779b97f4a7c15ULL};
    std::uniform_real_distribution<double> ut{0.05, 0.95};
    std::uniform_real_distribution<double> ux{-0.95, 0.95};
    DerivativeReport r;
    for (std::size_t i = 0; i < n_points; ++i) {
        double const tv = ut(rng);
        double const xv = ux(rng);
        diffgraph::Bindings b;
        net::bind_params(b, params, p);
        b.set(t, tv);
        b.set(x, xv);
        double const fd_t = central_difference4([&](double s) { return reference_mlp(arch, p, s, xv); }, tv, 1e-3);
        double const fd_xx = second_difference4([&](double s) { return reference_mlp(arch, p, tv, s); }, xv, 2e-3);
        r.u_t = std::max(r.u_t, rel_err(diffgraph::eval(g, u_t, b), fd_t));
        r.u_xx = std::max(r.u_xx, rel_err(diffgraph::eval(g, u_xx, b), fd_xx));
    }
    return r;
}

/// Analytic loss gradient of `objective` against fourth-order central
/// differences of its value along `n_coords` random coordinates (plus every
/// index in `always`).
template <class Objective>
auto loss_gradient_vs_fd(Objective& objective, std::vector<double> const& theta, std::size_t n_coords,
                         std::uint64_t seed, std::vector<std::size_t> const& always = {}) -> double
{
    std::vector<double> grad(theta.size());
    objective(std::span<double const>{theta}, std::span<double>{grad});
    std::vector<std::size_t> coords = always;
    std::mt19937_64 rng{seed};
    std::uniform_int_distribution<std::size_t> pick{0, theta.size() - 1};
    while (coords.size() < always.size() + n_coords) { coords.push_back(pick(rng)); }
    double worst = 0.0;
    std::vector<double> probe = theta;
    std::vector<double> scratch(theta.size());
    for (auto k : coords) {
        auto along = [&](double v) {
            probe[k] = v;
            double const f = objective(std::span<double const>{probe}, std::span<double>{scratch});
            probe[k] = theta[k];
            return f;
        };
        double const h = 1e-3 * std::max(1.0, std::abs(theta[k]));
        worst = std::max(worst, rel_err(grad[k], central_difference4(along, theta[k], h)));
    }
    return worst;
}

struct LossGradientReport {
    double forward = 0.0;
    double inverse = 0.0;
};

/// Batched loss gradients with 10 labelled and 20 collocation points,
/// forward and inverse, against finite differences.
inline auto loss_gradients_vs_fd(std::uint64_t seed, net::Architecture const& arch = net::Architecture{{2, 5, 5, 1}})
    -> LossGradientReport
{
    conformable::DomainSpec const d{};
    auto const ib = sampling::sample_ic_bc(d, 5, 5, seed);
    auto const colloc = sampling::sample_collocation(d, 20, seed);
    auto const data = sampling::sample_interior_data(d, 10, seed);
    auto const p = net::init_params(arch, seed);
    LossGradientReport r;

    losses::ForwardObjective fwd{arch, d, ib.initial, ib.boundary, colloc, {1.0, 0.1}};
    r.forward = loss_gradient_vs_fd(fwd, p, 10, seed + 1);

    losses::InverseObjective inv{arch, d.alpha, data};
    auto theta = p;
    theta.push_back(0.3);
    r.inverse = loss_gradient_vs_fd(inv, theta, 10, seed + 2, {theta.size() - 1});
    return r;
}

} // namespace cfpinn::test
