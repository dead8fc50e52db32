#pragma once

// Training and collocation point sets. Every sampler owns a private generator
// seeded from (seed, stream tag), so the sets drawn from one seed are
// independent of each other and each call is a pure function of its inputs.

#include "cfpinn/conformable.hpp"
#include "cfpinn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace cfpinn::sampling {

enum class Role { initial, boundary, collocation, interior_data };

[[nodiscard]] constexpr auto role_name(Role r) noexcept -> std::string_view
{
    switch (r) {
    case Role::initial: return "initial";
    case Role::boundary: return "boundary";
    case Role::collocation: return "collocation";
    case Role::interior_data: return "interior-data";
    }
    return "?";
}

struct PointSet {
    Role role = Role::collocation;
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> targets; // empty for collocation sets

    [[nodiscard]] auto size() const noexcept -> std::size_t { return t.size(); }
    [[nodiscard]] auto has_targets() const noexcept -> bool { return !targets.empty(); }
};

namespace detail {

enum class Stream : std::uint32_t { collocation = 1, initial_boundary = 2, interior = 3, noise = 4 };

inline auto make_rng(std::uint64_t seed, Stream stream) -> std::mt19937_64
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64{seq};
}

inline void require_positive(std::size_t n, char const* what)
{
    if (n < 1) { throw InvalidConfig(std::string{what} + " must be >= 1"); }
}

inline void fill_targets(PointSet& p, conformable::DomainSpec const& d)
{
    p.targets.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) { p.targets[i] = conformable::analytic_solution(d, p.t[i], p.x[i]); }
}

} // namespace detail

/// Latin hypercube sample: each axis is cut into n equal strata holding
/// exactly one point each.
inline auto sample_collocation(conformable::DomainSpec const& d, std::size_t n_f, std::uint64_t seed) -> PointSet
{
    detail::require_positive(n_f, "n_f");
    auto rng = detail::make_rng(seed, detail::Stream::collocation);
    std::uniform_real_distribution<double> unit{0.0, 1.0};

    auto axis = [&](double lo, double hi) {
        std::vector<std::size_t> strata(n_f);
        std::iota(strata.begin(), strata.end(), std::size_t{0});
        std::shuffle(strata.begin(), strata.end(), rng);
        std::vector<double> out(n_f);
        double const width = (hi - lo) / static_cast<double>(n_f);
        for (std::size_t i = 0; i < n_f; ++i) {
            double const v = lo + (static_cast<double>(strata[i]) + unit(rng)) * width;
            out[i] = std::clamp(v, lo, hi);
        }
        return out;
    };

    PointSet p;
    p.role = Role::collocation;
    p.t = axis(d.t_lo, d.t_hi);
    p.x = axis(d.x_lo, d.x_hi);
    return p;
}

struct InitialBoundary {
    PointSet initial;
    PointSet boundary;
};

/// Initial points uniform in x on the slice t = t_lo; boundary points
/// uniform in t, alternating between x = x_lo and x = x_hi. Targets come
/// from the closed-form solution.
inline auto sample_ic_bc(conformable::DomainSpec const& d, std::size_t n_ic, std::size_t n_bc, std::uint64_t seed)
    -> InitialBoundary
{
    detail::require_positive(n_ic, "n_ic");
    detail::require_positive(n_bc, "n_bc");
    auto rng = detail::make_rng(seed, detail::Stream::initial_boundary);
    std::uniform_real_distribution<double> xs{d.x_lo, d.x_hi};
    std::uniform_real_distribution<double> ts{d.t_lo, d.t_hi};

    InitialBoundary out;
    out.initial.role = Role::initial;
    for (std::size_t i = 0; i < n_ic; ++i) {
        out.initial.t.push_back(d.t_lo);
        out.initial.x.push_back(xs(rng));
    }
    out.boundary.role = Role::boundary;
    for (std::size_t i = 0; i < n_bc; ++i) {
        out.boundary.t.push_back(ts(rng));
        out.boundary.x.push_back(i % 2 == 0 ? d.x_lo : d.x_hi);
    }
    detail::fill_targets(out.initial, d);
    detail::fill_targets(out.boundary, d);
    return out;
}

/// Uniform random labelled points over the whole rectangle.
inline auto sample_interior_data(conformable::DomainSpec const& d, std::size_t n_data, std::uint64_t seed) -> PointSet
{
    detail::require_positive(n_data, "n_data");
    auto rng = detail::make_rng(seed, detail::Stream::interior);
    std::uniform_real_distribution<double> ts{d.t_lo, d.t_hi};
    std::uniform_real_distribution<double> xs{d.x_lo, d.x_hi};
    PointSet p;
    p.role = Role::interior_data;
    p.t.resize(n_data);
    p.x.resize(n_data);
    for (std::size_t i = 0; i < n_data; ++i) {
        p.t[i] = ts(rng);
        p.x[i] = xs(rng);
    }
    detail::fill_targets(p, d);
    return p;
}

/// Population standard deviation.
inline auto standard_deviation(std::vector<double> const& v) -> double
{
    if (v.empty()) { return 0.0; }
    double const mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double e : v) { ss += (e - mean) * (e - mean); }
    return std::sqrt(ss / static_cast<double>(v.size()));
}

/// Adds level * std(targets) * N(0, 1) to every target.
inline auto add_noise(PointSet const& points, double level, std::uint64_t seed) -> PointSet
{
    if (!points.has_targets()) { throw MissingTargets("add_noise: point set has no targets"); }
    if (!(level >= 0.0)) { throw InvalidConfig("add_noise: level must be >= 0"); }
    PointSet out = points;
    if (level == 0.0) { return out; }
    double const scale = level * standard_deviation(points.targets);
    auto rng = detail::make_rng(seed, detail::Stream::noise);
    std::normal_distribution<double> normal{0.0, 1.0};
    for (double& y : out.targets) { y += scale * normal(rng); }
    return out;
}

/// Comma-separated export: role,t,x,target (target blank for collocation).
inline void write_csv(std::ostream& os, PointSet const& p, bool header = true)
{
    if (header) { os << "role,t,x,target\n"; }
    auto const old = os.precision(17);
    for (std::size_t i = 0; i < p.size(); ++i) {
        os << role_name(p.role) << ',' << p.t[i] << ',' << p.x[i] << ',';
        if (p.has_targets()) { os << p.targets[i]; }
        os << '\n';
    }
    os.precision(old);
}

} // namespace cfpinn::sampling
