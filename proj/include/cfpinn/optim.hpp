#pragma once

// Adam and L-BFGS over flat parameter vectors.
//
// An objective is any callable `double(std::span<double const> x,
// std::span<double> grad)` that returns f(x) and writes its gradient.

#include "cfpinn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

namespace cfpinn::optim {

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
    std::int64_t step = 0;
    std::vector<double> m;
    std::vector<double> v;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(std::size_t n = 0, double learning_rate = 1e-3) : m(n, 0.0), v(n, 0.0), lr{learning_rate} {}
};

/// One bias-corrected Adam update of `params` in place.
inline void adam_step(AdamState& s, std::span<double> params, std::span<double const> grad)
{
    if (params.size() != grad.size() || s.m.size() != params.size() || s.v.size() != params.size()) {
        throw ShapeMismatch("adam_step: size mismatch");
    }
    for (double g : grad) {
        if (!std::isfinite(g)) { throw NonFiniteGradient("adam_step: non-finite gradient"); }
    }
    ++s.step;
    double const c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    double const c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * grad[i];
        s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
        double const m_hat = s.m[i] / c1;
        double const v_hat = s.v[i] / c2;
        params[i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
    }
}

// ---------------------------------------------------------------------------
// L-BFGS

struct LbfgsConfig {
    int memory = 50;
    int max_iters = 50000;
    double grad_tol = 1e-8;
    double f_rel_tol = 10.0 * std::numeric_limits<double>::epsilon();
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    int max_line_search_evals = 30;

    void validate() const
    {
        if (memory < 1) { throw InvalidConfig("lbfgs: memory must be >= 1"); }
        if (max_iters < 0) { throw InvalidConfig("lbfgs: max_iters must be >= 0"); }
        if (!(0.0 < wolfe_c1 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
            throw InvalidConfig("lbfgs: need 0 < c1 < c2 < 1");
        }
        if (max_line_search_evals < 1) { throw InvalidConfig("lbfgs: max_line_search_evals must be >= 1"); }
    }
};

struct IterationRecord {
    int iter = 0;
    double value = 0.0;
    double grad_norm = 0.0; // infinity norm
    double step = 0.0;
};

enum class LbfgsStatus { gradient_tolerance, objective_tolerance, max_iterations, line_search_failure };

[[nodiscard]] constexpr auto status_name(LbfgsStatus s) noexcept -> char const*
{
    switch (s) {
    case LbfgsStatus::gradient_tolerance: return "gradient_tolerance";
    case LbfgsStatus::objective_tolerance: return "objective_tolerance";
    case LbfgsStatus::max_iterations: return "max_iterations";
    case LbfgsStatus::line_search_failure: return "line_search_failure";
    }
    return "?";
}

struct LbfgsResult {
    std::vector<double> params;
    double value = 0.0;
    LbfgsStatus status = LbfgsStatus::max_iterations;
    bool line_search_failed = false;
    int iterations = 0;
    int evaluations = 0;
    std::vector<IterationRecord> history;
};

/// Writes iter,loss,grad_norm,step rows.
inline void write_history(std::ostream& os, std::span<IterationRecord const> history)
{
    os << "iter,loss,grad_norm,step\n";
    auto const old = os.precision(17);
    for (auto const& r : history) { os << r.iter << ',' << r.value << ',' << r.grad_norm << ',' << r.step << '\n'; }
    os.precision(old);
}

namespace detail {

inline auto dot(std::span<double const> a, std::span<double const> b) -> double
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) { s += a[i] * b[i]; }
    return s;
}

inline auto inf_norm(std::span<double const> a) -> double
{
    double m = 0.0;
    for (double v : a) { m = std::max(m, std::abs(v)); }
    return m;
}

/// Minimiser of the cubic interpolating (a, fa, da) and (b, fb, db), or NaN
/// when it does not exist.
inline auto cubic_min(double a, double fa, double da, double b, double fb, double db) -> double
{
    double const d1 = da + db - 3.0 * (fa - fb) / (a - b);
    double const disc = d1 * d1 - da * db;
    if (disc < 0.0) { return std::numeric_limits<double>::quiet_NaN(); }
    double const d2 = std::copysign(std::sqrt(disc), b - a);
    return b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
}

struct Trial {
    double step = 0.0;
    double value = 0.0;
    double slope = 0.0;
    std::vector<double> x;
    std::vector<double> grad;
};

/// Strong-Wolfe line search along `dir` (bracketing, then zoom with
/// safeguarded cubic interpolation). Returns false when no acceptable step
/// was found within the evaluation budget.
template <class Objective>
auto strong_wolfe(Objective& f, std::span<double const> x0, double f0, double slope0, std::span<double const> dir,
                  LbfgsConfig const& cfg, int& evals, Trial& accepted) -> bool
{
    auto const n = x0.size();
    auto evaluate = [&](double step) {
        Trial t;
        t.step = step;
        t.x.resize(n);
        t.grad.resize(n);
        for (std::size_t i = 0; i < n; ++i) { t.x[i] = x0[i] + step * dir[i]; }
        t.value = f(std::span<double const>{t.x}, std::span<double>{t.grad});
        ++evals;
        t.slope = dot(t.grad, dir);
        return t;
    };
    auto armijo = [&](Trial const& t) { return t.value <= f0 + cfg.wolfe_c1 * t.step * slope0; };
    auto curvature = [&](Trial const& t) { return std::abs(t.slope) <= -cfg.wolfe_c2 * slope0; };

    int budget = cfg.max_line_search_evals;
    Trial lo{0.0, f0, slope0, {}, {}};
    Trial hi;
    double step = 1.0;
    bool bracketed = false;
    for (int i = 0; budget > 0; ++i) {
        Trial t = evaluate(step);
        --budget;
        if (!std::isfinite(t.value)) {
            // Stepped outside where the objective is representable: shrink.
            hi = std::move(t);
            hi.value = std::numeric_limits<double>::infinity();
            bracketed = true;
            break;
        }
        if (!armijo(t) || (i > 0 && t.value >= lo.value)) {
            hi = std::move(t);
            bracketed = true;
            break;
        }
        if (curvature(t)) {
            accepted = std::move(t);
            return true;
        }
        if (t.slope >= 0.0) {
            hi = std::move(lo);
            lo = std::move(t);
            bracketed = true;
            break;
        }
        lo = std::move(t);
        step *= 2.0;
    }
    if (!bracketed) { return false; }

    // Zoom: lo always satisfies Armijo and has the lowest value seen.
    while (budget > 0) {
        double const a = std::min(lo.step, hi.step);
        double const b = std::max(lo.step, hi.step);
        double const width = b - a;
        if (width <= std::numeric_limits<double>::epsilon() * std::max(1.0, b)) { break; }
        double trial = std::isfinite(hi.value) ? cubic_min(lo.step, lo.value, lo.slope, hi.step, hi.value, hi.slope)
                                               : std::numeric_limits<double>::quiet_NaN();
        if (!std::isfinite(trial) || trial < a + 0.1 * width || trial > b - 0.1 * width) { trial = 0.5 * (a + b); }
        Trial t = evaluate(trial);
        --budget;
        if (!std::isfinite(t.value) || !armijo(t) || t.value >= lo.value) {
            if (!std::isfinite(t.value)) { t.value = std::numeric_limits<double>::infinity(); }
            hi = std::move(t);
            continue;
        }
        if (curvature(t)) {
            accepted = std::move(t);
            return true;
        }
        if (t.slope * (hi.step - lo.step) >= 0.0) { hi = std::move(lo); }
        lo = std::move(t);
    }
    return false;
}

} // namespace detail

/// Limited-memory BFGS (two-loop recursion) with a strong-Wolfe line search
/// and unit initial trial step. Stops on ||g||_inf <= grad_tol, on a relative
/// decrease <= f_rel_tol, or after max_iters. A failed line search first
/// drops the curvature memory and retries along -g; a second failure ends
/// the run with the best point so far and line_search_failed set.
template <class Objective>
auto lbfgs_minimize(Objective&& f, std::vector<double> x0, LbfgsConfig const& cfg) -> LbfgsResult
{
    cfg.validate();
    auto const n = x0.size();
    LbfgsResult res;
    res.params = std::move(x0);
    std::vector<double> g(n);
    double fx = f(std::span<double const>{res.params}, std::span<double>{g});
    res.evaluations = 1;
    if (!std::isfinite(fx)) { throw NonFiniteObjective("lbfgs: objective is not finite at the start point"); }
    res.value = fx;
    res.history.push_back({0, fx, detail::inf_norm(g), 0.0});

    struct Pair {
        std::vector<double> s;
        std::vector<double> y;
        double rho;
    };
    std::deque<Pair> memory;
    std::vector<double> dir(n);
    std::vector<double> alpha(static_cast<std::size_t>(cfg.memory));

    if (detail::inf_norm(g) <= cfg.grad_tol) {
        res.status = LbfgsStatus::gradient_tolerance;
        return res;
    }

    res.status = LbfgsStatus::max_iterations;
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        // Two-loop recursion: dir = -H g.
        for (std::size_t i = 0; i < n; ++i) { dir[i] = -g[i]; }
        for (std::size_t k = memory.size(); k-- > 0;) {
            auto const& p = memory[k];
            alpha[k] = p.rho * detail::dot(p.s, dir);
            for (std::size_t i = 0; i < n; ++i) { dir[i] -= alpha[k] * p.y[i]; }
        }
        if (!memory.empty()) {
            auto const& last = memory.back();
            double const gamma = detail::dot(last.s, last.y) / detail::dot(last.y, last.y);
            for (auto& d : dir) { d *= gamma; }
        }
        for (std::size_t k = 0; k < memory.size(); ++k) {
            auto const& p = memory[k];
            double const beta = p.rho * detail::dot(p.y, dir);
            for (std::size_t i = 0; i < n; ++i) { dir[i] += (alpha[k] - beta) * p.s[i]; }
        }

        double slope = detail::dot(g, dir);
        if (!(slope < 0.0)) {
            memory.clear();
            for (std::size_t i = 0; i < n; ++i) { dir[i] = -g[i]; }
            slope = detail::dot(g, dir);
        }

        detail::Trial next;
        bool ok = detail::strong_wolfe(f, res.params, fx, slope, dir, cfg, res.evaluations, next);
        if (!ok && !memory.empty()) {
            memory.clear();
            for (std::size_t i = 0; i < n; ++i) { dir[i] = -g[i]; }
            slope = detail::dot(g, dir);
            ok = detail::strong_wolfe(f, res.params, fx, slope, dir, cfg, res.evaluations, next);
        }
        if (!ok) {
            res.status = LbfgsStatus::line_search_failure;
            res.line_search_failed = true;
            break;
        }

        Pair pair{std::vector<double>(n), std::vector<double>(n), 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            pair.s[i] = next.x[i] - res.params[i];
            pair.y[i] = next.grad[i] - g[i];
        }
        double const sy = detail::dot(pair.s, pair.y);
        double const s_norm = std::sqrt(detail::dot(pair.s, pair.s));
        double const y_norm = std::sqrt(detail::dot(pair.y, pair.y));
        if (sy > 1e-10 * s_norm * y_norm) {
            pair.rho = 1.0 / sy;
            memory.push_back(std::move(pair));
            if (memory.size() > static_cast<std::size_t>(cfg.memory)) { memory.pop_front(); }
        }

        double const f_prev = fx;
        res.params = std::move(next.x);
        g = std::move(next.grad);
        fx = next.value;
        res.value = fx;
        res.iterations = iter;
        double const g_norm = detail::inf_norm(g);
        res.history.push_back({iter, fx, g_norm, next.step});

        if (g_norm <= cfg.grad_tol) {
            res.status = LbfgsStatus::gradient_tolerance;
            break;
        }
        double const scale = std::max({std::abs(f_prev), std::abs(fx), 1.0});
        if ((f_prev - fx) / scale <= cfg.f_rel_tol) {
            res.status = LbfgsStatus::objective_tolerance;
            break;
        }
    }
    return res;
}

} // namespace cfpinn::optim
