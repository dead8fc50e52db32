#pragma once

// Mean-square-error losses for forward, weighted-forward and inverse training.
//
//   forward:  w_u (MSE_IC + MSE_BC) + w_f MSE_f
//   inverse:  MSE_data + MSE_f   (residual taken at the data points)
//
// Two routes compute them. forward_loss()/inverse_loss() assemble the loss as
// a diffgraph expression, one subgraph per point. ForwardObjective and
// InverseObjective evaluate the same quantities with the batched jet kernel
// and are what training runs on.

#include "cfpinn/conformable.hpp"
#include "cfpinn/diffgraph.hpp"
#include "cfpinn/errors.hpp"
#include "cfpinn/jet.hpp"
#include "cfpinn/net.hpp"
#include "cfpinn/sampling.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

namespace cfpinn::losses {

struct LossWeights {
    double w_u = 1.0;
    double w_f = 1.0;

    void validate() const
    {
        if (!(w_u >= 0.0) || !(w_f >= 0.0)) { throw InvalidConfig("loss weights must be >= 0"); }
        if (w_u == 0.0 && w_f == 0.0) { throw InvalidConfig("loss weights must not both be zero"); }
    }

    /// The weighting used for orders close to 1.
    static constexpr auto near_integer() -> LossWeights { return {1.0, 0.1}; }
};

struct LossBreakdown {
    double mse_ic = 0.0;
    double mse_bc = 0.0;
    double mse_u = 0.0;
    double mse_f = 0.0;
    double mse_data = 0.0;
    double total = 0.0;
};

inline auto forward_total(double mse_ic, double mse_bc, double mse_f, LossWeights const& w) -> double
{
    return w.w_u * (mse_ic + mse_bc) + w.w_f * mse_f;
}

inline auto inverse_total(double mse_data, double mse_f) -> double { return mse_data + mse_f; }

inline auto mse(std::span<double const> pred, std::span<double const> target) -> double
{
    if (pred.size() != target.size()) { throw LengthMismatch("mse: prediction and target differ in length"); }
    if (pred.empty()) { throw EmptyInput("mse: empty input"); }
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double const e = pred[i] - target[i];
        s += e * e;
    }
    return s / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// Graph route

struct LossGraph {
    diffgraph::NodeRef total;
    diffgraph::NodeRef mse_ic;
    diffgraph::NodeRef mse_bc;
    diffgraph::NodeRef mse_f;
    diffgraph::NodeRef mse_data;
    LossBreakdown breakdown;
    /// Parameter values plus the coordinates of the collocation points.
    diffgraph::Bindings bindings;
};

namespace detail {

inline auto mean_of(diffgraph::Graph& g, std::vector<diffgraph::NodeRef> const& terms) -> diffgraph::NodeRef
{
    if (terms.empty()) { return g.zero(); }
    auto sum = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) { sum = g.add(sum, terms[i]); }
    return g.div(sum, g.constant(static_cast<double>(terms.size())));
}

inline auto data_misfit(diffgraph::Graph& g, net::Architecture const& arch,
                        std::span<diffgraph::NodeRef const> params, sampling::PointSet const& p,
                        net::InputScaling const& scaling) -> diffgraph::NodeRef
{
    if (p.size() != 0 && !p.has_targets()) { throw MissingTargets("loss: labelled point set has no targets"); }
    std::vector<diffgraph::NodeRef> terms;
    for (std::size_t i = 0; i < p.size(); ++i) {
        auto const u = net::forward(arch, g, params, g.constant(p.t[i]), g.constant(p.x[i]), scaling);
        auto const e = g.sub(u, g.constant(p.targets[i]));
        terms.push_back(g.mul(e, e));
    }
    return mean_of(g, terms);
}

} // namespace detail

/// Forward-problem loss as a graph over `param_nodes`. The returned bindings
/// bind `param_values` and the collocation coordinates.
inline auto forward_loss(diffgraph::Graph& g, net::Architecture const& arch,
                         std::span<diffgraph::NodeRef const> param_nodes, std::span<double const> param_values,
                         sampling::PointSet const& ic, sampling::PointSet const& bc,
                         sampling::PointSet const& colloc, conformable::DomainSpec const& domain,
                         LossWeights const& weights, net::InputScaling const& scaling = {}) -> LossGraph
{
    weights.validate();
    LossGraph out;
    net::bind_params(out.bindings, param_nodes, param_values);
    out.mse_ic = detail::data_misfit(g, arch, param_nodes, ic, scaling);
    out.mse_bc = detail::data_misfit(g, arch, param_nodes, bc, scaling);

    auto const lambda = g.constant(domain.lambda);
    std::vector<diffgraph::NodeRef> terms;
    for (std::size_t i = 0; i < colloc.size(); ++i) {
        auto const t = g.variable("t_f" + std::to_string(i));
        auto const x = g.variable("x_f" + std::to_string(i));
        out.bindings.set(t, colloc.t[i]);
        out.bindings.set(x, colloc.x[i]);
        auto const u = net::forward(arch, g, param_nodes, t, x, scaling);
        auto const r = conformable::residual(g, u, t, x, lambda, domain.alpha);
        terms.push_back(g.mul(r, r));
    }
    out.mse_f = detail::mean_of(g, terms);
    out.mse_data = g.zero();
    out.total = g.add(g.mul(g.constant(weights.w_u), g.add(out.mse_ic, out.mse_bc)),
                      g.mul(g.constant(weights.w_f), out.mse_f));

    diffgraph::NodeRef const roots[] = {out.total, out.mse_ic, out.mse_bc, out.mse_f};
    diffgraph::Tape tape{g, roots};
    tape.forward(out.bindings);
    auto& b = out.breakdown;
    b.mse_ic = tape.value(out.mse_ic);
    b.mse_bc = tape.value(out.mse_bc);
    b.mse_u = b.mse_ic + b.mse_bc;
    b.mse_f = tape.value(out.mse_f);
    b.total = tape.value(out.total);
    return out;
}

/// Inverse-problem loss as a graph over `param_nodes` and the trainable
/// `lambda_node`. The residual is taken at the data points.
inline auto inverse_loss(diffgraph::Graph& g, net::Architecture const& arch,
                         std::span<diffgraph::NodeRef const> param_nodes, std::span<double const> param_values,
                         diffgraph::NodeRef lambda_node, double lambda_value, sampling::PointSet const& data,
                         double alpha, net::InputScaling const& scaling = {}) -> LossGraph
{
    if (!data.has_targets()) { throw MissingTargets("inverse_loss: data set has no targets"); }
    if (!g.is_variable(lambda_node)) { throw NotAVariable("inverse_loss: lambda must be an input variable"); }
    LossGraph out;
    net::bind_params(out.bindings, param_nodes, param_values);
    out.bindings.set(lambda_node, lambda_value);

    std::vector<diffgraph::NodeRef> misfit;
    std::vector<diffgraph::NodeRef> res;
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto const t = g.variable("t_d" + std::to_string(i));
        auto const x = g.variable("x_d" + std::to_string(i));
        out.bindings.set(t, data.t[i]);
        out.bindings.set(x, data.x[i]);
        auto const u = net::forward(arch, g, param_nodes, t, x, scaling);
        auto const e = g.sub(u, g.constant(data.targets[i]));
        misfit.push_back(g.mul(e, e));
        auto const r = conformable::residual(g, u, t, x, lambda_node, alpha);
        res.push_back(g.mul(r, r));
    }
    out.mse_ic = g.zero();
    out.mse_bc = g.zero();
    out.mse_data = detail::mean_of(g, misfit);
    out.mse_f = detail::mean_of(g, res);
    out.total = g.add(out.mse_data, out.mse_f);

    diffgraph::NodeRef const roots[] = {out.total, out.mse_data, out.mse_f};
    diffgraph::Tape tape{g, roots};
    tape.forward(out.bindings);
    out.breakdown.mse_data = tape.value(out.mse_data);
    out.breakdown.mse_f = tape.value(out.mse_f);
    out.breakdown.total = tape.value(out.total);
    return out;
}

// ---------------------------------------------------------------------------
// Batched route

namespace detail {

inline auto to_eigen(std::vector<double> const& v) -> Eigen::VectorXd
{
    return Eigen::Map<Eigen::VectorXd const>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// t^(1 - alpha) at every point.
inline auto conformable_factor(std::vector<double> const& t, double alpha) -> Eigen::VectorXd
{
    Eigen::VectorXd c(static_cast<Eigen::Index>(t.size()));
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] > 0.0)) { throw DomainError(0, "conformable factor requires t > 0"); }
        c[static_cast<Eigen::Index>(i)] = alpha == 1.0 ? 1.0 : std::pow(t[i], 1.0 - alpha);
    }
    return c;
}

} // namespace detail

/// Forward-problem loss and its parameter gradient, evaluated in batch.
class ForwardObjective {
  public:
    ForwardObjective(net::Architecture arch, conformable::DomainSpec domain, sampling::PointSet const& ic,
                     sampling::PointSet const& bc, sampling::PointSet colloc, LossWeights weights,
                     net::InputScaling scaling = {})
        : net_{std::move(arch), scaling}, domain_{domain}, weights_{weights}, colloc_{std::move(colloc)},
          n_ic_{ic.size()}, n_bc_{bc.size()}
    {
        weights_.validate();
        if ((ic.size() != 0 && !ic.has_targets()) || (bc.size() != 0 && !bc.has_targets())) {
            throw MissingTargets("ForwardObjective: initial/boundary sets need targets");
        }
        data_t_ = ic.t;
        data_t_.insert(data_t_.end(), bc.t.begin(), bc.t.end());
        data_x_ = ic.x;
        data_x_.insert(data_x_.end(), bc.x.begin(), bc.x.end());
        std::vector<double> y = ic.targets;
        y.insert(y.end(), bc.targets.begin(), bc.targets.end());
        data_y_ = detail::to_eigen(y);
        factor_ = detail::conformable_factor(colloc_.t, domain_.alpha);
    }

    [[nodiscard]] auto size() const -> std::size_t { return net::param_count(net_.architecture()); }

    /// Loss value; writes the gradient into `grad`.
    auto operator()(std::span<double const> theta, std::span<double> grad) -> double
    {
        auto const b = evaluate(theta, grad);
        return b.total;
    }

    auto breakdown(std::span<double const> theta) -> LossBreakdown { return evaluate(theta, {}); }

  private:
    auto evaluate(std::span<double const> theta, std::span<double> grad) -> LossBreakdown
    {
        bool const want_grad = !grad.empty();
        if (want_grad) { std::fill(grad.begin(), grad.end(), 0.0); }
        LossBreakdown b;
        Eigen::VectorXd const none;

        if (!data_t_.empty()) {
            net_.forward(theta, data_t_, data_x_, net::Channels::values);
            Eigen::VectorXd const e = net_.u() - data_y_;
            auto const ni = static_cast<Eigen::Index>(n_ic_);
            auto const nb = static_cast<Eigen::Index>(n_bc_);
            if (ni > 0) { b.mse_ic = e.head(ni).squaredNorm() / static_cast<double>(ni); }
            if (nb > 0) { b.mse_bc = e.tail(nb).squaredNorm() / static_cast<double>(nb); }
            if (want_grad) {
                Eigen::VectorXd adj(ni + nb);
                if (ni > 0) { adj.head(ni) = (2.0 * weights_.w_u / static_cast<double>(ni)) * e.head(ni); }
                if (nb > 0) { adj.tail(nb) = (2.0 * weights_.w_u / static_cast<double>(nb)) * e.tail(nb); }
                net_.backward(theta, adj, none, none, none, grad);
            }
        }
        if (colloc_.size() != 0) {
            net_.forward(theta, colloc_.t, colloc_.x, net::Channels::jets);
            Eigen::VectorXd const u_xx = net_.u_xx();
            Eigen::VectorXd const r = factor_.cwiseProduct(net_.u_t()) - domain_.lambda * u_xx;
            auto const n = static_cast<double>(colloc_.size());
            b.mse_f = r.squaredNorm() / n;
            if (want_grad) {
                Eigen::VectorXd const rbar = (2.0 * weights_.w_f / n) * r;
                Eigen::VectorXd const adj_u = Eigen::VectorXd::Zero(r.size());
                net_.backward(theta, adj_u, factor_.cwiseProduct(rbar), none, -domain_.lambda * rbar, grad);
            }
        }
        b.mse_u = b.mse_ic + b.mse_bc;
        b.total = forward_total(b.mse_ic, b.mse_bc, b.mse_f, weights_);
        return b;
    }

    net::JetNetwork net_;
    conformable::DomainSpec domain_;
    LossWeights weights_;
    sampling::PointSet colloc_;
    std::size_t n_ic_;
    std::size_t n_bc_;
    std::vector<double> data_t_;
    std::vector<double> data_x_;
    Eigen::VectorXd data_y_;
    Eigen::VectorXd factor_;
};

/// Inverse-problem loss over (network parameters, lambda); lambda is the
/// last coordinate of the optimisation vector.
class InverseObjective {
  public:
    InverseObjective(net::Architecture arch, double alpha, sampling::PointSet data, net::InputScaling scaling = {})
        : net_{std::move(arch), scaling}, alpha_{alpha}, data_{std::move(data)}
    {
        if (!data_.has_targets()) { throw MissingTargets("InverseObjective: data set has no targets"); }
        if (data_.size() == 0) { throw EmptyInput("InverseObjective: empty data set"); }
        y_ = detail::to_eigen(data_.targets);
        factor_ = detail::conformable_factor(data_.t, alpha_);
    }

    [[nodiscard]] auto size() const -> std::size_t { return net::param_count(net_.architecture()) + 1; }

    auto operator()(std::span<double const> theta, std::span<double> grad) -> double
    {
        return evaluate(theta, grad).total;
    }

    auto breakdown(std::span<double const> theta) -> LossBreakdown { return evaluate(theta, {}); }

  private:
    auto evaluate(std::span<double const> theta, std::span<double> grad) -> LossBreakdown
    {
        if (theta.size() != size()) { throw ShapeMismatch("InverseObjective: expected parameters plus lambda"); }
        auto const params = theta.first(theta.size() - 1);
        double const lambda = theta.back();
        net_.forward(params, data_.t, data_.x, net::Channels::jets);
        Eigen::VectorXd const e = net_.u() - y_;
        Eigen::VectorXd const u_xx = net_.u_xx();
        Eigen::VectorXd const r = factor_.cwiseProduct(net_.u_t()) - lambda * u_xx;
        auto const n = static_cast<double>(data_.size());
        LossBreakdown b;
        b.mse_data = e.squaredNorm() / n;
        b.mse_f = r.squaredNorm() / n;
        b.total = inverse_total(b.mse_data, b.mse_f);
        if (!grad.empty()) {
            std::fill(grad.begin(), grad.end(), 0.0);
            Eigen::VectorXd const rbar = (2.0 / n) * r;
            Eigen::VectorXd const none;
            net_.backward(params, (2.0 / n) * e, factor_.cwiseProduct(rbar), none, -lambda * rbar,
                          grad.first(grad.size() - 1));
            grad.back() = -rbar.dot(u_xx);
        }
        return b;
    }

    net::JetNetwork net_;
    double alpha_;
    sampling::PointSet data_;
    Eigen::VectorXd y_;
    Eigen::VectorXd factor_;
};

} // namespace cfpinn::losses
