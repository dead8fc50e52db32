#pragma once

// Fully connected tanh network u(t, x) with a linear output layer.
//
// Parameters live in one flat vector, layer by layer: the weight matrix of a
// layer (out x in, row-major, so entry (o, i) sits at o * in + i) followed by
// its out biases.

#include "cfpinn/diffgraph.hpp"
#include "cfpinn/errors.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cfpinn::net {

using ParamVector = std::vector<double>;

class Architecture {
  public:
    Architecture() = default;

    /// Throws InvalidConfig unless widths = (2, hidden..., 1) with every
    /// width >= 1.
    explicit Architecture(std::vector<int> widths) : widths_{std::move(widths)}
    {
        if (widths_.size() < 2) { throw InvalidConfig("architecture needs at least an input and an output layer"); }
        if (widths_.front() != 2) { throw InvalidConfig("architecture input width must be 2 (t, x)"); }
        if (widths_.back() != 1) { throw InvalidConfig("architecture output width must be 1"); }
        for (int w : widths_) {
            if (w < 1) { throw InvalidConfig("architecture widths must be >= 1"); }
        }
    }

    /// `hidden_layers` tanh layers of `width` neurons each.
    static auto uniform(int hidden_layers, int width) -> Architecture
    {
        if (hidden_layers < 0) { throw InvalidConfig("hidden layer count must be >= 0"); }
        std::vector<int> w{2};
        w.insert(w.end(), static_cast<std::size_t>(hidden_layers), width);
        w.push_back(1);
        return Architecture{std::move(w)};
    }

    /// Eight hidden layers of 20 neurons: 3021 parameters.
    static auto default_pinn() -> Architecture { return uniform(8, 20); }

    [[nodiscard]] auto widths() const noexcept -> std::span<int const> { return widths_; }
    [[nodiscard]] auto layer_count() const noexcept -> std::size_t { return widths_.size() - 1; }
    [[nodiscard]] auto fan_in(std::size_t layer) const -> int { return widths_.at(layer); }
    [[nodiscard]] auto fan_out(std::size_t layer) const -> int { return widths_.at(layer + 1); }

    /// Offset of the first weight of `layer` in the flat parameter vector.
    [[nodiscard]] auto weight_offset(std::size_t layer) const -> std::size_t
    {
        std::size_t off = 0;
        for (std::size_t l = 0; l < layer; ++l) {
            off += static_cast<std::size_t>(fan_in(l) * fan_out(l) + fan_out(l));
        }
        return off;
    }
    [[nodiscard]] auto bias_offset(std::size_t layer) const -> std::size_t
    {
        return weight_offset(layer) + static_cast<std::size_t>(fan_in(layer) * fan_out(layer));
    }

    [[nodiscard]] auto to_string() const -> std::string
    {
        std::string s;
        for (std::size_t i = 0; i < widths_.size(); ++i) {
            if (i != 0) { s += ','; }
            s += std::to_string(widths_[i]);
        }
        return s;
    }

    friend auto operator==(Architecture const&, Architecture const&) -> bool = default;

  private:
    std::vector<int> widths_{2, 1};
};

[[nodiscard]] inline auto param_count(Architecture const& arch) -> std::size_t
{
    return arch.weight_offset(arch.layer_count());
}

/// Glorot-uniform weights, zero biases.
[[nodiscard]] inline auto init_params(Architecture const& arch, std::uint64_t seed) -> ParamVector
{
    ParamVector p(param_count(arch), 0.0);
    std::mt19937_64 rng{seed};
    for (std::size_t l = 0; l < arch.layer_count(); ++l) {
        auto const in = arch.fan_in(l);
        auto const out = arch.fan_out(l);
        double const bound = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> dist{-bound, bound};
        auto const off = arch.weight_offset(l);
        for (std::size_t k = 0; k < static_cast<std::size_t>(in * out); ++k) { p[off + k] = dist(rng); }
    }
    return p;
}

/// Optional affine map of the inputs onto [-1, 1]^2. The identity by default.
struct InputScaling {
    double t_scale = 1.0;
    double t_shift = 0.0;
    double x_scale = 1.0;
    double x_shift = 0.0;

    static auto unit_box(double t_lo, double t_hi, double x_lo, double x_hi) -> InputScaling
    {
        return {2.0 / (t_hi - t_lo), -(t_hi + t_lo) / (t_hi - t_lo), 2.0 / (x_hi - x_lo),
                -(x_hi + x_lo) / (x_hi - x_lo)};
    }

    [[nodiscard]] auto is_identity() const noexcept -> bool
    {
        return t_scale == 1.0 && t_shift == 0.0 && x_scale == 1.0 && x_shift == 0.0;
    }
};

/// Builds u(t, x) into `graph`. Hidden layers use tanh, the output layer is
/// linear.
inline auto forward(Architecture const& arch, diffgraph::Graph& graph, std::span<diffgraph::NodeRef const> param_nodes,
                    diffgraph::NodeRef t, diffgraph::NodeRef x, InputScaling const& scaling = {})
    -> diffgraph::NodeRef
{
    if (param_nodes.size() != param_count(arch)) {
        throw ShapeMismatch("forward: expected " + std::to_string(param_count(arch)) + " parameter nodes, got " +
                            std::to_string(param_nodes.size()));
    }
    std::vector<diffgraph::NodeRef> h;
    if (scaling.is_identity()) {
        h = {t, x};
    } else {
        h = {graph.add(graph.mul(graph.constant(scaling.t_scale), t), graph.constant(scaling.t_shift)),
             graph.add(graph.mul(graph.constant(scaling.x_scale), x), graph.constant(scaling.x_shift))};
    }
    for (std::size_t l = 0; l < arch.layer_count(); ++l) {
        auto const in = static_cast<std::size_t>(arch.fan_in(l));
        auto const out = static_cast<std::size_t>(arch.fan_out(l));
        auto const w_off = arch.weight_offset(l);
        auto const b_off = arch.bias_offset(l);
        bool const last = l + 1 == arch.layer_count();
        std::vector<diffgraph::NodeRef> next;
        next.reserve(out);
        for (std::size_t o = 0; o < out; ++o) {
            auto z = graph.mul(param_nodes[w_off + o * in], h[0]);
            for (std::size_t i = 1; i < in; ++i) { z = graph.add(z, graph.mul(param_nodes[w_off + o * in + i], h[i])); }
            z = graph.add(z, param_nodes[b_off + o]);
            next.push_back(last ? z : graph.tanh(z));
        }
        h = std::move(next);
    }
    return h.front();
}

/// One input-variable node per parameter, in flat-vector order.
inline auto make_param_nodes(diffgraph::Graph& graph, std::size_t count) -> std::vector<diffgraph::NodeRef>
{
    std::vector<diffgraph::NodeRef> nodes;
    nodes.reserve(count);
    for (std::size_t i = 0; i < count; ++i) { nodes.push_back(graph.variable("theta" + std::to_string(i))); }
    return nodes;
}

inline void bind_params(diffgraph::Bindings& bindings, std::span<diffgraph::NodeRef const> nodes,
                        std::span<double const> values)
{
    if (nodes.size() != values.size()) { throw ShapeMismatch("bind_params: node/value count mismatch"); }
    for (std::size_t i = 0; i < nodes.size(); ++i) { bindings.set(nodes[i], values[i]); }
}

} // namespace cfpinn::net
