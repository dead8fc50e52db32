#pragma once

// Scalar computation graphs with graph-growing reverse-mode differentiation.
//
// A Graph is an append-only list of primitive records. Operands always refer
// to earlier records, so index order is a topological order. differentiate()
// appends the derivative as new records of the same graph, which makes the
// result differentiable again; gradient() is the numeric single-sweep
// counterpart used for parameter gradients.

#include "cfpinn/errors.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace cfpinn::diffgraph {

enum class Op : std::uint8_t {
    constant,
    variable,
    add,
    sub,
    mul,
    div,
    neg,
    pow, // operand raised to a constant real exponent
    exp,
    tanh,
    sqrt,
    log,
};

[[nodiscard]] constexpr auto op_name(Op op) noexcept -> char const*
{
    switch (op) {
    case Op::constant: return "constant";
    case Op::variable: return "variable";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::div: return "div";
    case Op::neg: return "neg";
    case Op::pow: return "pow";
    case Op::exp: return "exp";
    case Op::tanh: return "tanh";
    case Op::sqrt: return "sqrt";
    case Op::log: return "log";
    }
    return "?";
}

[[nodiscard]] constexpr auto is_binary(Op op) noexcept -> bool
{
    return op == Op::add || op == Op::sub || op == Op::mul || op == Op::div;
}

[[nodiscard]] constexpr auto is_unary(Op op) noexcept -> bool
{
    return !is_binary(op) && op != Op::constant && op != Op::variable;
}

/// Handle to one record of a Graph. Carries the id of the owning graph so
/// that cross-graph use is detected.
struct NodeRef {
    std::uint32_t index = 0;
    std::uint32_t graph = 0;

    friend constexpr auto operator==(NodeRef, NodeRef) noexcept -> bool = default;
};

struct Node {
    Op op = Op::constant;
    std::uint32_t lhs = 0;
    std::uint32_t rhs = 0;
    double value = 0.0; // constant value, or exponent for Op::pow
};

class Graph;

/// Values of input variables.
class Bindings {
  public:
    void set(NodeRef var, double value) { values_[var.index] = value; }

    [[nodiscard]] auto find(std::uint32_t index) const -> double const*
    {
        auto it = values_.find(index);
        return it == values_.end() ? nullptr : &it->second;
    }

    [[nodiscard]] auto size() const noexcept -> std::size_t { return values_.size(); }

  private:
    std::unordered_map<std::uint32_t, double> values_;
};

namespace detail {

inline auto next_graph_id() -> std::uint32_t
{
    static std::atomic<std::uint32_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

struct NodeKey {
    Op op;
    std::uint32_t lhs;
    std::uint32_t rhs;
    std::uint64_t bits;

    friend auto operator==(NodeKey const&, NodeKey const&) -> bool = default;
};

struct NodeKeyHash {
    auto operator()(NodeKey const& k) const noexcept -> std::size_t
    {
        std::uint64_t h = static_cast<std::uint64_t>(k.op);
        h = h * 0x9E3779B97F4A7C15ULL ^ k.lhs;
        h = h * 0x9E3779B97F4A7C15ULL ^ k.rhs;
        h = h * 0x9E3779B97F4A7C15ULL ^ k.bits;
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

inline auto is_integer(double c) noexcept -> bool { return std::trunc(c) == c; }

/// Applies one primitive. Returns false when the operands are outside the
/// primitive's domain.
inline auto apply(Op op, double a, double b, double c, double& out) noexcept -> bool
{
    switch (op) {
    case Op::add: out = a + b; return true;
    case Op::sub: out = a - b; return true;
    case Op::mul: out = a * b; return true;
    case Op::div:
        if (b == 0.0) { return false; }
        out = a / b;
        return true;
    case Op::neg: out = -a; return true;
    case Op::pow:
        if (!is_integer(c) && a <= 0.0) { return false; }
        if (c < 0.0 && a == 0.0) { return false; }
        out = c == 2.0 ? a * a : std::pow(a, c);
        return true;
    case Op::exp: out = std::exp(a); return true;
    case Op::tanh: out = std::tanh(a); return true;
    case Op::sqrt:
        if (a < 0.0) { return false; }
        out = std::sqrt(a);
        return true;
    case Op::log:
        if (a <= 0.0) { return false; }
        out = std::log(a);
        return true;
    case Op::constant:
    case Op::variable: break;
    }
    return false;
}

inline auto domain_message(Op op) -> std::string
{
    switch (op) {
    case Op::div: return "division by zero";
    case Op::log: return "log of a non-positive value";
    case Op::sqrt: return "sqrt of a negative value";
    case Op::pow: return "power outside its domain";
    default: return std::string{"invalid operand for "} + op_name(op);
    }
}

} // namespace detail

/// Append-only scalar expression graph with structural sharing: identical
/// records are stored once, constants are folded, and the 0/1 identities are
/// simplified on construction.
class Graph {
  public:
    Graph() : id_{detail::next_graph_id()} {}
    Graph(Graph const&) = delete;
    auto operator=(Graph const&) -> Graph& = delete;
    Graph(Graph&&) noexcept = default;
    auto operator=(Graph&&) noexcept -> Graph& = default;
    ~Graph() = default;

    [[nodiscard]] auto id() const noexcept -> std::uint32_t { return id_; }
    [[nodiscard]] auto size() const noexcept -> std::size_t { return nodes_.size(); }

    [[nodiscard]] auto node(NodeRef ref) const -> Node const&
    {
        check(ref);
        return nodes_[ref.index];
    }
    [[nodiscard]] auto nodes() const noexcept -> std::span<Node const> { return nodes_; }

    void check(NodeRef ref) const
    {
        if (ref.graph != id_) { throw InvalidNode("node belongs to a different graph"); }
        if (ref.index >= nodes_.size()) { throw InvalidNode("node index out of range"); }
    }

    [[nodiscard]] auto ref(std::uint32_t index) const noexcept -> NodeRef { return {index, id_}; }

    [[nodiscard]] auto is_variable(NodeRef r) const -> bool { return node(r).op == Op::variable; }
    [[nodiscard]] auto is_constant(NodeRef r) const -> bool { return node(r).op == Op::constant; }

    auto variable(std::string name = {}) -> NodeRef
    {
        auto const idx = static_cast<std::uint32_t>(nodes_.size());
        nodes_.push_back({Op::variable, 0, 0, 0.0});
        names_.emplace(idx, std::move(name));
        return ref(idx);
    }

    [[nodiscard]] auto name(NodeRef var) const -> std::string
    {
        auto it = names_.find(node_index(var));
        return it == names_.end() ? std::string{} : it->second;
    }

    auto constant(double c) -> NodeRef { return intern({Op::constant, 0, 0, c}); }
    auto zero() -> NodeRef { return constant(0.0); }
    auto one() -> NodeRef { return constant(1.0); }

    auto add(NodeRef a, NodeRef b) -> NodeRef
    {
        if (is_const(a, 0.0)) { return b; }
        if (is_const(b, 0.0)) { return a; }
        return binary(Op::add, a, b);
    }

    auto sub(NodeRef a, NodeRef b) -> NodeRef
    {
        if (is_const(b, 0.0)) { return a; }
        if (is_const(a, 0.0)) { return neg(b); }
        if (a == b) { return zero(); }
        return binary(Op::sub, a, b);
    }

    auto mul(NodeRef a, NodeRef b) -> NodeRef
    {
        if (is_const(a, 0.0) || is_const(b, 0.0)) { return zero(); }
        if (is_const(a, 1.0)) { return b; }
        if (is_const(b, 1.0)) { return a; }
        if (is_const(a, -1.0)) { return neg(b); }
        if (is_const(b, -1.0)) { return neg(a); }
        return binary(Op::mul, a, b);
    }

    auto div(NodeRef a, NodeRef b) -> NodeRef
    {
        if (is_const(b, 1.0)) { return a; }
        return binary(Op::div, a, b);
    }

    auto neg(NodeRef a) -> NodeRef
    {
        auto const& n = node(a);
        if (n.op == Op::neg) { return ref(n.lhs); }
        return unary(Op::neg, a);
    }

    auto pow(NodeRef a, double exponent) -> NodeRef
    {
        check(a);
        if (exponent == 0.0) { return one(); }
        if (exponent == 1.0) { return a; }
        return unary(Op::pow, a, exponent);
    }

    auto exp(NodeRef a) -> NodeRef { return unary(Op::exp, a); }
    auto tanh(NodeRef a) -> NodeRef { return unary(Op::tanh, a); }
    auto sqrt(NodeRef a) -> NodeRef { return unary(Op::sqrt, a); }
    auto log(NodeRef a) -> NodeRef { return unary(Op::log, a); }

  private:
    [[nodiscard]] auto node_index(NodeRef r) const -> std::uint32_t
    {
        check(r);
        return r.index;
    }

    [[nodiscard]] auto is_const(NodeRef r, double c) const -> bool
    {
        auto const& n = node(r);
        return n.op == Op::constant && n.value == c;
    }

    auto binary(Op op, NodeRef a, NodeRef b) -> NodeRef
    {
        check(a);
        check(b);
        if ((op == Op::add || op == Op::mul) && b.index < a.index) { std::swap(a, b); }
        auto const& na = nodes_[a.index];
        auto const& nb = nodes_[b.index];
        if (na.op == Op::constant && nb.op == Op::constant) {
            double folded = 0.0;
            if (detail::apply(op, na.value, nb.value, 0.0, folded)) { return constant(folded); }
        }
        return intern({op, a.index, b.index, 0.0});
    }

    auto unary(Op op, NodeRef a, double c = 0.0) -> NodeRef
    {
        check(a);
        auto const& na = nodes_[a.index];
        if (na.op == Op::constant) {
            double folded = 0.0;
            if (detail::apply(op, na.value, 0.0, c, folded)) { return constant(folded); }
        }
        return intern({op, a.index, 0, c});
    }

    auto intern(Node const& n) -> NodeRef
    {
        detail::NodeKey key{n.op, n.lhs, n.rhs, std::bit_cast<std::uint64_t>(n.value)};
        auto [it, inserted] = index_.try_emplace(key, static_cast<std::uint32_t>(nodes_.size()));
        if (inserted) {
            if (nodes_.size() >= std::numeric_limits<std::uint32_t>::max()) {
                throw Error("graph exceeds the maximum node count");
            }
            nodes_.push_back(n);
        }
        return ref(it->second);
    }

    std::uint32_t id_;
    std::vector<Node> nodes_;
    std::unordered_map<detail::NodeKey, std::uint32_t, detail::NodeKeyHash> index_;
    std::unordered_map<std::uint32_t, std::string> names_;
};

/// Appends d(node)/d(wrt) to the graph by reverse accumulation and returns
/// the derivative node. Only records that depend on `wrt` receive adjoints.
inline auto differentiate(Graph& g, NodeRef node, NodeRef wrt) -> NodeRef
{
    g.check(node);
    g.check(wrt);
    if (!g.is_variable(wrt)) { throw NotAVariable("differentiate: wrt is not an input variable"); }
    auto const top = node.index;
    auto const w = wrt.index;
    if (top < w) { return g.zero(); }

    std::vector<char> depends(top + 1, 0);
    depends[w] = 1;
    for (auto i = w + 1; i <= top; ++i) {
        auto const& n = g.nodes()[i];
        if (is_binary(n.op)) {
            depends[i] = static_cast<char>(depends[n.lhs] | depends[n.rhs]);
        } else if (is_unary(n.op)) {
            depends[i] = depends[n.lhs];
        }
    }
    if (!depends[top]) { return g.zero(); }

    constexpr auto none = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> adjoint(top + 1, none);
    adjoint[top] = g.one().index;

    auto accumulate = [&](std::uint32_t target, NodeRef contribution) {
        if (!depends[target]) { return; }
        auto& slot = adjoint[target];
        slot = slot == none ? contribution.index : g.add(g.ref(slot), contribution).index;
    };

    for (auto i = top; i > w; --i) {
        if (!depends[i] || adjoint[i] == none) { continue; }
        Node const n = g.nodes()[i]; // copy: the node list grows below
        auto const bar = g.ref(adjoint[i]);
        auto const self = g.ref(i);
        auto const a = g.ref(n.lhs);
        auto const b = g.ref(n.rhs);
        switch (n.op) {
        case Op::add:
            accumulate(n.lhs, bar);
            accumulate(n.rhs, bar);
            break;
        case Op::sub:
            accumulate(n.lhs, bar);
            if (depends[n.rhs]) { accumulate(n.rhs, g.neg(bar)); }
            break;
        case Op::mul:
            if (depends[n.lhs]) { accumulate(n.lhs, g.mul(bar, b)); }
            if (depends[n.rhs]) { accumulate(n.rhs, g.mul(bar, a)); }
            break;
        case Op::div:
            if (depends[n.lhs]) { accumulate(n.lhs, g.div(bar, b)); }
            if (depends[n.rhs]) { accumulate(n.rhs, g.neg(g.div(g.mul(bar, self), b))); }
            break;
        case Op::neg: accumulate(n.lhs, g.neg(bar)); break;
        case Op::pow: {
            auto const local = g.mul(g.constant(n.value), g.pow(a, n.value - 1.0));
            accumulate(n.lhs, g.mul(bar, local));
            break;
        }
        case Op::exp: accumulate(n.lhs, g.mul(bar, self)); break;
        case Op::tanh: accumulate(n.lhs, g.mul(bar, g.sub(g.one(), g.mul(self, self)))); break;
        case Op::sqrt: accumulate(n.lhs, g.div(bar, g.mul(g.constant(2.0), self))); break;
        case Op::log: accumulate(n.lhs, g.div(bar, a)); break;
        case Op::constant:
        case Op::variable: break;
        }
    }
    return adjoint[w] == none ? g.zero() : g.ref(adjoint[w]);
}

/// Forward values of every node a set of roots depends on. A Tape holds its
/// own buffers, so several tapes may evaluate one finished graph
/// concurrently.
class Tape {
  public:
    Tape(Graph const& g, std::span<NodeRef const> roots) : graph_{&g}
    {
        std::uint32_t top = 0;
        for (auto r : roots) {
            g.check(r);
            top = std::max(top, r.index + 1);
        }
        reachable_.assign(top, 0);
        for (auto r : roots) { reachable_[r.index] = 1; }
        for (auto i = top; i-- > 0;) {
            if (!reachable_[i]) { continue; }
            auto const& n = g.nodes()[i];
            if (is_binary(n.op)) {
                reachable_[n.lhs] = 1;
                reachable_[n.rhs] = 1;
            } else if (is_unary(n.op)) {
                reachable_[n.lhs] = 1;
            }
        }
        values_.assign(top, 0.0);
    }

    void forward(Bindings const& bindings)
    {
        auto const nodes = graph_->nodes();
        for (std::uint32_t i = 0; i < values_.size(); ++i) {
            if (!reachable_[i]) { continue; }
            auto const& n = nodes[i];
            if (n.op == Op::constant) {
                values_[i] = n.value;
            } else if (n.op == Op::variable) {
                auto const* v = bindings.find(i);
                if (v == nullptr) { throw UnboundVariable(i); }
                values_[i] = *v;
            } else {
                double const a = values_[n.lhs];
                double const b = is_binary(n.op) ? values_[n.rhs] : 0.0;
                if (!detail::apply(n.op, a, b, n.value, values_[i])) {
                    throw DomainError(i, detail::domain_message(n.op));
                }
            }
        }
    }

    [[nodiscard]] auto value(NodeRef r) const -> double
    {
        graph_->check(r);
        if (r.index >= values_.size() || !reachable_[r.index]) {
            throw InvalidNode("node is not covered by this tape");
        }
        return values_[r.index];
    }

    /// d(root)/d(params) by one numeric reverse sweep over the recorded
    /// forward values.
    [[nodiscard]] auto gradient(NodeRef root, std::span<NodeRef const> params) const -> std::vector<double>
    {
        graph_->check(root);
        if (root.index >= values_.size() || !reachable_[root.index]) {
            throw InvalidNode("gradient root is not covered by this tape");
        }
        for (auto p : params) {
            graph_->check(p);
            if (!graph_->is_variable(p)) { throw NotAVariable("gradient: parameter is not an input variable"); }
        }
        auto const nodes = graph_->nodes();
        std::vector<double> bar(root.index + 1, 0.0);
        bar[root.index] = 1.0;
        for (auto i = root.index + 1; i-- > 0;) {
            double const adj = bar[i];
            if (adj == 0.0 || !reachable_[i]) { continue; }
            auto const& n = nodes[i];
            double const a = is_binary(n.op) || is_unary(n.op) ? values_[n.lhs] : 0.0;
            double const y = values_[i];
            switch (n.op) {
            case Op::add:
                bar[n.lhs] += adj;
                bar[n.rhs] += adj;
                break;
            case Op::sub:
                bar[n.lhs] += adj;
                bar[n.rhs] -= adj;
                break;
            case Op::mul:
                bar[n.lhs] += adj * values_[n.rhs];
                bar[n.rhs] += adj * a;
                break;
            case Op::div:
                bar[n.lhs] += adj / values_[n.rhs];
                bar[n.rhs] -= adj * y / values_[n.rhs];
                break;
            case Op::neg: bar[n.lhs] -= adj; break;
            case Op::pow:
                bar[n.lhs] += adj * n.value * (n.value == 2.0 ? a : std::pow(a, n.value - 1.0));
                break;
            case Op::exp: bar[n.lhs] += adj * y; break;
            case Op::tanh: bar[n.lhs] += adj * (1.0 - y * y); break;
            case Op::sqrt: bar[n.lhs] += adj / (2.0 * y); break;
            case Op::log: bar[n.lhs] += adj / a; break;
            case Op::constant:
            case Op::variable: break;
            }
        }
        std::vector<double> out;
        out.reserve(params.size());
        for (auto p : params) { out.push_back(p.index < bar.size() ? bar[p.index] : 0.0); }
        return out;
    }

  private:
    Graph const* graph_;
    std::vector<char> reachable_;
    std::vector<double> values_;
};

/// Value of `node` at the given bindings.
inline auto eval(Graph const& g, NodeRef node, Bindings const& bindings) -> double
{
    NodeRef const roots[] = {node};
    Tape tape{g, roots};
    tape.forward(bindings);
    return tape.value(node);
}

/// d(loss)/d(p) for every p in params, by a single reverse sweep.
inline auto gradient(Graph const& g, NodeRef loss, std::span<NodeRef const> params, Bindings const& bindings)
    -> std::vector<double>
{
    NodeRef const roots[] = {loss};
    Tape tape{g, roots};
    tape.forward(bindings);
    return tape.gradient(loss, params);
}

} // namespace cfpinn::diffgraph
