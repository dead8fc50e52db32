#pragma once

// Batched evaluation of the network together with its space-time derivatives
// u_t, u_x and u_xx, and the matching reverse pass for parameter gradients.
//
// Each layer carries a stack of four channel blocks (value, d/dt, d/dx,
// d2/dx2), one column per point. A dense layer maps every block by the same
// weight matrix (the bias only enters the value block); tanh mixes them as
//
//   h    = tanh(z)                 d1 = 1 - h^2
//   h_t  = d1 z_t                  d2 = -2 h d1
//   h_x  = d1 z_x                  d3 = -2 d1^2 - 2 h d2
//   h_xx = d1 z_xx + d2 z_x^2
//
// The values-only mode keeps just the first block.

#include "cfpinn/errors.hpp"
#include "cfpinn/net.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace cfpinn::net {

enum class Channels { values = 1, jets = 4 };

class JetNetwork {
  public:
    using Matrix = Eigen::MatrixXd;
    using RowMajorMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> const>;
    using RowMajorMutMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

    explicit JetNetwork(Architecture arch, InputScaling scaling = {})
        : arch_{std::move(arch)}, scaling_{scaling}, inputs_(arch_.layer_count()), pre_(arch_.layer_count())
    {}

    [[nodiscard]] auto architecture() const noexcept -> Architecture const& { return arch_; }
    [[nodiscard]] auto point_count() const noexcept -> Eigen::Index { return n_; }

    /// Evaluates the network at the points (t[i], x[i]) and records what the
    /// reverse pass needs.
    void forward(std::span<double const> params, std::span<double const> t, std::span<double const> x,
                 Channels channels)
    {
        if (params.size() != param_count(arch_)) { throw ShapeMismatch("JetNetwork: parameter count mismatch"); }
        if (t.size() != x.size()) { throw LengthMismatch("JetNetwork: t and x differ in length"); }
        k_ = static_cast<Eigen::Index>(channels);
        n_ = static_cast<Eigen::Index>(t.size());

        auto& s0 = inputs_[0];
        s0.setZero(2, k_ * n_);
        for (Eigen::Index i = 0; i < n_; ++i) {
            s0(0, i) = scaling_.t_scale * t[static_cast<std::size_t>(i)] + scaling_.t_shift;
            s0(1, i) = scaling_.x_scale * x[static_cast<std::size_t>(i)] + scaling_.x_shift;
        }
        if (k_ == 4) {
            s0.row(0).segment(n_, n_).setConstant(scaling_.t_scale);
            s0.row(1).segment(2 * n_, n_).setConstant(scaling_.x_scale);
        }

        auto const layers = arch_.layer_count();
        for (std::size_t l = 0; l < layers; ++l) {
            // Owned copies: Eigen's kernels peel by address, so products over
            // maps of caller memory could round differently between processes.
            Matrix const w = weights(params, l);
            Eigen::VectorXd const b = biases(params, l);
            auto& z = pre_[l];
            z.noalias() = w * inputs_[l];
            z.leftCols(n_).colwise() += b;
            if (l + 1 == layers) { break; }
            auto& s = inputs_[l + 1];
            s.resize(z.rows(), z.cols());
            auto h = s.leftCols(n_).array();
            h = z.leftCols(n_).array().tanh();
            if (k_ == 1) { continue; }
            Eigen::ArrayXXd const d1 = 1.0 - h.square();
            Eigen::ArrayXXd const d2 = -2.0 * h * d1;
            auto const zx = block(z, 2).array();
            block(s, 1).array() = d1 * block(z, 1).array();
            block(s, 2).array() = d1 * zx;
            block(s, 3).array() = d1 * block(z, 3).array() + d2 * zx.square();
        }
    }

    [[nodiscard]] auto u() const -> Eigen::VectorXd { return channel(0); }
    [[nodiscard]] auto u_t() const -> Eigen::VectorXd { return channel(1); }
    [[nodiscard]] auto u_x() const -> Eigen::VectorXd { return channel(2); }
    [[nodiscard]] auto u_xx() const -> Eigen::VectorXd { return channel(3); }

    /// Accumulates into `grad` the gradient of sum_i (adj_u[i] u_i +
    /// adj_ut[i] u_t,i + adj_ux[i] u_x,i + adj_uxx[i] u_xx,i) with respect to
    /// the parameters of the last forward() call. Derivative adjoints must be
    /// empty in values-only mode.
    void backward(std::span<double const> params, Eigen::Ref<Eigen::VectorXd const> adj_u,
                  Eigen::Ref<Eigen::VectorXd const> adj_ut, Eigen::Ref<Eigen::VectorXd const> adj_ux,
                  Eigen::Ref<Eigen::VectorXd const> adj_uxx, std::span<double> grad)
    {
        if (grad.size() != params.size() || params.size() != param_count(arch_)) {
            throw ShapeMismatch("JetNetwork::backward: gradient size mismatch");
        }
        if (adj_u.size() != n_) { throw LengthMismatch("JetNetwork::backward: adjoint length mismatch"); }
        auto const layers = arch_.layer_count();
        Matrix zbar(1, k_ * n_);
        zbar.leftCols(n_) = adj_u.transpose();
        if (k_ == 4) {
            auto set = [&](int c, Eigen::Ref<Eigen::VectorXd const> a) {
                if (a.size() == 0) {
                    block(zbar, c).setZero();
                } else if (a.size() == n_) {
                    block(zbar, c) = a.transpose();
                } else {
                    throw LengthMismatch("JetNetwork::backward: adjoint length mismatch");
                }
            };
            set(1, adj_ut);
            set(2, adj_ux);
            set(3, adj_uxx);
        } else if (adj_ut.size() != 0 || adj_ux.size() != 0 || adj_uxx.size() != 0) {
            throw ShapeMismatch("JetNetwork::backward: derivative adjoints need a jets forward pass");
        }

        Matrix sbar;
        for (std::size_t l = layers; l-- > 0;) {
            auto const in = arch_.fan_in(l);
            auto const out = arch_.fan_out(l);
            RowMajorMutMap gw(grad.data() + arch_.weight_offset(l), out, in);
            Eigen::Map<Eigen::VectorXd> gb(grad.data() + arch_.bias_offset(l), out);
            gw_.noalias() = zbar * inputs_[l].transpose();
            gb_ = zbar.leftCols(n_).rowwise().sum();
            gw += gw_;
            gb += gb_;
            if (l == 0) { break; }
            w_ = weights(params, l);
            sbar.noalias() = w_.transpose() * zbar;

            // Pull the adjoint back through the tanh of layer l - 1.
            auto const& z = pre_[l - 1];
            auto const h = inputs_[l].leftCols(n_).array();
            Eigen::ArrayXXd const d1 = 1.0 - h.square();
            zbar.resize(z.rows(), k_ * n_);
            if (k_ == 1) {
                zbar.array() = sbar.array() * d1;
                continue;
            }
            Eigen::ArrayXXd const d2 = -2.0 * h * d1;
            Eigen::ArrayXXd const d3 = -2.0 * d1.square() - 2.0 * h * d2;
            auto const z1 = block(z, 1).array();
            auto const z2 = block(z, 2).array();
            auto const z3 = block(z, 3).array();
            auto const s0 = block(sbar, 0).array();
            auto const s1 = block(sbar, 1).array();
            auto const s2 = block(sbar, 2).array();
            auto const s3 = block(sbar, 3).array();
            block(zbar, 0).array() = s0 * d1 + (s1 * z1 + s2 * z2 + s3 * z3) * d2 + s3 * d3 * z2.square();
            block(zbar, 1).array() = s1 * d1;
            block(zbar, 2).array() = s2 * d1 + 2.0 * s3 * d2 * z2;
            block(zbar, 3).array() = s3 * d1;
        }
    }

  private:
    [[nodiscard]] auto block(Matrix& m, int c) const -> Matrix::ColsBlockXpr { return m.middleCols(c * n_, n_); }
    [[nodiscard]] auto block(Matrix const& m, int c) const -> Matrix::ConstColsBlockXpr
    {
        return m.middleCols(c * n_, n_);
    }

    [[nodiscard]] auto weights(std::span<double const> params, std::size_t l) const -> RowMajorMap
    {
        return {params.data() + arch_.weight_offset(l), arch_.fan_out(l), arch_.fan_in(l)};
    }
    [[nodiscard]] auto biases(std::span<double const> params, std::size_t l) const
        -> Eigen::Map<Eigen::VectorXd const>
    {
        return {params.data() + arch_.bias_offset(l), arch_.fan_out(l)};
    }

    [[nodiscard]] auto channel(int c) const -> Eigen::VectorXd
    {
        if (c >= k_) { throw ShapeMismatch("JetNetwork: derivative channels need a jets forward pass"); }
        return pre_.back().middleCols(c * n_, n_).transpose();
    }

    Architecture arch_;
    InputScaling scaling_;
    Eigen::Index k_ = 1;
    Eigen::Index n_ = 0;
    std::vector<Matrix> inputs_; // stacked input of each layer
    std::vector<Matrix> pre_;    // stacked pre-activation of each layer
    Matrix w_, gw_;              // aligned scratch for the reverse pass
    Eigen::VectorXd gb_;
};

} // namespace cfpinn::net
