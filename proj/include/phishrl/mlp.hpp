#pragma once

#include <Eigen/Core>

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "phishrl/errors.hpp"
#include "phishrl/rng.hpp"

namespace phishrl {

// Fully connected ReLU network with a linear output layer. Batches are
// column-major: one sample per column.
template <typename Scalar>
class Mlp {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    struct Layer {
        Matrix weight;  // out x in
        Vector bias;    // out
    };

    // Activations kept by forward() for backward(), plus scratch space so a
    // reused cache does not reallocate.
    struct Cache {
        std::vector<Matrix> inputs;               // input of every layer
        std::vector<Eigen::Index> active_inputs;  // nonzero input rows (sparse first layer)
        bool sparse_input = false;
        Matrix delta, upstream, partial;
    };

    struct Gradients {
        std::vector<Layer> layers;
        // When set, the first weight gradient is zero outside these columns.
        std::optional<std::vector<Eigen::Index>> first_layer_columns;

        std::size_t size() const { return layers.size(); }
        Layer& operator[](std::size_t i) { return layers[i]; }
        const Layer& operator[](std::size_t i) const { return layers[i]; }
    };

    Mlp() = default;

    // Zero-initialized network with the given layer widths (input first).
    explicit Mlp(const std::vector<std::size_t>& sizes) {
        if (sizes.size() < 2) throw std::invalid_argument("an MLP needs at least input and output sizes");
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
            const auto in = static_cast<Eigen::Index>(sizes[l]);
            layers_.push_back({Matrix::Zero(out, in), Vector::Zero(out)});
        }
    }

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
    static Mlp initialized(const std::vector<std::size_t>& sizes, Rng& rng) {
        Mlp net(sizes);
        for (auto& layer : net.layers_) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
            for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
                for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
                    layer.weight(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
                }
            }
            for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
                layer.bias(i) = static_cast<Scalar>(rng.uniform(-bound, bound));
            }
        }
        return net;
    }

    std::vector<std::size_t> sizes() const {
        std::vector<std::size_t> out;
        if (layers_.empty()) return out;
        out.push_back(static_cast<std::size_t>(layers_.front().weight.cols()));
        for (const auto& l : layers_) out.push_back(static_cast<std::size_t>(l.weight.rows()));
        return out;
    }

    std::size_t input_dim() const { return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weight.cols()); }
    std::size_t output_dim() const { return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weight.rows()); }

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
        return n;
    }

    Gradients zero_gradients() const {
        Gradients g;
        g.layers.reserve(layers_.size());
        for (const auto& l : layers_) {
            g.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
        }
        return g;
    }

    Matrix forward(const Matrix& x) const {
        Cache cache;
        return forward(x, cache);
    }

    Matrix forward(const Matrix& x, Cache& cache) const {
        if (layers_.empty()) throw ShapeMismatch("network has no layers");
        if (x.rows() != layers_.front().weight.cols()) {
            throw ShapeMismatch("input has " + std::to_string(x.rows()) + " rows, network expects " +
                                std::to_string(layers_.front().weight.cols()));
        }
        const std::size_t depth = layers_.size();
        cache.inputs.resize(depth);
        cache.inputs[0] = x;
        select_active_inputs(x, cache);

        Matrix out;
        for (std::size_t l = 0; l < depth; ++l) {
            const auto& layer = layers_[l];
            const Matrix& in = cache.inputs[l];
            Matrix& z = l + 1 < depth ? cache.inputs[l + 1] : out;
            if (l == 0 && cache.sparse_input) {
                z.noalias() = gather_columns(layer.weight, cache.active_inputs) * gather_rows(in, cache.active_inputs);
            } else {
                z.noalias() = layer.weight * in;
            }
            z.colwise() += layer.bias;
            if (l + 1 < depth) z.array() = z.array().max(Scalar(0));
        }
        return out;
    }

    // Writes d(loss)/d(params) into grads given d(loss)/d(output).
    void backward(Cache& cache, const Matrix& grad_output, Gradients& grads) const {
        if (!shapes_match(grads)) grads = zero_gradients();
        Matrix& delta = cache.delta;
        delta = grad_output;
        for (std::size_t idx = layers_.size(); idx-- > 0;) {
            const Matrix& input = cache.inputs[idx];
            auto& g = grads.layers[idx];
            if (idx == 0 && cache.sparse_input) {
                if (grads.first_layer_columns) {
                    for (const auto c : *grads.first_layer_columns) g.weight.col(c).setZero();
                } else {
                    g.weight.setZero();
                }
                cache.partial.noalias() = delta * gather_rows(input, cache.active_inputs).transpose();
                for (std::size_t k = 0; k < cache.active_inputs.size(); ++k) {
                    g.weight.col(cache.active_inputs[k]) = cache.partial.col(static_cast<Eigen::Index>(k));
                }
                grads.first_layer_columns = cache.active_inputs;
            } else {
                g.weight.noalias() = delta * input.transpose();
                if (idx == 0) grads.first_layer_columns.reset();
            }
            g.bias = delta.rowwise().sum();
            if (idx == 0) break;
            cache.upstream.noalias() = layers_[idx].weight.transpose() * delta;
            delta.array() = cache.upstream.array() * (input.array() > Scalar(0)).template cast<Scalar>();
        }
    }

    template <typename Other>
    Mlp<Other> cast() const {
        Mlp<Other> out;
        for (const auto& l : layers_) {
            out.layers().push_back({l.weight.template cast<Other>(), l.bias.template cast<Other>()});
        }
        return out;
    }

    bool operator==(const Mlp& other) const {
        if (layers_.size() != other.layers_.size()) return false;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& a = layers_[l];
            const auto& b = other.layers_[l];
            if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols()) return false;
            if (a.weight != b.weight || a.bias != b.bias) return false;
        }
        return true;
    }

private:
    bool shapes_match(const Gradients& g) const {
        if (g.layers.size() != layers_.size()) return false;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            if (g.layers[l].weight.rows() != layers_[l].weight.rows() ||
                g.layers[l].weight.cols() != layers_[l].weight.cols() || g.layers[l].bias.size() != layers_[l].bias.size()) {
                return false;
            }
        }
        return true;
    }

    // Rows of the input that are zero across the whole batch contribute
    // nothing to the first layer; skip them when they are the majority.
    static void select_active_inputs(const Matrix& x, Cache& cache) {
        cache.active_inputs.clear();
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            if ((x.row(r).array() != Scalar(0)).any()) cache.active_inputs.push_back(r);
        }
        cache.sparse_input = static_cast<Eigen::Index>(cache.active_inputs.size()) * 2 < x.rows();
    }

    static Matrix gather_columns(const Matrix& m, const std::vector<Eigen::Index>& cols) {
        Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(cols[k]);
        return out;
    }

    static Matrix gather_rows(const Matrix& m, const std::vector<Eigen::Index>& rows) {
        Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
        for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(rows[k]);
        return out;
    }

    std::vector<Layer> layers_;
};

// Global L2 norm over every gradient tensor.
template <typename Scalar>
double gradient_norm(const typename Mlp<Scalar>::Gradients& grads) {
    double sum = 0.0;
    for (std::size_t l = 0; l < grads.size(); ++l) {
        const auto& g = grads[l];
        if (l == 0 && grads.first_layer_columns) {
            for (const auto c : *grads.first_layer_columns) sum += static_cast<double>(g.weight.col(c).squaredNorm());
        } else {
            sum += static_cast<double>(g.weight.squaredNorm());
        }
        sum += static_cast<double>(g.bias.squaredNorm());
    }
    return std::sqrt(sum);
}

// Rescales grads so their global norm is at most max_norm; returns the raw norm.
template <typename Scalar>
double clip_gradients(typename Mlp<Scalar>::Gradients& grads, double max_norm) {
    const double norm = gradient_norm<Scalar>(grads);
    if (norm > max_norm && norm > 0.0) {
        const auto scale = static_cast<Scalar>(max_norm / norm);
        for (std::size_t l = 0; l < grads.size(); ++l) {
            auto& g = grads[l];
            if (l == 0 && grads.first_layer_columns) {
                for (const auto c : *grads.first_layer_columns) g.weight.col(c) *= scale;
            } else {
                g.weight *= scale;
            }
            g.bias *= scale;
        }
    }
    return norm;
}

// Adaptive moment estimation over the layers of an Mlp. First-layer columns
// that have never received a gradient keep zero moments, so their update is
// exactly zero and is skipped.
template <typename Scalar>
class Adam {
public:
    Adam() = default;
    Adam(const Mlp<Scalar>& net, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps), m_(net.zero_gradients()), v_(net.zero_gradients()) {
        if (!net.layers().empty()) touched_.assign(static_cast<std::size_t>(net.layers().front().weight.cols()), 0);
    }

    void apply(Mlp<Scalar>& net, const typename Mlp<Scalar>::Gradients& grads) {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        const Constants k{static_cast<Scalar>(beta1_), static_cast<Scalar>(beta2_), static_cast<Scalar>(lr_ / c1),
                          static_cast<Scalar>(1.0 / c2), static_cast<Scalar>(eps_)};
        auto& layers = net.layers();
        for (std::size_t l = 0; l < layers.size(); ++l) {
            auto& w = layers[l].weight;
            if (l == 0 && grads.first_layer_columns) {
                for (const auto c : *grads.first_layer_columns) touched_[static_cast<std::size_t>(c)] = 1;
                for (Eigen::Index c = 0; c < w.cols(); ++c) {
                    if (!touched_[static_cast<std::size_t>(c)]) continue;
                    update(w.col(c).array(), m_[0].weight.col(c).array(), v_[0].weight.col(c).array(),
                           grads[0].weight.col(c).array(), k);
                }
            } else {
                update(w.array(), m_[l].weight.array(), v_[l].weight.array(), grads[l].weight.array(), k);
                if (l == 0) std::fill(touched_.begin(), touched_.end(), 1);
            }
            update(layers[l].bias.array(), m_[l].bias.array(), v_[l].bias.array(), grads[l].bias.array(), k);
        }
    }

    std::size_t steps() const { return t_; }

private:
    struct Constants {
        Scalar b1, b2, step, inv_c2, eps;
    };

    template <typename P, typename M, typename V, typename G>
    static void update(P&& p, M&& m, V&& v, const G& g, const Constants& k) {
        m = k.b1 * m + (Scalar(1) - k.b1) * g;
        v = k.b2 * v + (Scalar(1) - k.b2) * g.square();
        p -= k.step * m / ((v * k.inv_c2).sqrt() + k.eps);
    }

    double lr_ = 1e-4;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    std::size_t t_ = 0;
    typename Mlp<Scalar>::Gradients m_;
    typename Mlp<Scalar>::Gradients v_;
    std::vector<char> touched_;
};

}  // namespace phishrl
