#pragma once

#include <string>
#include <vector>

#include "srdice/mdp.hpp"
#include "srdice/rng.hpp"

namespace srdice {

enum class Activation { Identity, Tanh, Relu, Sigmoid };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

/// Linear function w . x without bias.
struct LinearModel {
    Vector w;

    /// One output per row of x.
    Vector forward(const Matrix& x) const { return x * w; }
    /// d/dw of sum_i upstream_i * (w . x_i).
    Vector grad(const Matrix& x, const Vector& upstream) const { return x.transpose() * upstream; }
};

/// Fully connected network with all parameters in one flat vector.
///
/// Inputs are row-major batches: each row of x is one sample. Layer l maps
/// (batch x in) to (batch x out) as act(x * W + b) with W stored (in x out).
class Mlp {
public:
    Mlp(std::vector<int> sizes, Activation hidden, Activation output);

    /// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
    static Mlp uniform_init(std::vector<int> sizes, Activation hidden, Activation output, Rng& rng);
    /// Weights N(0, 1), biases zero.
    static Mlp normal_init(std::vector<int> sizes, Activation hidden, Activation output, Rng& rng);

    struct Cache {
        std::vector<Matrix> outputs;  // outputs[0] is the input
    };

    Matrix forward(const Matrix& x) const;
    Matrix forward(const Matrix& x, Cache& cache) const;

    /// Accumulates dL/dparams into `grad` (resized if empty) and returns dL/dx.
    Matrix backward(const Cache& cache, const Matrix& upstream, Vector& grad) const;

    int input_dim() const { return sizes_.front(); }
    int output_dim() const { return sizes_.back(); }
    int n_layers() const { return static_cast<int>(sizes_.size()) - 1; }
    const std::vector<int>& sizes() const { return sizes_; }
    Activation hidden_activation() const { return hidden_; }
    Activation output_activation() const { return output_; }

    Vector& params() { return params_; }
    const Vector& params() const { return params_; }

    Eigen::Map<const Matrix> weight(int layer) const;
    Eigen::Map<const Vector> bias(int layer) const;
    Eigen::Map<Matrix> weight(int layer);
    Eigen::Map<Vector> bias(int layer);

private:
    Activation activation_of(int layer) const { return layer + 1 == n_layers() ? output_ : hidden_; }

    std::vector<int> sizes_;
    std::vector<Eigen::Index> weight_offset_;
    std::vector<Eigen::Index> bias_offset_;
    Activation hidden_;
    Activation output_;
    Vector params_;
};

}  // namespace srdice
