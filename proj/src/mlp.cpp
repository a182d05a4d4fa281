#include "srdice/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace srdice {
namespace {

void apply(Activation act, Matrix& z) {
    switch (act) {
        case Activation::Identity:
            break;
        case Activation::Tanh:
            z = z.array().tanh().matrix();
            break;
        case Activation::Relu:
            z = z.cwiseMax(0.0);
            break;
        case Activation::Sigmoid:
            z = (1.0 / (1.0 + (-z.array()).exp())).matrix();
            break;
    }
}

// Derivative expressed through the activation output y.
Matrix derivative(Activation act, const Matrix& y) {
    switch (act) {
        case Activation::Identity:
            return Matrix::Ones(y.rows(), y.cols());
        case Activation::Tanh:
            return (1.0 - y.array().square()).matrix();
        case Activation::Relu:
            return (y.array() > 0.0).cast<double>().matrix();
        case Activation::Sigmoid:
            return (y.array() * (1.0 - y.array())).matrix();
    }
    return {};
}

}  // namespace

std::string to_string(Activation act) {
    switch (act) {
        case Activation::Identity:
            return "identity";
        case Activation::Tanh:
            return "tanh";
        case Activation::Relu:
            return "relu";
        case Activation::Sigmoid:
            return "sigmoid";
    }
    return "identity";
}

Activation activation_from_string(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "tanh") return Activation::Tanh;
    if (name == "relu") return Activation::Relu;
    if (name == "sigmoid") return Activation::Sigmoid;
    throw std::invalid_argument("unknown activation: " + name);
}

Mlp::Mlp(std::vector<int> sizes, Activation hidden, Activation output)
    : sizes_(std::move(sizes)), hidden_(hidden), output_(output) {
    if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) throw std::invalid_argument("Mlp layer size <= 0");
        weight_offset_.push_back(offset);
        offset += static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1];
        bias_offset_.push_back(offset);
        offset += sizes_[l + 1];
    }
    params_ = Vector::Zero(offset);
}

Mlp Mlp::uniform_init(std::vector<int> sizes, Activation hidden, Activation output, Rng& rng) {
    Mlp net(std::move(sizes), hidden, output);
    for (int l = 0; l < net.n_layers(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(net.sizes_[l]));
        auto w = net.weight(l);
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
    }
    return net;
}

Mlp Mlp::normal_init(std::vector<int> sizes, Activation hidden, Activation output, Rng& rng) {
    Mlp net(std::move(sizes), hidden, output);
    for (int l = 0; l < net.n_layers(); ++l) {
        auto w = net.weight(l);
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.normal();
    }
    return net;
}

Eigen::Map<const Matrix> Mlp::weight(int layer) const {
    return {params_.data() + weight_offset_[layer], sizes_[layer], sizes_[layer + 1]};
}
Eigen::Map<const Vector> Mlp::bias(int layer) const {
    return {params_.data() + bias_offset_[layer], sizes_[layer + 1]};
}
Eigen::Map<Matrix> Mlp::weight(int layer) {
    return {params_.data() + weight_offset_[layer], sizes_[layer], sizes_[layer + 1]};
}
Eigen::Map<Vector> Mlp::bias(int layer) {
    return {params_.data() + bias_offset_[layer], sizes_[layer + 1]};
}

namespace {

// Eigen's blocked GEMM costs more than it saves on a handful of rows, which
// is the common case once batches are reduced to their distinct pairs.
bool small_batch(const Matrix& x) { return x.rows() <= 16; }

}  // namespace

Matrix Mlp::forward(const Matrix& x) const {
    Cache cache;
    return forward(x, cache);
}

Matrix Mlp::forward(const Matrix& x, Cache& cache) const {
    if (x.cols() != input_dim()) throw std::invalid_argument("Mlp::forward: input dimension mismatch");
    cache.outputs.clear();
    cache.outputs.reserve(sizes_.size());
    cache.outputs.push_back(x);
    for (int l = 0; l < n_layers(); ++l) {
        Matrix z = small_batch(x) ? Matrix(cache.outputs.back().lazyProduct(weight(l)))
                                  : Matrix(cache.outputs.back() * weight(l));
        z.rowwise() += bias(l).transpose();
        apply(activation_of(l), z);
        cache.outputs.push_back(std::move(z));
    }
    return cache.outputs.back();
}

Matrix Mlp::backward(const Cache& cache, const Matrix& upstream, Vector& grad) const {
    if (grad.size() == 0) grad = Vector::Zero(params_.size());
    if (grad.size() != params_.size()) throw std::invalid_argument("Mlp::backward: grad size mismatch");
    if (upstream.rows() != cache.outputs.back().rows() || upstream.cols() != output_dim()) {
        throw std::invalid_argument("Mlp::backward: upstream shape mismatch");
    }
    Matrix delta = upstream;
    for (int l = n_layers() - 1; l >= 0; --l) {
        delta.array() *= derivative(activation_of(l), cache.outputs[l + 1]).array();
        const Matrix& input = cache.outputs[l];
        Eigen::Map<Matrix> gw(grad.data() + weight_offset_[l], sizes_[l], sizes_[l + 1]);
        Eigen::Map<Vector> gb(grad.data() + bias_offset_[l], sizes_[l + 1]);
        gb.noalias() += delta.colwise().sum().transpose();
        if (small_batch(input)) {
            gw.noalias() += input.transpose().lazyProduct(delta);
            delta = Matrix(delta.lazyProduct(weight(l).transpose()));
        } else {
            gw.noalias() += input.transpose() * delta;
            delta = delta * weight(l).transpose();
        }
    }
    return delta;
}

}  // namespace srdice
