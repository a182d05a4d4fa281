#include "srdice/pair_function.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srdice {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Table:
            return "table";
        case ModelKind::Linear:
            return "linear";
        case ModelKind::Mlp:
            return "mlp";
    }
    return "table";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "table" || name == "tabular" || name == "linear-table") return ModelKind::Table;
    if (name == "linear") return ModelKind::Linear;
    if (name == "mlp") return ModelKind::Mlp;
    throw std::invalid_argument("unknown model kind: " + name);
}

PairFunction::PairFunction(ModelKind kind, int n_pairs, int out_dim)
    : kind_(kind), n_pairs_(n_pairs), out_dim_(out_dim) {
    if (n_pairs <= 0 || out_dim <= 0) throw std::invalid_argument("PairFunction needs positive sizes");
}

PairFunction PairFunction::table(int n_pairs, int out_dim) {
    PairFunction f(ModelKind::Table, n_pairs, out_dim);
    f.params_ = Vector::Zero(static_cast<Eigen::Index>(n_pairs) * out_dim);
    return f;
}

PairFunction PairFunction::linear(const FeatureMap& map, int out_dim, Rng& rng) {
    PairFunction f(ModelKind::Linear, static_cast<int>(map.table().rows()), out_dim);
    f.inputs_ = map.table();
    const int in = map.dim();
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    f.params_.resize(static_cast<Eigen::Index>(in) * out_dim);
    for (Eigen::Index i = 0; i < f.params_.size(); ++i) f.params_(i) = rng.uniform(-bound, bound);
    return f;
}

PairFunction PairFunction::mlp(const FeatureMap& map, const std::vector<int>& hidden, Activation hidden_act,
                               Activation output_act, int out_dim, Rng& rng) {
    PairFunction f(ModelKind::Mlp, static_cast<int>(map.table().rows()), out_dim);
    f.inputs_ = map.table();
    std::vector<int> sizes{map.dim()};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(out_dim);
    f.net_ = Mlp::uniform_init(std::move(sizes), hidden_act, output_act, rng);
    return f;
}

Vector& PairFunction::params() { return net_ ? net_->params() : params_; }
const Vector& PairFunction::params() const { return net_ ? net_->params() : params_; }

PairFunction::Eval PairFunction::evaluate(std::span<const int> pairs) const {
    Eval eval;
    eval.pairs.assign(pairs.begin(), pairs.end());
    const auto n = static_cast<Eigen::Index>(pairs.size());
    for (int p : pairs) {
        if (p < 0 || p >= n_pairs_) throw std::out_of_range("PairFunction: pair index out of range");
    }
    switch (kind_) {
        case ModelKind::Table: {
            Eigen::Map<const Matrix> t(params_.data(), n_pairs_, out_dim_);
            eval.values.resize(n, out_dim_);
            for (Eigen::Index i = 0; i < n; ++i) eval.values.row(i) = t.row(pairs[i]);
            break;
        }
        case ModelKind::Linear: {
            Eigen::Map<const Matrix> w(params_.data(), inputs_.cols(), out_dim_);
            Matrix x(n, inputs_.cols());
            for (Eigen::Index i = 0; i < n; ++i) x.row(i) = inputs_.row(pairs[i]);
            eval.values = x * w;
            eval.cache.outputs = {std::move(x)};
            break;
        }
        case ModelKind::Mlp: {
            Matrix x(n, inputs_.cols());
            for (Eigen::Index i = 0; i < n; ++i) x.row(i) = inputs_.row(pairs[i]);
            eval.values = net_->forward(x, eval.cache);
            break;
        }
    }
    return eval;
}

Matrix PairFunction::evaluate_all() const {
    std::vector<int> all(static_cast<std::size_t>(n_pairs_));
    for (int i = 0; i < n_pairs_; ++i) all[static_cast<std::size_t>(i)] = i;
    return forward(all);
}

Vector PairFunction::gradient(const Eval& eval, const Matrix& upstream) const {
    if (upstream.rows() != static_cast<Eigen::Index>(eval.pairs.size()) || upstream.cols() != out_dim_) {
        throw std::invalid_argument("PairFunction::gradient: upstream shape mismatch");
    }
    switch (kind_) {
        case ModelKind::Table: {
            Vector grad = Vector::Zero(params_.size());
            Eigen::Map<Matrix> g(grad.data(), n_pairs_, out_dim_);
            for (std::size_t i = 0; i < eval.pairs.size(); ++i) {
                g.row(eval.pairs[i]) += upstream.row(static_cast<Eigen::Index>(i));
            }
            return grad;
        }
        case ModelKind::Linear: {
            Vector grad(params_.size());
            Eigen::Map<Matrix> g(grad.data(), inputs_.cols(), out_dim_);
            g.noalias() = eval.cache.outputs.front().transpose() * upstream;
            return grad;
        }
        case ModelKind::Mlp: {
            Vector grad;
            net_->backward(eval.cache, upstream, grad);
            return grad;
        }
    }
    return {};
}

void PairIndex::add(std::span<const int> pairs) { unique_.insert(unique_.end(), pairs.begin(), pairs.end()); }

void PairIndex::finalize() {
    std::sort(unique_.begin(), unique_.end());
    unique_.erase(std::unique(unique_.begin(), unique_.end()), unique_.end());
}

int PairIndex::position(int pair) const {
    auto it = std::lower_bound(unique_.begin(), unique_.end(), pair);
    if (it == unique_.end() || *it != pair) throw std::out_of_range("PairIndex: pair not registered");
    return static_cast<int>(it - unique_.begin());
}

}  // namespace srdice
