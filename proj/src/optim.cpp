#include "srdice/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace srdice {

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
    if (!(config_.lr >= 0.0)) throw std::invalid_argument("optimizer learning rate must be >= 0");
}

void sgd_step(Vector& params, const Vector& grads, double lr) {
    if (params.size() != grads.size()) throw std::invalid_argument("sgd_step: shape mismatch");
    params.noalias() -= lr * grads;
}

void Optimizer::step(Vector& params, const Vector& grads) {
    if (params.size() != grads.size()) throw std::invalid_argument("Optimizer::step: shape mismatch");
    ++t_;
    if (config_.kind == OptimizerKind::Sgd) {
        sgd_step(params, grads, config_.lr);
        return;
    }
    if (m_.size() != params.size()) {
        m_ = Vector::Zero(params.size());
        v_ = Vector::Zero(params.size());
    }
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    m_ = b1 * m_ + (1.0 - b1) * grads;
    v_ = b2 * v_ + (1.0 - b2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    params.array() -=
        config_.lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + config_.eps);
}

void Optimizer::ascend(Vector& params, const Vector& grads) { step(params, -grads); }

OptimizerKind optimizer_kind_from_string(const std::string& name) {
    if (name == "sgd") return OptimizerKind::Sgd;
    if (name == "adam") return OptimizerKind::Adam;
    throw std::invalid_argument("unknown optimizer: " + name);
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

}  // namespace srdice
