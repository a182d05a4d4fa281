#pragma once

#include <string>

#include "srdice/mdp.hpp"

namespace srdice {

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Sgd;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Gradient-descent optimizer over a flat parameter vector. Adam keeps its
/// moment estimates and step count between calls.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig config);

    /// params <- params - update(grads). Use `ascend` for maximization.
    void step(Vector& params, const Vector& grads);
    void ascend(Vector& params, const Vector& grads);

    const OptimizerConfig& config() const { return config_; }
    long steps_taken() const { return t_; }

private:
    OptimizerConfig config_;
    Vector m_;
    Vector v_;
    long t_ = 0;
};

void sgd_step(Vector& params, const Vector& grads, double lr);

OptimizerKind optimizer_kind_from_string(const std::string& name);
std::string to_string(OptimizerKind kind);

}  // namespace srdice
