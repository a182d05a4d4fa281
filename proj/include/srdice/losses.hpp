#pragma once

#include "srdice/batch.hpp"
#include "srdice/features.hpp"
#include "srdice/pair_function.hpp"

namespace srdice {

struct LossGrad {
    double loss = 0.0;
    Vector grad;
};

/// Semi-gradient TD loss against a frozen target network,
///   mean_i 1/2 |c_i + gamma * E_{a'} target(s'_i, a') - online(s_i, a_i)|^2,
/// with one cumulant row c_i per transition. The gradient is w.r.t. the
/// online parameters only.
LossGrad td_loss(const PairFunction& online, const PairFunction& target, const Matrix& cumulants,
                 const Minibatch& mb, double gamma);

/// Successor-feature TD loss: cumulant phi(s, a).
LossGrad sr_td_loss(const PairFunction& psi, const PairFunction& target, const FeatureMap& map,
                    const Minibatch& mb, double gamma);

/// Q-function TD loss: cumulant r.
LossGrad deep_td_loss(const PairFunction& q, const PairFunction& target, const Minibatch& mb, double gamma);

/// J(w) = 1/2 w^T G w - w^T b, the sampled density-ratio objective with
/// G = mean phi phi^T over transitions and b = (1 - gamma) E[psi(s0, a0)].
struct SrDiceWObjective {
    Matrix gram;
    Vector linear;

    static SrDiceWObjective from_batch(const Minibatch& mb, const FeatureMap& map, const Matrix& sr_table,
                                       double gamma);
    LossGrad evaluate(const Vector& w) const;
};

/// mean_i 1/2 (w . phi_i - r_i)^2.
LossGrad deep_sr_w_loss(const Vector& w, const Matrix& phi, const Vector& rewards);

/// Saddle objective value and gradients w.r.t. each player.
struct SaddleGrad {
    double objective = 0.0;
    Vector grad_f;
    Vector grad_w;
    double grad_u = 0.0;
};

/// J(f, w) = E[w (f - gamma f(s', a')) - w^2 / 2] - (1 - gamma) E[f(s0, a0)].
SaddleGrad dualdice_objective(const PairFunction& f, const PairFunction& w, const Minibatch& mb, double gamma);

/// J(w, u, f) = (1 - gamma) E[f(s0, a0)] + gamma E[w f(s', a')] - E[w f]
///              + lambda (E[u w - u] - u^2 / 2).
SaddleGrad gradientdice_objective(const PairFunction& f, const PairFunction& w, double u, double lambda,
                                  const Minibatch& mb, double gamma);

}  // namespace srdice
