#pragma once

#include <cstdint>
#include <vector>

#include "srdice/dataset.hpp"
#include "srdice/features.hpp"
#include "srdice/mlp.hpp"
#include "srdice/optim.hpp"

namespace srdice {

struct EncoderConfig {
    int feature_dim = 16;
    int hidden = 64;
    double lambda_next = 1.0;
    double lambda_action = 1.0;
    double lambda_reward = 0.1;
    long steps = 1000;
    int batch = 128;
    /// Encode one-hot(s) instead of one-hot(s, a).
    bool state_only = false;
    OptimizerConfig optimizer{OptimizerKind::Adam, 3e-4};
    std::uint64_t seed = 0;
};

/// Encoder phi with next-state, action and reward decoder heads. The reward
/// head is linear without bias; the encoder output passes through relu.
struct EncoderDecoder {
    Mlp encoder;
    Mlp next_head;
    Mlp action_head;
    LinearModel reward_head;
    int n_states;
    int n_actions;
    bool state_only;

    static EncoderDecoder create(int n_states, int n_actions, const EncoderConfig& config, Rng& rng);

    /// Encoder input rows for each pair (one-hot of the pair or the state).
    Matrix inputs(std::span<const int> pairs) const;

    /// Materialized learned features over all pairs.
    FeatureMap feature_map() const;
};

struct EncoderGrads {
    double loss = 0.0;
    Vector encoder;
    Vector next_head;
    Vector action_head;
    Vector reward_head;
};

/// Mean over `batch` of
///   l_next * |D_next(phi) - onehot(s')|^2 + l_action * |D_a(phi) - onehot(a)|^2
///   + l_reward * (D_r(phi) - r)^2.
EncoderGrads encoder_loss(const EncoderDecoder& model, std::span<const Transition> batch,
                          double lambda_next, double lambda_action, double lambda_reward);

struct TrainedEncoder {
    EncoderDecoder model;
    FeatureMap features;
    std::vector<double> loss_curve;  // one entry per step
};

TrainedEncoder train_encoder(const Dataset& dataset, const EncoderConfig& config);

}  // namespace srdice
