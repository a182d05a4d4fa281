#include "srdice/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srdice {

EncoderDecoder EncoderDecoder::create(int n_states, int n_actions, const EncoderConfig& config, Rng& rng) {
    const int in = config.state_only ? n_states : n_states * n_actions;
    const int F = config.feature_dim;
    Mlp encoder = Mlp::uniform_init({in, config.hidden, F}, Activation::Relu, Activation::Relu, rng);
    Mlp next_head =
        Mlp::uniform_init({F, config.hidden, n_states}, Activation::Relu, Activation::Identity, rng);
    Mlp action_head =
        Mlp::uniform_init({F, config.hidden, n_actions}, Activation::Relu, Activation::Identity, rng);
    LinearModel reward_head{Vector(F)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(F));
    for (Eigen::Index i = 0; i < F; ++i) reward_head.w(i) = rng.uniform(-bound, bound);
    return EncoderDecoder{std::move(encoder), std::move(next_head),  std::move(action_head),
                          std::move(reward_head), n_states, n_actions, config.state_only};
}

Matrix EncoderDecoder::inputs(std::span<const int> pairs) const {
    Matrix x = Matrix::Zero(static_cast<Eigen::Index>(pairs.size()), encoder.input_dim());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        x(static_cast<Eigen::Index>(i), state_only ? pairs[i] / n_actions : pairs[i]) = 1.0;
    }
    return x;
}

FeatureMap EncoderDecoder::feature_map() const {
    std::vector<int> all(static_cast<std::size_t>(n_states * n_actions));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return FeatureMap::from_table(encoder.forward(inputs(all)), n_states, n_actions, FeatureKind::Learned);
}

EncoderGrads encoder_loss(const EncoderDecoder& model, std::span<const Transition> batch,
                          double lambda_next, double lambda_action, double lambda_reward) {
    if (batch.empty()) throw std::invalid_argument("encoder_loss: empty batch");
    const auto n = static_cast<Eigen::Index>(batch.size());
    const double scale = 1.0 / static_cast<double>(n);
    std::vector<int> pairs;
    pairs.reserve(batch.size());
    Matrix next_target = Matrix::Zero(n, model.n_states);
    Matrix action_target = Matrix::Zero(n, model.n_actions);
    Vector reward_target(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& t = batch[static_cast<std::size_t>(i)];
        pairs.push_back(static_cast<int>(sa_index(t.s, t.a, model.n_actions)));
        next_target(i, t.s_next) = 1.0;
        action_target(i, t.a) = 1.0;
        reward_target(i) = t.r;
    }

    Mlp::Cache enc_cache, next_cache, action_cache;
    const Matrix phi = model.encoder.forward(model.inputs(pairs), enc_cache);
    const Matrix next_err = model.next_head.forward(phi, next_cache) - next_target;
    const Matrix action_err = model.action_head.forward(phi, action_cache) - action_target;
    const Vector reward_err = model.reward_head.forward(phi) - reward_target;

    EncoderGrads out;
    out.loss = scale * (lambda_next * next_err.squaredNorm() + lambda_action * action_err.squaredNorm() +
                        lambda_reward * reward_err.squaredNorm());

    Matrix dphi = model.next_head.backward(next_cache, (2.0 * lambda_next * scale) * next_err, out.next_head);
    dphi += model.action_head.backward(action_cache, (2.0 * lambda_action * scale) * action_err,
                                       out.action_head);
    const Vector reward_up = (2.0 * lambda_reward * scale) * reward_err;
    out.reward_head = model.reward_head.grad(phi, reward_up);
    dphi += reward_up * model.reward_head.w.transpose();
    model.encoder.backward(enc_cache, dphi, out.encoder);
    return out;
}

TrainedEncoder train_encoder(const Dataset& dataset, const EncoderConfig& config) {
    if (config.batch < 1) throw std::invalid_argument("train_encoder: batch must be >= 1");
    Rng rng(config.seed);
    Rng init_rng = rng.split();
    EncoderDecoder model = EncoderDecoder::create(dataset.n_states(), dataset.n_actions(), config, init_rng);
    Optimizer opt_enc(config.optimizer), opt_next(config.optimizer), opt_action(config.optimizer),
        opt_reward(config.optimizer);
    std::vector<double> curve;
    curve.reserve(static_cast<std::size_t>(std::max(0L, config.steps)));
    std::vector<Transition> batch(static_cast<std::size_t>(config.batch));
    const auto& data = dataset.transitions();
    for (long step = 0; step < config.steps; ++step) {
        for (auto& t : batch) t = data[rng.index(data.size())];
        const EncoderGrads g =
            encoder_loss(model, batch, config.lambda_next, config.lambda_action, config.lambda_reward);
        curve.push_back(g.loss);
        opt_enc.step(model.encoder.params(), g.encoder);
        opt_next.step(model.next_head.params(), g.next_head);
        opt_action.step(model.action_head.params(), g.action_head);
        opt_reward.step(model.reward_head.w, g.reward_head);
    }
    FeatureMap features = model.feature_map();
    return TrainedEncoder{std::move(model), std::move(features), std::move(curve)};
}

}  // namespace srdice
