#pragma once

// Central-difference checks for every training loss. Each check draws a
// fresh random instance (MDP, features, dataset, minibatch, parameters) and
// returns the worst relative error over its analytic gradients.

#include <algorithm>
#include <functional>
#include <map>
#include <string>

#include "oracles.hpp"
#include "srdice/batch.hpp"
#include "srdice/encoder.hpp"
#include "srdice/gradcheck.hpp"
#include "srdice/losses.hpp"

namespace gradcheck {

using namespace srdice;

struct Instance {
    TabularMDP mdp;
    Policy pi;
    FeatureMap map;
    Dataset dataset;
    double gamma;
};

inline Vector random_normal(Eigen::Index n, Rng& rng, double scale = 1.0) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * rng.normal();
    return v;
}

inline Instance random_instance(Rng& rng) {
    const int S = 2 + static_cast<int>(rng.index(5)), A = 1 + static_cast<int>(rng.index(3));
    TabularMDP mdp = random_mdp(S, A, rng);
    Policy pi = random_policy(S, A, rng);
    const int fs = 1 + static_cast<int>(rng.index(4));
    Matrix x(S, fs);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(-1.0, 1.0);
    const auto comb = rng.index(2) ? ActionCombiner::KroneckerOneHot : ActionCombiner::ConcatOneHot;
    FeatureMap map = FeatureMap::from_state_features(x, A, comb);
    Dataset data = oracle::random_dataset(mdp, 20 + static_cast<int>(rng.index(40)), rng);
    return {std::move(mdp), std::move(pi), std::move(map), std::move(data), rng.uniform(0.0, 0.99)};
}

inline PairFunction random_model(const FeatureMap& map, int out_dim, ModelKind kind, Rng& rng) {
    PairFunction f = kind == ModelKind::Table    ? PairFunction::table(map.n_states() * map.n_actions(), out_dim)
                     : kind == ModelKind::Linear ? PairFunction::linear(map, out_dim, rng)
                                                 : PairFunction::mlp(map, {5, 4}, Activation::Tanh,
                                                                     Activation::Identity, out_dim, rng);
    f.params() = random_normal(f.params().size(), rng, 0.5);
    return f;
}

inline Minibatch random_batch(const Instance& inst, Rng& rng) {
    MinibatchSampler sampler(inst.dataset, inst.pi);
    const auto next = rng.index(2) ? ExpectationMode::Exact : ExpectationMode::Sampled;
    const auto start = rng.index(2) ? ExpectationMode::Exact : ExpectationMode::Sampled;
    return sampler.sample(1 + static_cast<int>(rng.index(16)), 1 + static_cast<int>(rng.index(8)), next, start, rng);
}

/// Relative error of `analytic` against central differences of `f` at params.
inline double check(const std::function<double(const Vector&)>& f, const Vector& params, const Vector& analytic) {
    return relative_error(analytic, numeric_gradient(f, params, 1e-5));
}

inline ModelKind kind_for(int draw) {
    constexpr ModelKind kinds[] = {ModelKind::Table, ModelKind::Linear, ModelKind::Mlp};
    return kinds[draw % 3];
}

inline double encoder_draw(Rng& rng) {
    const Instance inst = random_instance(rng);
    EncoderConfig cfg;
    cfg.feature_dim = 1 + static_cast<int>(rng.index(4));
    cfg.hidden = 2 + static_cast<int>(rng.index(5));
    cfg.state_only = rng.index(2) == 1;
    EncoderDecoder model = EncoderDecoder::create(inst.mdp.n_states(), inst.mdp.n_actions(), cfg, rng);
    // Biases away from zero keep relu kinks away from the probes.
    model.encoder.params() += random_normal(model.encoder.params().size(), rng, 0.3);
    model.next_head.params() += random_normal(model.next_head.params().size(), rng, 0.3);
    model.action_head.params() += random_normal(model.action_head.params().size(), rng, 0.3);
    std::vector<Transition> batch;
    for (int i = 0; i < 6; ++i) batch.push_back(inst.dataset.transitions()[rng.index(inst.dataset.size())]);
    const double ln = rng.uniform(0.1, 2.0), la = rng.uniform(0.1, 2.0), lr = rng.uniform(0.0, 1.0);
    const EncoderGrads g = encoder_loss(model, batch, ln, la, lr);
    double worst = 0.0;
    auto loss_with = [&](auto setter) {
        return [&, setter](const Vector& p) {
            EncoderDecoder m = model;
            setter(m, p);
            return encoder_loss(m, batch, ln, la, lr).loss;
        };
    };
    worst = std::max(worst, check(loss_with([](EncoderDecoder& m, const Vector& p) { m.encoder.params() = p; }),
                                  model.encoder.params(), g.encoder));
    worst = std::max(worst, check(loss_with([](EncoderDecoder& m, const Vector& p) { m.next_head.params() = p; }),
                                  model.next_head.params(), g.next_head));
    worst = std::max(worst, check(loss_with([](EncoderDecoder& m, const Vector& p) { m.action_head.params() = p; }),
                                  model.action_head.params(), g.action_head));
    worst = std::max(worst, check(loss_with([](EncoderDecoder& m, const Vector& p) { m.reward_head.w = p; }),
                                  model.reward_head.w, g.reward_head));
    return worst;
}

inline double sr_td_draw(Rng& rng, int draw) {
    const Instance inst = random_instance(rng);
    const Minibatch mb = random_batch(inst, rng);
    const PairFunction psi = random_model(inst.map, inst.map.dim(), kind_for(draw), rng);
    const PairFunction target = random_model(inst.map, inst.map.dim(), kind_for(draw), rng);
    const LossGrad g = sr_td_loss(psi, target, inst.map, mb, inst.gamma);
    return check(
        [&](const Vector& p) {
            PairFunction m = psi;
            m.params() = p;
            return sr_td_loss(m, target, inst.map, mb, inst.gamma).loss;
        },
        psi.params(), g.grad);
}

inline double deep_td_draw(Rng& rng, int draw) {
    const Instance inst = random_instance(rng);
    const Minibatch mb = random_batch(inst, rng);
    const PairFunction q = random_model(inst.map, 1, kind_for(draw), rng);
    const PairFunction target = random_model(inst.map, 1, kind_for(draw), rng);
    const LossGrad g = deep_td_loss(q, target, mb, inst.gamma);
    return check(
        [&](const Vector& p) {
            PairFunction m = q;
            m.params() = p;
            return deep_td_loss(m, target, mb, inst.gamma).loss;
        },
        q.params(), g.grad);
}

inline double srdice_w_draw(Rng& rng) {
    const Instance inst = random_instance(rng);
    const Minibatch mb = random_batch(inst, rng);
    Matrix sr(inst.map.table().rows(), inst.map.dim());
    for (Eigen::Index i = 0; i < sr.size(); ++i) sr(i) = rng.uniform(-3.0, 3.0);
    const SrDiceWObjective obj = SrDiceWObjective::from_batch(mb, inst.map, sr, inst.gamma);
    const Vector w = random_normal(inst.map.dim(), rng);
    return check([&](const Vector& p) { return obj.evaluate(p).loss; }, w, obj.evaluate(w).grad);
}

inline double deep_sr_draw(Rng& rng) {
    const int n = 1 + static_cast<int>(rng.index(30)), F = 1 + static_cast<int>(rng.index(8));
    Matrix phi(n, F);
    for (Eigen::Index i = 0; i < phi.size(); ++i) phi(i) = rng.normal();
    const Vector r = random_normal(n, rng), w = random_normal(F, rng);
    return check([&](const Vector& p) { return deep_sr_w_loss(p, phi, r).loss; }, w, deep_sr_w_loss(w, phi, r).grad);
}

inline double dualdice_draw(Rng& rng, int draw) {
    const Instance inst = random_instance(rng);
    const Minibatch mb = random_batch(inst, rng);
    const PairFunction f = random_model(inst.map, 1, kind_for(draw), rng);
    const PairFunction w = random_model(inst.map, 1, kind_for(draw + 1), rng);
    const SaddleGrad g = dualdice_objective(f, w, mb, inst.gamma);
    const double ef = check(
        [&](const Vector& p) {
            PairFunction m = f;
            m.params() = p;
            return dualdice_objective(m, w, mb, inst.gamma).objective;
        },
        f.params(), g.grad_f);
    const double ew = check(
        [&](const Vector& p) {
            PairFunction m = w;
            m.params() = p;
            return dualdice_objective(f, m, mb, inst.gamma).objective;
        },
        w.params(), g.grad_w);
    return std::max(ef, ew);
}

inline double gradientdice_draw(Rng& rng, int draw) {
    const Instance inst = random_instance(rng);
    const Minibatch mb = random_batch(inst, rng);
    const PairFunction f = random_model(inst.map, 1, kind_for(draw), rng);
    const PairFunction w = random_model(inst.map, 1, kind_for(draw + 2), rng);
    const double u = rng.normal(), lambda = rng.uniform(0.1, 2.0);
    const SaddleGrad g = gradientdice_objective(f, w, u, lambda, mb, inst.gamma);
    const double ef = check(
        [&](const Vector& p) {
            PairFunction m = f;
            m.params() = p;
            return gradientdice_objective(m, w, u, lambda, mb, inst.gamma).objective;
        },
        f.params(), g.grad_f);
    const double ew = check(
        [&](const Vector& p) {
            PairFunction m = w;
            m.params() = p;
            return gradientdice_objective(f, m, u, lambda, mb, inst.gamma).objective;
        },
        w.params(), g.grad_w);
    Vector uv(1);
    uv << u;
    Vector gu(1);
    gu << g.grad_u;
    const double eu = check(
        [&](const Vector& p) { return gradientdice_objective(f, w, p(0), lambda, mb, inst.gamma).objective; }, uv, gu);
    return std::max({ef, ew, eu});
}

/// Worst relative error per loss over `draws` random draws.
inline std::map<std::string, double> all_losses(int draws, std::uint64_t seed) {
    std::map<std::string, double> worst;
    Rng rng(seed);
    auto record = [&](const std::string& name, double e) { worst[name] = std::max(worst[name], e); };
    for (int d = 0; d < draws; ++d) {
        record("encoder", encoder_draw(rng));
        record("sr_td", sr_td_draw(rng, d));
        record("srdice_w", srdice_w_draw(rng));
        record("dualdice", dualdice_draw(rng, d));
        record("gradientdice", gradientdice_draw(rng, d));
        record("deep_sr", deep_sr_draw(rng));
        record("deep_td", deep_td_draw(rng, d));
    }
    return worst;
}

}  // namespace gradcheck
