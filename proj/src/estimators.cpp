#include "srdice/estimators.hpp"

#include <cmath>
#include <stdexcept>

#include "srdice/linalg.hpp"
#include "srdice/losses.hpp"

namespace srdice {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};

PairFunction make_model(ModelKind kind, const FeatureMap& map, int out_dim, const std::vector<int>& hidden,
                        Activation act, Rng& rng) {
    switch (kind) {
        case ModelKind::Table:
            return PairFunction::table(static_cast<int>(map.table().rows()), out_dim);
        case ModelKind::Linear:
            return PairFunction::linear(map, out_dim, rng);
        case ModelKind::Mlp:
            return PairFunction::mlp(map, hidden, act, Activation::Identity, out_dim, rng);
    }
    throw std::invalid_argument("unknown model kind");
}

void check_steps(long steps, int batch) {
    if (steps < 0) throw std::invalid_argument("steps must be >= 0");
    if (batch < 1) throw std::invalid_argument("batch must be >= 1");
}

bool finite(const Vector& v) { return v.allFinite(); }

}  // namespace

Matrix pairs_to_table(const Vector& values, int n_states, int n_actions) {
    if (values.size() != static_cast<Eigen::Index>(n_states) * n_actions) {
        throw std::invalid_argument("pairs_to_table: size mismatch");
    }
    Matrix t(n_states, n_actions);
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) t(s, a) = values(sa_index(s, a, n_actions));
    }
    return t;
}

Matrix RatioModel::table() const {
    return std::visit(Overloaded{
                          [](const TabularRatio& r) -> Matrix { return r.ratio.values; },
                          [](const LinearRatio& r) -> Matrix {
                              return pairs_to_table(r.map.table() * r.w, r.map.n_states(), r.map.n_actions());
                          },
                          [](const NetRatio& r) -> Matrix {
                              return pairs_to_table(r.w.evaluate_all().col(0), r.n_states, r.n_actions);
                          },
                      },
                      model_);
}

BoolMatrix RatioModel::valid() const {
    if (const auto* t = std::get_if<TabularRatio>(&model_)) return t->ratio.valid;
    const Matrix values = table();
    return BoolMatrix::Constant(values.rows(), values.cols(), true);
}

std::string RatioModel::kind() const {
    return std::visit(Overloaded{
                          [](const TabularRatio&) { return std::string("tabular"); },
                          [](const LinearRatio&) { return std::string("linear"); },
                          [](const NetRatio&) { return std::string("net"); },
                      },
                      model_);
}

TabularRatio srdice_tabular_ratios(const Dataset& dataset, const TabularSR& sr_hat, const Policy& pi,
                                   Discount gamma) {
    dataset.require_start_states();
    const int S = dataset.n_states();
    const int A = dataset.n_actions();
    if (sr_hat.psi.rows() != S || sr_hat.psi.cols() != S) throw std::invalid_argument("SR shape mismatch");
    if (pi.n_states() != S || pi.n_actions() != A) throw std::invalid_argument("policy shape mismatch");
    const EmpiricalCounts counts = empirical_counts(dataset);
    const auto& starts = dataset.start_states();

    Vector start_sr = Vector::Zero(S);  // mean_{s0} sr(s0, s)
    for (int s0 : starts) start_sr += sr_hat.psi.row(s0).transpose();
    start_sr /= static_cast<double>(starts.size());

    TabularRatio out{MaskedRatio{Matrix::Zero(S, A), BoolMatrix::Constant(S, A, false), {}}};
    const double scale = (1.0 - gamma.value()) * static_cast<double>(dataset.size());
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const int c = counts.counts(s, a);
            const double mass = pi(s, a) * start_sr(s);
            if (c == 0) {
                if (mass != 0.0) out.ratio.support_violations.push_back({s, a});
                continue;
            }
            out.ratio.values(s, a) = scale / c * mass;
            out.ratio.valid(s, a) = true;
        }
    }
    return out;
}

LinearRatio srdice_closed_form_w(const Dataset& dataset, const FeatureSR& sr, const Policy& pi, Discount gamma,
                                 const FeatureMap& map) {
    dataset.require_start_states();
    if (sr.table.cols() != map.dim()) throw std::invalid_argument("SR dimension != feature dimension");
    const Matrix phi = feature_matrix(map, dataset);
    const Matrix psi = sr_start_matrix(sr, pi, dataset.start_states());
    const double scale = (1.0 - gamma.value()) * static_cast<double>(dataset.size()) /
                         static_cast<double>(dataset.start_states().size());
    Vector w = scale * (pseudo_inverse(phi.transpose() * phi) * psi.colwise().sum().transpose());
    return LinearRatio{std::move(w), map};
}

LinearRatio srdice_iterative_w(const Dataset& dataset, const FeatureSR& sr, const Policy& pi, Discount gamma,
                               const FeatureMap& map, const IterativeWConfig& config) {
    check_steps(config.steps, config.batch);
    dataset.require_start_states();
    Rng rng(config.seed);
    MinibatchSampler sampler(dataset, pi);
    Optimizer opt(config.optimizer);
    Vector w = Vector::Zero(map.dim());
    if (config.mode == ExpectationMode::Exact) {
        const auto obj = SrDiceWObjective::from_batch(
            sampler.full(ExpectationMode::Sampled, ExpectationMode::Exact, rng), map, sr.table, gamma);
        for (long step = 0; step < config.steps; ++step) opt.step(w, obj.evaluate(w).grad);
    } else {
        for (long step = 0; step < config.steps; ++step) {
            const Minibatch mb = sampler.sample(config.batch, config.batch, ExpectationMode::Sampled,
                                                ExpectationMode::Sampled, rng);
            opt.step(w, SrDiceWObjective::from_batch(mb, map, sr.table, gamma).evaluate(w).grad);
        }
    }
    return LinearRatio{std::move(w), map};
}

PairFunction learn_sr_td(const Dataset& dataset, const FeatureMap& map, const Policy& pi, const SRLearnConfig& config,
                         const ProgressCallback& progress) {
    check_steps(config.steps, config.batch);
    Discount gamma(config.gamma);
    Rng rng(config.seed);
    Rng init = rng.split();
    PairFunction psi = make_model(config.model, map, map.dim(), config.hidden, config.hidden_act, init);
    PairFunction target = psi;
    Optimizer opt(config.optimizer);
    MinibatchSampler sampler(dataset, pi);
    const bool report = progress && config.eval_every > 0;
    if (report) progress(0, psi);
    for (long step = 1; step <= config.steps; ++step) {
        if (config.target_update_every > 0 && (step - 1) % config.target_update_every == 0) {
            target.params() = psi.params();
        }
        const Minibatch mb = sampler.sample(config.batch, 0, config.next_mode, ExpectationMode::Exact, rng);
        opt.step(psi.params(), sr_td_loss(psi, target, map, mb, gamma).grad);
        if (report && step % config.eval_every == 0) progress(step, psi);
    }
    return psi;
}

FeatureSR to_feature_sr(const PairFunction& psi) { return FeatureSR{psi.evaluate_all()}; }

std::string to_string(RegressionMode mode) { return mode == RegressionMode::LeastSquares ? "least_squares" : "sgd"; }

RegressionMode regression_mode_from_string(const std::string& name) {
    if (name == "least_squares") return RegressionMode::LeastSquares;
    if (name == "sgd") return RegressionMode::Sgd;
    throw std::invalid_argument("unknown regression mode: " + name);
}

DeepSRResult deep_sr_baseline(const Dataset& dataset, const FeatureSR& sr, const FeatureMap& map, const Policy& pi,
                              Discount gamma, const DeepSRConfig& config) {
    dataset.require_start_states();
    const Matrix phi = feature_matrix(map, dataset);
    Vector rewards(static_cast<Eigen::Index>(dataset.size()));
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        rewards(static_cast<Eigen::Index>(i)) = dataset.transitions()[i].r;
    }
    Vector w;
    long steps = 0;
    if (config.mode == RegressionMode::LeastSquares) {
        w = least_squares(phi, rewards);
    } else {
        check_steps(config.steps, config.batch);
        Rng rng(config.seed);
        Optimizer opt(config.optimizer);
        w = Vector::Zero(map.dim());
        Matrix x(config.batch, map.dim());
        Vector y(config.batch);
        for (; steps < config.steps; ++steps) {
            for (int i = 0; i < config.batch; ++i) {
                const auto row = static_cast<Eigen::Index>(rng.index(dataset.size()));
                x.row(i) = phi.row(row);
                y(i) = rewards(row);
            }
            opt.step(w, deep_sr_w_loss(w, x, y).grad);
        }
    }
    ValueEstimate est = estimate_return_direct(sr, w, pi, dataset.start_states(), gamma, "deep_sr");
    est.steps = steps;
    return DeepSRResult{std::move(w), std::move(est)};
}

DeepTDResult deep_td(const Dataset& dataset, const Policy& pi, const FeatureMap& map, const TDConfig& config,
                     const ProgressCallback& progress) {
    check_steps(config.steps, config.batch);
    dataset.require_start_states();
    Discount gamma(config.gamma);
    Rng rng(config.seed);
    Rng init = rng.split();
    PairFunction q = make_model(config.model, map, 1, config.hidden, config.hidden_act, init);
    PairFunction target = q;
    Optimizer opt(config.optimizer);
    MinibatchSampler sampler(dataset, pi);
    const bool report = progress && config.eval_every > 0;
    if (report) progress(0, q);
    for (long step = 1; step <= config.steps; ++step) {
        if (config.target_update_every > 0 && (step - 1) % config.target_update_every == 0) {
            target.params() = q.params();
        }
        const Minibatch mb = sampler.sample(config.batch, 0, config.next_mode, ExpectationMode::Exact, rng);
        opt.step(q.params(), deep_td_loss(q, target, mb, gamma).grad);
        if (report && step % config.eval_every == 0) progress(step, q);
    }
    const Matrix table = pairs_to_table(q.evaluate_all().col(0), dataset.n_states(), dataset.n_actions());
    ValueEstimate est = estimate_return_direct(table, pi, dataset.start_states(), gamma, "deep_td");
    est.steps = config.steps;
    return DeepTDResult{std::move(q), std::move(est)};
}

namespace {

struct DiceState {
    PairFunction f;
    PairFunction w;
};

DiceState init_dice(const FeatureMap& map, const DiceConfig& config, Rng& rng) {
    check_steps(config.steps, config.batch);
    Rng init = rng.split();
    PairFunction f = make_model(config.model, map, 1, config.hidden, config.hidden_act, init);
    PairFunction w = make_model(config.model, map, 1, config.hidden, config.hidden_act, init);
    return DiceState{std::move(f), std::move(w)};
}

bool dice_diverged(double objective, const DiceState& st, const DiceConfig& config) {
    return !std::isfinite(objective) || std::abs(objective) > config.divergence_threshold ||
           !finite(st.f.params()) || !finite(st.w.params());
}

}  // namespace

DiceResult dualdice(const Dataset& dataset, const Policy& pi, const FeatureMap& map, const DiceConfig& config,
                    const RatioCallback& progress) {
    dataset.require_start_states();
    Discount gamma(config.gamma);
    Rng rng(config.seed);
    DiceState st = init_dice(map, config, rng);
    Optimizer opt_f(config.optimizer), opt_w(config.optimizer);
    MinibatchSampler sampler(dataset, pi);
    const int start_batch = config.start_batch > 0 ? config.start_batch : config.batch;
    const int S = dataset.n_states(), A = dataset.n_actions();
    const bool report = progress && config.eval_every > 0;
    if (report) progress(0, NetRatio{st.w, S, A});
    long step = 0;
    bool diverged = false;
    while (step < config.steps) {
        const Minibatch mb = sampler.sample(config.batch, start_batch, config.next_mode, config.start_mode, rng);
        const SaddleGrad g = dualdice_objective(st.f, st.w, mb, gamma);
        if (dice_diverged(g.objective, st, config)) {
            diverged = true;
            break;
        }
        opt_f.step(st.f.params(), g.grad_f);
        opt_w.ascend(st.w.params(), dualdice_objective(st.f, st.w, mb, gamma).grad_w);
        ++step;
        if (report && step % config.eval_every == 0) progress(step, NetRatio{st.w, S, A});
    }
    if (!finite(st.f.params()) || !finite(st.w.params())) diverged = true;
    return DiceResult{NetRatio{std::move(st.w), S, A}, std::move(st.f), 0.0, step, diverged};
}

DiceResult gradientdice(const Dataset& dataset, const Policy& pi, const FeatureMap& map, const DiceConfig& config,
                        const RatioCallback& progress) {
    dataset.require_start_states();
    Discount gamma(config.gamma);
    Rng rng(config.seed);
    DiceState st = init_dice(map, config, rng);
    Optimizer opt_f(config.optimizer), opt_w(config.optimizer);
    OptimizerConfig u_config = config.optimizer;
    u_config.lr = config.u_lr;
    Optimizer opt_u(u_config);
    Vector u = Vector::Zero(1);
    MinibatchSampler sampler(dataset, pi);
    const int start_batch = config.start_batch > 0 ? config.start_batch : config.batch;
    const int S = dataset.n_states(), A = dataset.n_actions();
    const bool report = progress && config.eval_every > 0;
    if (report) progress(0, NetRatio{st.w, S, A});
    long step = 0;
    bool diverged = false;
    while (step < config.steps) {
        const Minibatch mb = sampler.sample(config.batch, start_batch, config.next_mode, config.start_mode, rng);
        const SaddleGrad g = gradientdice_objective(st.f, st.w, u(0), config.lambda, mb, gamma);
        if (dice_diverged(g.objective, st, config) || !std::isfinite(u(0))) {
            diverged = true;
            break;
        }
        opt_w.step(st.w.params(), g.grad_w);
        const SaddleGrad h = gradientdice_objective(st.f, st.w, u(0), config.lambda, mb, gamma);
        opt_f.ascend(st.f.params(), h.grad_f);
        opt_u.ascend(u, Vector::Constant(1, h.grad_u));
        ++step;
        if (report && step % config.eval_every == 0) progress(step, NetRatio{st.w, S, A});
    }
    if (!finite(st.f.params()) || !finite(st.w.params()) || !std::isfinite(u(0))) diverged = true;
    return DiceResult{NetRatio{std::move(st.w), S, A}, std::move(st.f), u(0), step, diverged};
}

ValueEstimate estimate_return_mis(const RatioModel& ratio, const Dataset& dataset, const std::string& method) {
    const Matrix values = ratio.table();
    const BoolMatrix valid = ratio.valid();
    if (values.rows() != dataset.n_states() || values.cols() != dataset.n_actions()) {
        throw std::invalid_argument("ratio table shape does not match dataset");
    }
    ValueEstimate est;
    est.method = method;
    double sum = 0.0, ratio_sum = 0.0;
    for (const auto& t : dataset.transitions()) {
        if (!valid(t.s, t.a)) {
            ++est.masked;
            continue;
        }
        sum += values(t.s, t.a) * t.r;
        ratio_sum += values(t.s, t.a);
    }
    const double n = static_cast<double>(dataset.size());
    est.value = sum / n;
    est.mean_ratio = ratio_sum / n;
    return est;
}

ValueEstimate estimate_return_direct(const Matrix& q, const Policy& pi, const std::vector<int>& start_states,
                                     Discount gamma, const std::string& method) {
    if (start_states.empty()) throw std::invalid_argument("direct estimate needs start states");
    if (q.rows() != pi.n_states() || q.cols() != pi.n_actions()) throw std::invalid_argument("Q shape mismatch");
    double v = 0.0;
    for (int s0 : start_states) v += pi.probs().row(s0).dot(q.row(s0));
    ValueEstimate est;
    est.method = method;
    est.value = (1.0 - gamma.value()) * v / static_cast<double>(start_states.size());
    return est;
}

ValueEstimate estimate_return_direct(const FeatureSR& sr, const Vector& w, const Policy& pi,
                                     const std::vector<int>& start_states, Discount gamma,
                                     const std::string& method) {
    if (sr.table.cols() != w.size()) throw std::invalid_argument("SR dimension != w dimension");
    return estimate_return_direct(pairs_to_table(sr.table * w, pi.n_states(), pi.n_actions()), pi, start_states,
                                  gamma, method);
}

ValueEstimate estimate_return_tabular_sr(const TabularSR& sr, const Dataset& dataset, const Policy& pi,
                                         Discount gamma) {
    dataset.require_start_states();
    const int S = dataset.n_states(), A = dataset.n_actions();
    Matrix reward_sum = Matrix::Zero(S, A);
    const EmpiricalCounts counts = empirical_counts(dataset);
    for (const auto& t : dataset.transitions()) reward_sum(t.s, t.a) += t.r;
    Vector r_pi = Vector::Zero(S);  // sum_a pi(a|s) rbar(s, a)
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            if (counts.counts(s, a) > 0) r_pi(s) += pi(s, a) * reward_sum(s, a) / counts.counts(s, a);
        }
    }
    double v = 0.0;
    for (int s0 : dataset.start_states()) v += sr.psi.row(s0).dot(r_pi);
    ValueEstimate est;
    est.method = "tabular_sr";
    est.value = (1.0 - gamma.value()) * v / static_cast<double>(dataset.start_states().size());
    return est;
}

}  // namespace srdice
