#include "srdice/losses.hpp"

#include <stdexcept>

namespace srdice {
namespace {

// Values of f over the distinct pairs of several lists; upstream rows are
// accumulated per distinct pair so one backward pass covers the batch.
struct PairEvaluation {
    PairIndex index;
    PairFunction::Eval eval;
    Matrix upstream;

    PairEvaluation(const PairFunction& f, std::initializer_list<const std::vector<int>*> lists) {
        for (const auto* l : lists) index.add(*l);
        index.finalize();
        eval = f.evaluate(index.unique());
        upstream = Matrix::Zero(eval.values.rows(), eval.values.cols());
    }

    auto value(int pair) const { return eval.values.row(index.position(pair)); }
    double scalar(int pair) const { return eval.values(index.position(pair), 0); }
    void add_upstream(int pair, double g) { upstream(index.position(pair), 0) += g; }
    Vector gradient(const PairFunction& f) const { return f.gradient(eval, upstream); }
};

double next_scalar(const PairEvaluation& ev, const Minibatch& mb, std::size_t i) {
    double v = 0.0;
    const auto block = static_cast<std::size_t>(mb.next_block);
    for (std::size_t k = i * block; k < (i + 1) * block; ++k) v += mb.next_weights[k] * ev.scalar(mb.next_pairs[k]);
    return v;
}

double start_scalar(const PairEvaluation& ev, const Minibatch& mb) {
    double v = 0.0;
    for (std::size_t k = 0; k < mb.start_pairs.size(); ++k) v += mb.start_weights[k] * ev.scalar(mb.start_pairs[k]);
    return v;
}

void check_batch(const Minibatch& mb) {
    if (mb.pairs.empty()) throw std::invalid_argument("empty minibatch");
    if (mb.next_pairs.size() != mb.pairs.size() * static_cast<std::size_t>(mb.next_block)) {
        throw std::invalid_argument("minibatch next-term layout mismatch");
    }
}

}  // namespace

LossGrad td_loss(const PairFunction& online, const PairFunction& target, const Matrix& cumulants,
                 const Minibatch& mb, double gamma) {
    check_batch(mb);
    const std::size_t n = mb.size();
    if (cumulants.rows() != static_cast<Eigen::Index>(n) || cumulants.cols() != online.out_dim()) {
        throw std::invalid_argument("td_loss: cumulant shape mismatch");
    }
    PairEvaluation cur(online, {&mb.pairs});
    PairEvaluation nxt(target, {&mb.next_pairs});
    const double scale = 1.0 / static_cast<double>(n);
    const auto block = static_cast<std::size_t>(mb.next_block);
    LossGrad out;
    Eigen::RowVectorXd bootstrap(online.out_dim());
    for (std::size_t i = 0; i < n; ++i) {
        bootstrap.setZero();
        for (std::size_t k = i * block; k < (i + 1) * block; ++k) {
            bootstrap += mb.next_weights[k] * nxt.value(mb.next_pairs[k]);
        }
        const Eigen::RowVectorXd err =
            cur.value(mb.pairs[i]) - cumulants.row(static_cast<Eigen::Index>(i)) - gamma * bootstrap;
        out.loss += 0.5 * scale * err.squaredNorm();
        cur.upstream.row(cur.index.position(mb.pairs[i])) += scale * err;
    }
    out.grad = cur.gradient(online);
    return out;
}

LossGrad sr_td_loss(const PairFunction& psi, const PairFunction& target, const FeatureMap& map,
                    const Minibatch& mb, double gamma) {
    Matrix cumulants(static_cast<Eigen::Index>(mb.size()), map.dim());
    for (std::size_t i = 0; i < mb.size(); ++i) cumulants.row(static_cast<Eigen::Index>(i)) = map.row(mb.pairs[i]);
    return td_loss(psi, target, cumulants, mb, gamma);
}

LossGrad deep_td_loss(const PairFunction& q, const PairFunction& target, const Minibatch& mb, double gamma) {
    const Matrix cumulants = Eigen::Map<const Vector>(mb.rewards.data(), static_cast<Eigen::Index>(mb.rewards.size()));
    return td_loss(q, target, cumulants, mb, gamma);
}

SrDiceWObjective SrDiceWObjective::from_batch(const Minibatch& mb, const FeatureMap& map, const Matrix& sr_table,
                                              double gamma) {
    if (mb.pairs.empty()) throw std::invalid_argument("SrDiceWObjective: empty batch");
    if (mb.start_pairs.empty()) throw std::invalid_argument("SrDiceWObjective: no start states in batch");
    const int F = map.dim();
    if (sr_table.cols() != F) throw std::invalid_argument("SrDiceWObjective: SR dimension != feature dimension");
    SrDiceWObjective obj{Matrix::Zero(F, F), Vector::Zero(F)};
    for (int p : mb.pairs) obj.gram.selfadjointView<Eigen::Lower>().rankUpdate(map.row(p).transpose());
    obj.gram = obj.gram.selfadjointView<Eigen::Lower>();
    obj.gram /= static_cast<double>(mb.pairs.size());
    for (std::size_t k = 0; k < mb.start_pairs.size(); ++k) {
        obj.linear += mb.start_weights[k] * sr_table.row(mb.start_pairs[k]).transpose();
    }
    obj.linear *= (1.0 - gamma);
    return obj;
}

LossGrad SrDiceWObjective::evaluate(const Vector& w) const {
    const Vector gw = gram * w;
    return LossGrad{0.5 * w.dot(gw) - w.dot(linear), gw - linear};
}

LossGrad deep_sr_w_loss(const Vector& w, const Matrix& phi, const Vector& rewards) {
    if (phi.rows() != rewards.size() || phi.rows() == 0) throw std::invalid_argument("deep_sr_w_loss: shape mismatch");
    const Vector err = phi * w - rewards;
    const double scale = 1.0 / static_cast<double>(phi.rows());
    return LossGrad{0.5 * scale * err.squaredNorm(), scale * (phi.transpose() * err)};
}

SaddleGrad dualdice_objective(const PairFunction& f, const PairFunction& w, const Minibatch& mb, double gamma) {
    check_batch(mb);
    PairEvaluation fe(f, {&mb.pairs, &mb.next_pairs, &mb.start_pairs});
    PairEvaluation we(w, {&mb.pairs});
    const std::size_t n = mb.size();
    const double scale = 1.0 / static_cast<double>(n);
    const auto block = static_cast<std::size_t>(mb.next_block);
    SaddleGrad out;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = we.scalar(mb.pairs[i]);
        const double fi = fe.scalar(mb.pairs[i]);
        const double fn = next_scalar(fe, mb, i);
        out.objective += scale * (wi * (fi - gamma * fn) - 0.5 * wi * wi);
        we.add_upstream(mb.pairs[i], scale * (fi - gamma * fn - wi));
        fe.add_upstream(mb.pairs[i], scale * wi);
        for (std::size_t k = i * block; k < (i + 1) * block; ++k) {
            fe.add_upstream(mb.next_pairs[k], -scale * gamma * wi * mb.next_weights[k]);
        }
    }
    out.objective -= (1.0 - gamma) * start_scalar(fe, mb);
    for (std::size_t k = 0; k < mb.start_pairs.size(); ++k) {
        fe.add_upstream(mb.start_pairs[k], -(1.0 - gamma) * mb.start_weights[k]);
    }
    out.grad_f = fe.gradient(f);
    out.grad_w = we.gradient(w);
    return out;
}

SaddleGrad gradientdice_objective(const PairFunction& f, const PairFunction& w, double u, double lambda,
                                  const Minibatch& mb, double gamma) {
    check_batch(mb);
    PairEvaluation fe(f, {&mb.pairs, &mb.next_pairs, &mb.start_pairs});
    PairEvaluation we(w, {&mb.pairs});
    const std::size_t n = mb.size();
    const double scale = 1.0 / static_cast<double>(n);
    const auto block = static_cast<std::size_t>(mb.next_block);
    SaddleGrad out;
    double mean_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = we.scalar(mb.pairs[i]);
        const double fi = fe.scalar(mb.pairs[i]);
        const double fn = next_scalar(fe, mb, i);
        mean_w += scale * wi;
        out.objective += scale * (gamma * wi * fn - wi * fi);
        we.add_upstream(mb.pairs[i], scale * (gamma * fn - fi + lambda * u));
        fe.add_upstream(mb.pairs[i], -scale * wi);
        for (std::size_t k = i * block; k < (i + 1) * block; ++k) {
            fe.add_upstream(mb.next_pairs[k], scale * gamma * wi * mb.next_weights[k]);
        }
    }
    out.objective += (1.0 - gamma) * start_scalar(fe, mb);
    for (std::size_t k = 0; k < mb.start_pairs.size(); ++k) {
        fe.add_upstream(mb.start_pairs[k], (1.0 - gamma) * mb.start_weights[k]);
    }
    out.objective += lambda * (u * mean_w - u - 0.5 * u * u);
    out.grad_u = lambda * (mean_w - 1.0 - u);
    out.grad_f = fe.gradient(f);
    out.grad_w = we.gradient(w);
    return out;
}

}  // namespace srdice
