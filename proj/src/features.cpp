#include "srdice/features.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "srdice/errors.hpp"

namespace srdice {

std::string to_string(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::TabularSA:
            return "tabular_sa";
        case FeatureKind::TabularState:
            return "tabular_state";
        case FeatureKind::Inverted:
            return "inverted";
        case FeatureKind::Dependent:
            return "dependent";
        case FeatureKind::Learned:
            return "learned";
        case FeatureKind::Custom:
            return "custom";
    }
    return "custom";
}

std::string to_string(ActionCombiner combiner) {
    switch (combiner) {
        case ActionCombiner::KroneckerOneHot:
            return "kronecker_onehot";
        case ActionCombiner::ConcatOneHot:
            return "concat_onehot";
        case ActionCombiner::None:
            return "none";
    }
    return "none";
}

FeatureKind feature_kind_from_string(const std::string& name) {
    for (auto k : {FeatureKind::TabularSA, FeatureKind::TabularState, FeatureKind::Inverted,
                   FeatureKind::Dependent, FeatureKind::Learned, FeatureKind::Custom}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown feature kind: " + name);
}

ActionCombiner action_combiner_from_string(const std::string& name) {
    for (auto c : {ActionCombiner::KroneckerOneHot, ActionCombiner::ConcatOneHot, ActionCombiner::None}) {
        if (to_string(c) == name) return c;
    }
    throw std::invalid_argument("unknown action combiner: " + name);
}

Vector toy_state_features(FeatureKind kind, int state_index, int n_states) {
    if (n_states != 5) throw std::invalid_argument("toy features are defined for 5 states only");
    if (state_index < 0 || state_index >= 5) throw std::invalid_argument("toy state index out of range");
    switch (kind) {
        case FeatureKind::TabularState: {
            Vector x = Vector::Zero(5);
            x(state_index) = 1.0;
            return x;
        }
        case FeatureKind::Inverted: {
            Vector x = Vector::Constant(5, 0.5);
            x(state_index) = 0.0;
            return x;
        }
        case FeatureKind::Dependent: {
            const double r2 = 1.0 / std::sqrt(2.0);
            const double r3 = 1.0 / std::sqrt(3.0);
            Vector x(3);
            switch (state_index) {
                case 0: x << 1.0, 0.0, 0.0; break;
                case 1: x << r2, r2, 0.0; break;
                case 2: x << r3, r3, r3; break;
                case 3: x << 0.0, r2, r2; break;
                default: x << 0.0, 0.0, 1.0; break;
            }
            return x;
        }
        default:
            throw std::invalid_argument("not a toy feature kind: " + to_string(kind));
    }
}

FeatureMap::FeatureMap(Matrix table, int n_states, int n_actions, FeatureKind kind,
                       ActionCombiner combiner)
    : table_(std::move(table)), n_states_(n_states), n_actions_(n_actions), kind_(kind), combiner_(combiner) {
    if (table_.rows() != static_cast<Eigen::Index>(n_states) * n_actions || table_.cols() == 0) {
        throw std::invalid_argument("feature table must have shape (S*A, F) with F > 0");
    }
    if (!table_.allFinite()) throw std::invalid_argument("feature table has non-finite entries");
}

FeatureMap FeatureMap::tabular_sa(int n_states, int n_actions) {
    const int n = n_states * n_actions;
    return FeatureMap(Matrix::Identity(n, n), n_states, n_actions, FeatureKind::TabularSA,
                      ActionCombiner::None);
}

FeatureMap FeatureMap::toy(FeatureKind kind, int n_states, int n_actions, ActionCombiner combiner) {
    const int fs = static_cast<int>(toy_state_features(kind, 0, n_states).size());
    Matrix x(n_states, fs);
    for (int s = 0; s < n_states; ++s) x.row(s) = toy_state_features(kind, s, n_states).transpose();
    return from_state_features(x, n_actions, combiner, kind);
}

FeatureMap FeatureMap::from_state_features(const Matrix& x, int n_actions, ActionCombiner combiner,
                                           FeatureKind kind) {
    const int S = static_cast<int>(x.rows());
    const int fs = static_cast<int>(x.cols());
    const int A = n_actions;
    int F = fs;
    if (combiner == ActionCombiner::KroneckerOneHot) F = fs * A;
    if (combiner == ActionCombiner::ConcatOneHot) F = fs + A;
    Matrix table = Matrix::Zero(S * A, F);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            auto row = table.row(sa_index(s, a, A));
            switch (combiner) {
                case ActionCombiner::KroneckerOneHot:
                    // x(s) (x) e_a: feature block a holds x(s).
                    for (int j = 0; j < fs; ++j) row(j * A + a) = x(s, j);
                    break;
                case ActionCombiner::ConcatOneHot:
                    row.head(fs) = x.row(s);
                    row(fs + a) = 1.0;
                    break;
                case ActionCombiner::None:
                    row = x.row(s);
                    break;
            }
        }
    }
    return FeatureMap(std::move(table), S, A, kind, combiner);
}

FeatureMap FeatureMap::from_table(Matrix table, int n_states, int n_actions, FeatureKind kind) {
    return FeatureMap(std::move(table), n_states, n_actions, kind, ActionCombiner::None);
}

FeatureMap FeatureMap::load_custom(const std::string& path, int n_actions, ActionCombiner fallback) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open feature file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("feature file " + path + ": " + e.what());
    }
    ActionCombiner combiner = fallback;
    nlohmann::json rows = j;
    if (j.is_object()) {
        rows = j.at("features");
        if (j.contains("action_combiner")) {
            combiner = action_combiner_from_string(j.at("action_combiner").get<std::string>());
        }
    }
    const auto nested = rows.get<std::vector<std::vector<double>>>();
    if (nested.empty() || nested.front().empty()) throw ConfigError("feature file has no rows");
    Matrix x(static_cast<Eigen::Index>(nested.size()), static_cast<Eigen::Index>(nested.front().size()));
    for (std::size_t i = 0; i < nested.size(); ++i) {
        if (nested[i].size() != nested.front().size()) throw ConfigError("ragged feature matrix");
        for (std::size_t k = 0; k < nested[i].size(); ++k) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = nested[i][k];
        }
    }
    return from_state_features(x, n_actions, combiner, FeatureKind::Custom);
}

FeatureSR exact_feature_sr(const TabularMDP& mdp, const Policy& pi, Discount gamma,
                           const FeatureMap& map) {
    if (map.n_states() != mdp.n_states() || map.n_actions() != mdp.n_actions()) {
        throw std::invalid_argument("feature map does not match MDP");
    }
    const Matrix P = pair_transition(mdp, pi);
    const Matrix lhs = Matrix::Identity(P.rows(), P.cols()) - gamma.value() * P;
    Eigen::PartialPivLU<Matrix> lu(lhs);
    Matrix psi = lu.solve(map.table());
    if (!psi.allFinite()) throw std::runtime_error("exact_feature_sr: linear solve failed");
    return FeatureSR{std::move(psi)};
}

Matrix feature_matrix(const FeatureMap& map, const Dataset& dataset) {
    Matrix phi(static_cast<Eigen::Index>(dataset.size()), map.dim());
    Eigen::Index i = 0;
    for (const auto& t : dataset.transitions()) phi.row(i++) = map.row(sa_index(t.s, t.a, map.n_actions()));
    return phi;
}

Matrix sr_start_matrix(const FeatureSR& sr, const Policy& pi, const std::vector<int>& start_states) {
    const int A = pi.n_actions();
    Matrix out(static_cast<Eigen::Index>(start_states.size()) * A, sr.table.cols());
    Eigen::Index i = 0;
    for (int s0 : start_states) {
        for (int a0 = 0; a0 < A; ++a0) out.row(i++) = pi(s0, a0) * sr.table.row(sa_index(s0, a0, A));
    }
    return out;
}

}  // namespace srdice
