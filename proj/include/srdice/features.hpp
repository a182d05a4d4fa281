#pragma once

#include <string>
#include <vector>

#include "srdice/dataset.hpp"
#include "srdice/mdp.hpp"

namespace srdice {

enum class FeatureKind { TabularSA, TabularState, Inverted, Dependent, Learned, Custom };
enum class ActionCombiner { KroneckerOneHot, ConcatOneHot, None };

std::string to_string(FeatureKind kind);
std::string to_string(ActionCombiner combiner);
FeatureKind feature_kind_from_string(const std::string& name);
ActionCombiner action_combiner_from_string(const std::string& name);

/// Five-state toy representations: one-hot, inverted one-hot and the
/// three-feature dependent encoding. Throws for kinds other than
/// TabularState/Inverted/Dependent, for n_states != 5, or a bad index.
Vector toy_state_features(FeatureKind kind, int state_index, int n_states = 5);

/// Deterministic embedding phi(s, a). Every map is materialized as an
/// (S*A) x F table, which is exact for finite state-action spaces.
class FeatureMap {
public:
    /// One-hot over the S*A pairs.
    static FeatureMap tabular_sa(int n_states, int n_actions);

    /// Toy state features combined with the action.
    static FeatureMap toy(FeatureKind kind, int n_states, int n_actions,
                          ActionCombiner combiner = ActionCombiner::KroneckerOneHot);

    /// Arbitrary (S x F_state) state features combined with the action.
    static FeatureMap from_state_features(const Matrix& state_features, int n_actions,
                                          ActionCombiner combiner, FeatureKind kind = FeatureKind::Custom);

    /// Precomputed (S*A) x F table, e.g. from a trained encoder.
    static FeatureMap from_table(Matrix table, int n_states, int n_actions, FeatureKind kind);

    /// Loads {"features": [[...]] , "action_combiner": "..."} or a bare
    /// nested array (then `fallback` is the combiner).
    static FeatureMap load_custom(const std::string& path, int n_actions,
                                  ActionCombiner fallback = ActionCombiner::KroneckerOneHot);

    Vector phi(int s, int a) const { return table_.row(sa_index(s, a, n_actions_)).transpose(); }
    auto row(int pair) const { return table_.row(pair); }

    int dim() const { return static_cast<int>(table_.cols()); }
    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    FeatureKind kind() const { return kind_; }
    ActionCombiner combiner() const { return combiner_; }
    const Matrix& table() const { return table_; }

private:
    FeatureMap(Matrix table, int n_states, int n_actions, FeatureKind kind, ActionCombiner combiner);

    Matrix table_;
    int n_states_;
    int n_actions_;
    FeatureKind kind_;
    ActionCombiner combiner_;
};

/// Feature-space successor representation psi(s, a), (S*A) x F.
struct FeatureSR {
    Matrix table;

    Vector psi(int s, int a, int n_actions) const {
        return table.row(sa_index(s, a, n_actions)).transpose();
    }
};

/// Solves (I - gamma * P_pairs) psi = Phi_all.
FeatureSR exact_feature_sr(const TabularMDP& mdp, const Policy& pi, Discount gamma,
                           const FeatureMap& map);

/// |D| x F matrix of phi(s, a) per transition.
Matrix feature_matrix(const FeatureMap& map, const Dataset& dataset);

/// (|D0| * A) x F matrix with rows pi(a0|s0) psi(s0, a0), start-major.
Matrix sr_start_matrix(const FeatureSR& sr, const Policy& pi, const std::vector<int>& start_states);

}  // namespace srdice
