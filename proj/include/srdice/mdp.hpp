#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "srdice/rng.hpp"

namespace srdice {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct StateAction {
    int s = 0;
    int a = 0;
    friend bool operator==(const StateAction&, const StateAction&) = default;
};

/// Row index of (s, a) in any state-action-major table.
inline Eigen::Index sa_index(int s, int a, int n_actions) {
    return static_cast<Eigen::Index>(s) * n_actions + a;
}

/// Finite MDP with dense dynamics.
///
/// Transitions are stored as an (S*A) x S matrix whose row sa_index(s, a)
/// is p(.|s,a). The horizon is only used by rollout; exact solvers always
/// compute infinite-horizon discounted quantities.
class TabularMDP {
public:
    /// Validates stochasticity of every slice and of the initial distribution.
    TabularMDP(int n_states, int n_actions, Matrix transition, Matrix reward, Vector initial_dist,
               std::optional<int> horizon = std::nullopt);

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    int n_pairs() const { return n_states_ * n_actions_; }

    double p(int s, int a, int s_next) const {
        return transition_(sa_index(s, a, n_actions_), s_next);
    }
    const Matrix& transition() const { return transition_; }
    const Matrix& reward() const { return reward_; }
    const Vector& initial_dist() const { return initial_dist_; }
    const std::optional<int>& horizon() const { return horizon_; }

    /// True when every p(.|s,a) is a point mass.
    bool deterministic() const;

    /// Same dynamics with a substituted (S x A) reward table.
    TabularMDP with_reward(Matrix reward) const;

private:
    int n_states_;
    int n_actions_;
    Matrix transition_;
    Matrix reward_;
    Vector initial_dist_;
    std::optional<int> horizon_;
};

/// Row-stochastic (S x A) action distribution.
class Policy {
public:
    explicit Policy(Matrix probs);

    int n_states() const { return static_cast<int>(probs_.rows()); }
    int n_actions() const { return static_cast<int>(probs_.cols()); }
    double operator()(int s, int a) const { return probs_(s, a); }
    const Matrix& probs() const { return probs_; }

    static Policy uniform(int n_states, int n_actions);
    /// pi(a*(s)|s) = 1.
    static Policy deterministic(const std::vector<int>& actions, int n_actions);
    /// weight * first + (1 - weight) * second; row-stochastic by convexity.
    static Policy mixture(const Policy& first, const Policy& second, double weight);

private:
    Matrix probs_;
};

/// Discount factor in [0, 1).
class Discount {
public:
    explicit Discount(double gamma);
    double value() const { return gamma_; }
    operator double() const { return gamma_; }

private:
    double gamma_;
};

/// Normalized discounted state-action occupancy d^pi, (S x A).
struct OccupancyTable {
    Matrix d;
};

/// Tabular successor representation: psi(s, s') is the expected discounted
/// number of visits to s' starting from s.
struct TabularSR {
    Matrix psi;
};

/// Density ratios with an explicit validity mask. Entries where the
/// reference distribution is zero are invalid and hold 0.
struct MaskedRatio {
    Matrix values;
    BoolMatrix valid;
    /// Pairs with d^pi > 0 but reference mass 0.
    std::vector<StateAction> support_violations;
};

/// Pair-to-state matrix P_pi(s, s') = sum_a pi(a|s) p(s'|s,a).
Matrix state_transition(const TabularMDP& mdp, const Policy& pi);

/// Pair-to-pair matrix P(sa, s'a') = p(s'|s,a) pi(a'|s').
Matrix pair_transition(const TabularMDP& mdp, const Policy& pi);

OccupancyTable exact_occupancy(const TabularMDP& mdp, const Policy& pi, Discount gamma);
TabularSR exact_tabular_sr(const TabularMDP& mdp, const Policy& pi, Discount gamma);
double exact_return(const TabularMDP& mdp, const Policy& pi, Discount gamma);

/// Q^pi as an (S x A) table, solving Q = r + gamma * P * Pi * Q.
Matrix exact_q_values(const TabularMDP& mdp, const Policy& pi, Discount gamma);

/// d^pi / reference over all pairs. `reference` must be a probability table.
MaskedRatio exact_ratio_oracle(const TabularMDP& mdp, const Policy& pi, Discount gamma,
                               const Matrix& reference);

/// Five-state random walk: action 0 steps left, action 1 steps right, the
/// end states loop on the outward action, episodes start in the first state.
/// Reward is 1 at (last state, any action), 0 elsewhere.
TabularMDP random_walk5();

/// Random dense MDP with Dirichlet(1)-like rows, uniform rewards in [0, 1]
/// and a random initial distribution. Used by property tests.
TabularMDP random_mdp(int n_states, int n_actions, Rng& rng);

/// Random row-stochastic policy.
Policy random_policy(int n_states, int n_actions, Rng& rng);

void validate_compatible(const TabularMDP& mdp, const Policy& pi);

}  // namespace srdice
