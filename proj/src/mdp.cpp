#include "srdice/mdp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace srdice {
namespace {

constexpr double kStochasticTol = 1e-12;
constexpr int kMaxPairs = 10000;

void check_distribution(const Eigen::Ref<const Vector>& row, const std::string& what) {
    if ((row.array() < 0.0).any() || !row.allFinite()) {
        throw std::invalid_argument(what + " has negative or non-finite entries");
    }
    if (std::abs(row.sum() - 1.0) > kStochasticTol) {
        throw std::invalid_argument(what + " does not sum to 1");
    }
}

Matrix solve_or_throw(const Matrix& lhs, const Matrix& rhs, const char* what) {
    Eigen::PartialPivLU<Matrix> lu(lhs);
    Matrix x = lu.solve(rhs);
    if (!x.allFinite()) throw std::runtime_error(std::string(what) + ": linear solve failed");
    return x;
}

}  // namespace

TabularMDP::TabularMDP(int n_states, int n_actions, Matrix transition, Matrix reward,
                       Vector initial_dist, std::optional<int> horizon)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      initial_dist_(std::move(initial_dist)),
      horizon_(horizon) {
    if (n_states <= 0 || n_actions <= 0) throw std::invalid_argument("MDP needs positive sizes");
    if (n_states * n_actions > kMaxPairs) {
        throw std::invalid_argument("MDP exceeds the dense size cap of 10000 state-action pairs");
    }
    if (transition_.rows() != n_pairs() || transition_.cols() != n_states) {
        throw std::invalid_argument("transition must have shape (S*A, S)");
    }
    if (reward_.rows() != n_states || reward_.cols() != n_actions) {
        throw std::invalid_argument("reward must have shape (S, A)");
    }
    if (!reward_.allFinite()) throw std::invalid_argument("reward has non-finite entries");
    if (initial_dist_.size() != n_states) {
        throw std::invalid_argument("initial_dist must have length S");
    }
    if (horizon_ && *horizon_ <= 0) throw std::invalid_argument("horizon must be positive");
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            check_distribution(transition_.row(sa_index(s, a, n_actions)).transpose(),
                               "transition(" + std::to_string(s) + "," + std::to_string(a) + ",.)");
        }
    }
    check_distribution(initial_dist_, "initial_dist");
}

bool TabularMDP::deterministic() const {
    for (Eigen::Index i = 0; i < transition_.rows(); ++i) {
        if (transition_.row(i).maxCoeff() != 1.0) return false;
    }
    return true;
}

TabularMDP TabularMDP::with_reward(Matrix reward) const {
    return TabularMDP(n_states_, n_actions_, transition_, std::move(reward), initial_dist_, horizon_);
}

Policy::Policy(Matrix probs) : probs_(std::move(probs)) {
    if (probs_.rows() == 0 || probs_.cols() == 0) throw std::invalid_argument("empty policy");
    for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
        check_distribution(probs_.row(s).transpose(), "policy row " + std::to_string(s));
    }
}

Policy Policy::uniform(int n_states, int n_actions) {
    return Policy(Matrix::Constant(n_states, n_actions, 1.0 / n_actions));
}

Policy Policy::deterministic(const std::vector<int>& actions, int n_actions) {
    Matrix probs = Matrix::Zero(static_cast<Eigen::Index>(actions.size()), n_actions);
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] < 0 || actions[s] >= n_actions) {
            throw std::invalid_argument("deterministic policy action out of range");
        }
        probs(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
    }
    return Policy(std::move(probs));
}

Policy Policy::mixture(const Policy& first, const Policy& second, double weight) {
    if (weight < 0.0 || weight > 1.0) throw std::invalid_argument("mixture weight outside [0,1]");
    if (first.probs_.rows() != second.probs_.rows() || first.probs_.cols() != second.probs_.cols()) {
        throw std::invalid_argument("mixture of policies with different shapes");
    }
    Matrix mixed = weight * first.probs_ + (1.0 - weight) * second.probs_;
    // Renormalize away rounding so the row-sum invariant holds to 1e-12.
    for (Eigen::Index s = 0; s < mixed.rows(); ++s) mixed.row(s) /= mixed.row(s).sum();
    return Policy(std::move(mixed));
}

Discount::Discount(double gamma) : gamma_(gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("discount must lie in [0, 1)");
}

void validate_compatible(const TabularMDP& mdp, const Policy& pi) {
    if (pi.n_states() != mdp.n_states() || pi.n_actions() != mdp.n_actions()) {
        throw std::invalid_argument("policy shape does not match MDP");
    }
}

Matrix state_transition(const TabularMDP& mdp, const Policy& pi) {
    validate_compatible(mdp, pi);
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    Matrix P = Matrix::Zero(S, S);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            P.row(s) += pi(s, a) * mdp.transition().row(sa_index(s, a, A));
        }
    }
    return P;
}

Matrix pair_transition(const TabularMDP& mdp, const Policy& pi) {
    validate_compatible(mdp, pi);
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    Matrix P = Matrix::Zero(S * A, S * A);
    for (Eigen::Index row = 0; row < S * A; ++row) {
        for (int sn = 0; sn < S; ++sn) {
            const double p = mdp.transition()(row, sn);
            if (p == 0.0) continue;
            for (int an = 0; an < A; ++an) P(row, sa_index(sn, an, A)) += p * pi(sn, an);
        }
    }
    return P;
}

OccupancyTable exact_occupancy(const TabularMDP& mdp, const Policy& pi, Discount gamma) {
    const int S = mdp.n_states();
    const Matrix P = state_transition(mdp, pi);
    const Matrix lhs = Matrix::Identity(S, S) - gamma.value() * P.transpose();
    const Vector rhs = (1.0 - gamma.value()) * mdp.initial_dist();
    const Vector rho = solve_or_throw(lhs, rhs, "exact_occupancy");
    OccupancyTable out{Matrix(S, mdp.n_actions())};
    for (int s = 0; s < S; ++s) out.d.row(s) = rho(s) * pi.probs().row(s);
    return out;
}

TabularSR exact_tabular_sr(const TabularMDP& mdp, const Policy& pi, Discount gamma) {
    const int S = mdp.n_states();
    const Matrix P = state_transition(mdp, pi);
    const Matrix lhs = Matrix::Identity(S, S) - gamma.value() * P;
    return TabularSR{solve_or_throw(lhs, Matrix::Identity(S, S), "exact_tabular_sr")};
}

double exact_return(const TabularMDP& mdp, const Policy& pi, Discount gamma) {
    return exact_occupancy(mdp, pi, gamma).d.cwiseProduct(mdp.reward()).sum();
}

Matrix exact_q_values(const TabularMDP& mdp, const Policy& pi, Discount gamma) {
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    const Matrix P = pair_transition(mdp, pi);
    const Matrix lhs = Matrix::Identity(S * A, S * A) - gamma.value() * P;
    Vector r(S * A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) r(sa_index(s, a, A)) = mdp.reward()(s, a);
    const Vector q = solve_or_throw(lhs, r, "exact_q_values");
    Matrix out(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) out(s, a) = q(sa_index(s, a, A));
    return out;
}

MaskedRatio exact_ratio_oracle(const TabularMDP& mdp, const Policy& pi, Discount gamma,
                               const Matrix& reference) {
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    if (reference.rows() != S || reference.cols() != A) {
        throw std::invalid_argument("reference distribution must have shape (S, A)");
    }
    if ((reference.array() < 0.0).any() || std::abs(reference.sum() - 1.0) > 1e-9) {
        throw std::invalid_argument("reference distribution must be nonnegative and sum to 1");
    }
    const Matrix d = exact_occupancy(mdp, pi, gamma).d;
    MaskedRatio out{Matrix::Zero(S, A), BoolMatrix::Constant(S, A, false), {}};
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            if (reference(s, a) > 0.0) {
                out.values(s, a) = d(s, a) / reference(s, a);
                out.valid(s, a) = true;
            } else if (d(s, a) > 0.0) {
                out.support_violations.push_back({s, a});
            }
        }
    }
    return out;
}

TabularMDP random_walk5() {
    constexpr int S = 5;
    constexpr int A = 2;
    Matrix P = Matrix::Zero(S * A, S);
    for (int s = 0; s < S; ++s) {
        P(sa_index(s, 0, A), s > 0 ? s - 1 : s) = 1.0;
        // The last state loops on action 1 (the text's "a_5" read as a_1).
        P(sa_index(s, 1, A), s < S - 1 ? s + 1 : s) = 1.0;
    }
    Matrix r = Matrix::Zero(S, A);
    r.row(S - 1).setOnes();
    Vector d0 = Vector::Zero(S);
    d0(0) = 1.0;
    return TabularMDP(S, A, std::move(P), std::move(r), std::move(d0));
}

namespace {

Vector random_simplex(int n, Rng& rng) {
    Vector v(n);
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        while (u <= 0.0) u = rng.uniform();
        v(i) = -std::log(u);
    }
    v /= v.sum();
    // Push rounding residue into the largest entry so the sum is 1 to 1e-15.
    Eigen::Index imax;
    v.maxCoeff(&imax);
    v(imax) += 1.0 - v.sum();
    return v;
}

}  // namespace

TabularMDP random_mdp(int n_states, int n_actions, Rng& rng) {
    Matrix P(n_states * n_actions, n_states);
    for (Eigen::Index row = 0; row < P.rows(); ++row) P.row(row) = random_simplex(n_states, rng);
    Matrix r(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) r(s, a) = rng.uniform();
    Vector d0 = random_simplex(n_states, rng);
    return TabularMDP(n_states, n_actions, std::move(P), std::move(r), std::move(d0));
}

Policy random_policy(int n_states, int n_actions, Rng& rng) {
    Matrix probs(n_states, n_actions);
    for (int s = 0; s < n_states; ++s) probs.row(s) = random_simplex(n_actions, rng).transpose();
    return Policy(std::move(probs));
}

}  // namespace srdice
