#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "srdice/metrics.hpp"
#include "srdice/serialize.hpp"

using namespace srdice;

namespace {

// Action 0 keeps the state, action 1 jumps uniformly.
TabularMDP self_loop_mdp(int S, Rng& rng) {
    const int A = 2;
    Matrix P = Matrix::Zero(S * A, S);
    for (int s = 0; s < S; ++s) {
        P(s * A + 0, s) = 1.0;
        P.row(s * A + 1).setConstant(1.0 / S);
    }
    Matrix r(S, A);
    for (int i = 0; i < r.size(); ++i) r(i) = rng.uniform();
    Vector d0(S);
    for (int s = 0; s < S; ++s) d0(s) = 1.0 + rng.uniform();
    d0 /= d0.sum();
    return TabularMDP(S, A, P, r, d0);
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("mdp_core") {

TEST_CASE("random walk dynamics") {
    const TabularMDP mdp = random_walk5();
    CHECK(mdp.n_states() == 5);
    CHECK(mdp.n_actions() == 2);
    CHECK(mdp.deterministic());
    CHECK(mdp.p(0, 0, 0) == 1.0);
    CHECK(mdp.p(2, 0, 1) == 1.0);
    CHECK(mdp.p(2, 1, 3) == 1.0);
    CHECK(mdp.p(4, 1, 4) == 1.0);
    CHECK(mdp.p(4, 0, 3) == 1.0);
    CHECK(mdp.initial_dist()(0) == 1.0);
    CHECK(mdp.reward()(4, 0) == 1.0);
    CHECK(mdp.reward()(3, 1) == 0.0);
}

TEST_CASE("validation rejects malformed inputs") {
    Matrix P = Matrix::Constant(2, 2, 0.5);
    Matrix r = Matrix::Zero(2, 1);
    Vector d0 = Vector::Constant(2, 0.5);
    CHECK_NOTHROW(TabularMDP(2, 1, P, r, d0));
    Matrix bad = P;
    bad(0, 0) = 0.6;
    CHECK_THROWS(TabularMDP(2, 1, bad, r, d0));
    bad = P;
    bad(1, 0) = -0.5;
    bad(1, 1) = 1.5;
    CHECK_THROWS(TabularMDP(2, 1, bad, r, d0));
    CHECK_THROWS(TabularMDP(2, 1, P, r, Vector::Constant(2, 0.4)));
    CHECK_THROWS(Policy(Matrix::Constant(2, 2, 0.4)));
    CHECK_THROWS(Discount(1.0));
    CHECK_THROWS(Discount(-0.1));
    CHECK_NOTHROW(Discount(0.0));
    CHECK_THROWS(validate_compatible(random_walk5(), Policy::uniform(4, 2)));
}

TEST_CASE("occupancy at gamma 0 is d0 times pi") {
    Rng rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const TabularMDP mdp = random_mdp(6, 3, rng);
        const Policy pi = random_policy(6, 3, rng);
        const Matrix d = exact_occupancy(mdp, pi, Discount(0.0)).d;
        for (int s = 0; s < 6; ++s)
            for (int a = 0; a < 3; ++a) CHECK(std::abs(d(s, a) - mdp.initial_dist()(s) * pi(s, a)) < 1e-14);
    }
}

TEST_CASE("random walk occupancy matches truncated series") {
    const TabularMDP mdp = random_walk5();
    const Policy pi = Policy::uniform(5, 2);
    const Matrix d = exact_occupancy(mdp, pi, Discount(0.99)).d;
    const Matrix series = oracle::series_occupancy(mdp, pi, 0.99, 10000);
    CHECK(max_abs(d - series) < 1e-8);
    CHECK(std::abs(d.sum() - 1.0) < 1e-9);
}

TEST_CASE("self-loop policy keeps the start distribution") {
    Rng rng(2);
    const TabularMDP mdp = self_loop_mdp(4, rng);
    const Policy stay = Policy::deterministic({0, 0, 0, 0}, 2);
    for (double g : {0.0, 0.5, 0.99}) {
        const Matrix d = exact_occupancy(mdp, stay, Discount(g)).d;
        for (int s = 0; s < 4; ++s) {
            CHECK(std::abs(d(s, 0) - mdp.initial_dist()(s)) < 1e-12);
            CHECK(d(s, 1) == doctest::Approx(0.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("tabular SR examples") {
    const TabularMDP mdp = random_walk5();
    const Policy pi = Policy::uniform(5, 2);
    CHECK(max_abs(exact_tabular_sr(mdp, pi, Discount(0.0)).psi - Matrix::Identity(5, 5)) == 0.0);
    const Matrix psi99 = exact_tabular_sr(mdp, pi, Discount(0.99)).psi;
    for (int s = 0; s < 5; ++s) CHECK(std::abs(psi99.row(s).sum() - 100.0) < 1e-8);
    const Matrix psi9 = exact_tabular_sr(mdp, pi, Discount(0.9)).psi;
    CHECK(max_abs(psi9 - oracle::series_sr(mdp, pi, 0.9, 5000)) < 1e-8);
}

TEST_CASE("exact return examples") {
    Rng rng(3);
    const TabularMDP base = random_mdp(5, 3, rng);
    const Policy pi = random_policy(5, 3, rng);
    for (double g : {0.0, 0.7, 0.99}) {
        CHECK(std::abs(exact_return(base.with_reward(Matrix::Constant(5, 3, 2.5)), pi, Discount(g)) - 2.5) < 1e-12);
        CHECK(exact_return(base.with_reward(Matrix::Zero(5, 3)), pi, Discount(g)) == 0.0);
    }

    const TabularMDP mdp = random_walk5();
    const Policy uniform = Policy::uniform(5, 2);
    const double truth = exact_return(mdp, uniform, Discount(0.99));
    const Matrix d = exact_occupancy(mdp, uniform, Discount(0.99)).d;
    CHECK(std::abs(truth - (d.array() * mdp.reward().array()).sum()) < 1e-14);

    // Discounted rollouts truncated where gamma^t < 1e-9, averaged.
    Rng sim(44);
    const long episodes = 100000;
    const int horizon = static_cast<int>(std::ceil(std::log(1e-9) / std::log(0.99)));
    double sum = 0.0, sum_sq = 0.0;
    for (long e = 0; e < episodes; ++e) {
        int s = 0;
        double ret = 0.0, g = 1.0;
        for (int t = 0; t < horizon; ++t) {
            const int a = static_cast<int>(sim.index(2));
            ret += g * mdp.reward()(s, a);
            g *= 0.99;
            s = a == 0 ? std::max(s - 1, 0) : std::min(s + 1, 4);
        }
        ret *= 0.01;
        sum += ret;
        sum_sq += ret * ret;
    }
    const double mean = sum / episodes;
    const double se = std::sqrt((sum_sq / episodes - mean * mean) / episodes);
    CHECK(std::abs(mean - truth) < 3.0 * se + 1e-9 * truth);
}

TEST_CASE("Q-value examples and identity") {
    Rng rng(4);
    const TabularMDP mdp = random_mdp(4, 2, rng);
    const Policy pi = random_policy(4, 2, rng);
    CHECK(max_abs(exact_q_values(mdp, pi, Discount(0.0)) - mdp.reward()) < 1e-14);
    const Matrix q1 = exact_q_values(mdp.with_reward(Matrix::Ones(4, 2)), pi, Discount(0.9));
    CHECK(max_abs(q1 - Matrix::Constant(4, 2, 10.0)) < 1e-9);

    for (int trial = 0; trial < 20; ++trial) {
        const int S = 2 + static_cast<int>(rng.index(8)), A = 1 + static_cast<int>(rng.index(4));
        const TabularMDP m = random_mdp(S, A, rng);
        const Policy p = random_policy(S, A, rng);
        const double g = rng.uniform(0.0, 0.99);
        const Matrix q = exact_q_values(m, p, Discount(g));
        double via_q = 0.0;
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) via_q += m.initial_dist()(s) * p(s, a) * q(s, a);
        via_q *= 1.0 - g;
        CHECK(std::abs(via_q - exact_return(m, p, Discount(g))) < 1e-9);
    }
}

TEST_CASE("ratio oracle examples") {
    const TabularMDP mdp = random_walk5();
    const Policy pi = Policy::uniform(5, 2);
    const Discount g(0.99);
    const Matrix d = exact_occupancy(mdp, pi, g).d;

    const MaskedRatio on_policy = exact_ratio_oracle(mdp, pi, g, d);
    for (int i = 0; i < d.size(); ++i) {
        if (d(i) > 0.0) {
            CHECK(on_policy.valid(i));
            CHECK(std::abs(on_policy.values(i) - 1.0) < 1e-9);
        }
    }

    const Matrix uniform = Matrix::Constant(5, 2, 0.1);
    const MaskedRatio r = exact_ratio_oracle(mdp, pi, g, uniform);
    CHECK(r.support_violations.empty());
    CHECK(r.valid.all());
    const Matrix series = oracle::series_occupancy(mdp, pi, 0.99, 10000);
    CHECK(max_abs(r.values - 10.0 * series) < 1e-7);
    CHECK(max_abs(r.values - 10.0 * d) < 1e-12);

    Rng rng(5);
    const TabularMDP other = random_mdp(3, 2, rng);
    const Policy q = random_policy(3, 2, rng);
    const Matrix dq = exact_occupancy(other, q, g).d;
    const MaskedRatio r6 = exact_ratio_oracle(other, q, g, Matrix::Constant(3, 2, 1.0 / 6.0));
    CHECK(max_abs(r6.values - 6.0 * dq) < 1e-12);
}

TEST_CASE("ratio oracle masks and reports support violations") {
    const TabularMDP mdp = random_walk5();
    const Policy pi = Policy::uniform(5, 2);
    Matrix ref = Matrix::Zero(5, 2);
    ref(0, 0) = 0.5;
    ref(1, 1) = 0.5;
    const MaskedRatio r = exact_ratio_oracle(mdp, pi, Discount(0.9), ref);
    CHECK(r.valid.count() == 2);
    CHECK(r.values(2, 0) == 0.0);
    CHECK(r.support_violations.size() == 8);
    for (const auto& sa : r.support_violations) CHECK_FALSE(r.valid(sa.s, sa.a));
    CHECK_THROWS(exact_ratio_oracle(mdp, pi, Discount(0.9), Matrix::Constant(5, 2, 0.2)));
}

TEST_CASE("property: conservation and Bellman identities on random MDPs") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const int S = 1 + static_cast<int>(rng.index(10)), A = 1 + static_cast<int>(rng.index(4));
        const TabularMDP mdp = random_mdp(S, A, rng);
        const Policy pi = random_policy(S, A, rng);
        const double gamma = trial % 5 == 0 ? 0.99 : rng.uniform(0.0, 0.99);
        const Discount g(gamma);
        const Matrix d = exact_occupancy(mdp, pi, g).d;
        const Matrix psi = exact_tabular_sr(mdp, pi, g).psi;
        const Matrix p = oracle::state_chain(mdp, pi);

        CHECK(std::abs(d.sum() - 1.0) < 1e-9);
        CHECK(d.minCoeff() >= -1e-15);
        for (int s = 0; s < S; ++s) CHECK(std::abs(psi.row(s).sum() - 1.0 / (1.0 - gamma)) < 1e-8);
        CHECK(max_abs(psi - (Matrix::Identity(S, S) + gamma * p * psi)) < 1e-8);

        // d(s, a) = (1 - gamma) E_{s0}[psi(s0, s)] pi(a|s)
        const Eigen::RowVectorXd visits = mdp.initial_dist().transpose() * psi;
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) CHECK(std::abs(d(s, a) - (1.0 - gamma) * visits(s) * pi(s, a)) < 1e-9);

        const Matrix q = exact_q_values(mdp, pi, g);
        Vector v(S);
        for (int s = 0; s < S; ++s) v(s) = pi.probs().row(s).dot(q.row(s));
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                double next = 0.0;
                for (int s2 = 0; s2 < S; ++s2) next += mdp.p(s, a, s2) * v(s2);
                CHECK(std::abs(q(s, a) - mdp.reward()(s, a) - gamma * next) < 1e-8);
            }
        CHECK(std::abs((1.0 - gamma) * mdp.initial_dist().dot(v) - exact_return(mdp, pi, g)) < 1e-9);
    }
}

TEST_CASE("mixture policy") {
    Rng rng(7);
    const Policy a = random_policy(4, 3, rng), b = random_policy(4, 3, rng);
    const Policy m = Policy::mixture(a, b, 0.2);
    CHECK(max_abs(m.probs() - (0.2 * a.probs() + 0.8 * b.probs())) < 1e-15);
    for (int s = 0; s < 4; ++s) CHECK(std::abs(m.probs().row(s).sum() - 1.0) < 1e-12);
}

TEST_CASE("MDP and policy JSON round trip") {
    Rng rng(8);
    const TabularMDP mdp = random_mdp(3, 2, rng);
    const Json j = to_json(mdp);
    CHECK(j.at("transition").size() == 3);
    CHECK(j.at("transition")[0].size() == 2);
    CHECK(j.at("transition")[0][1].size() == 3);
    CHECK(j.at("transition")[1][0][2].get<double>() == mdp.p(1, 0, 2));
    const TabularMDP back = mdp_from_json(j);
    CHECK(back.transition() == mdp.transition());
    CHECK(back.reward() == mdp.reward());
    CHECK(back.initial_dist() == mdp.initial_dist());
    CHECK_FALSE(back.horizon().has_value());

    Json with_h = j;
    with_h["horizon"] = 7;
    CHECK(mdp_from_json(with_h).horizon() == 7);

    const Policy pi = random_policy(3, 2, rng);
    CHECK(policy_from_json(to_json(pi)).probs() == pi.probs());
    CHECK(policy_from_json(to_json(pi).at("probs")).probs() == pi.probs());
}

TEST_CASE("Monte Carlo return agrees with exact return") {
    Rng rng(9);
    const TabularMDP mdp = random_mdp(4, 2, rng);
    const Policy pi = random_policy(4, 2, rng);
    const MonteCarloEstimate mc = monte_carlo_return(mdp, pi, Discount(0.9), 200000, 10);
    CHECK(std::abs(mc.mean - exact_return(mdp, pi, Discount(0.9))) < 4.0 * mc.std_error);
}

}  // TEST_SUITE
