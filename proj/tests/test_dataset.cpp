#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "srdice/serialize.hpp"
#include "srdice/errors.hpp"

using namespace srdice;

namespace {

std::string serialize(const Dataset& d) {
    std::ostringstream out;
    write_jsonl(d, out);
    return out.str();
}

// Stationary distribution of P by repeated multiplication.
Vector stationary(const Matrix& p) {
    Eigen::RowVectorXd x = Eigen::RowVectorXd::Constant(p.rows(), 1.0 / static_cast<double>(p.rows()));
    for (int i = 0; i < 100000; ++i) x = x * p;
    return x.transpose();
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("rollout with one step") {
    const Dataset d = rollout(random_walk5(), Policy::uniform(5, 2), 1, 10, 3);
    CHECK(d.size() == 1);
    CHECK(d.start_states().size() == 1);
    CHECK(d.start_states()[0] == 0);
    CHECK(d.transitions()[0].s == 0);
}

TEST_CASE("deterministic MDP and policy give seed-independent rollouts") {
    const Policy right = Policy::deterministic({1, 1, 0, 1, 0}, 2);
    const std::string a = serialize(rollout(random_walk5(), right, 200, 17, 1));
    const std::string b = serialize(rollout(random_walk5(), right, 200, 17, 999));
    // The header records the seed; every other line must agree.
    CHECK(a.substr(a.find('\n')) == b.substr(b.find('\n')));
}

TEST_CASE("rollout episodes restart and record start states") {
    const Dataset d = rollout(random_walk5(), Policy::uniform(5, 2), 95, 10, 5);
    CHECK(d.size() == 95);
    CHECK(d.start_states().size() == 10);
    for (std::size_t i = 0; i < d.size(); i += 10) CHECK(d.transitions()[i].s == 0);
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
        if ((i + 1) % 10 != 0) CHECK(d.transitions()[i].s_next == d.transitions()[i + 1].s);
    }
    for (const auto& t : d.transitions()) CHECK(t.r == random_walk5().reward()(t.s, t.a));
}

TEST_CASE("horizon caps the episode length") {
    const TabularMDP base = random_walk5();
    const TabularMDP capped(5, 2, base.transition(), base.reward(), base.initial_dist(), 3);
    const Dataset d = rollout(capped, Policy::uniform(5, 2), 30, 100, 1);
    CHECK(d.start_states().size() == 10);
}

TEST_CASE("long rollout frequencies approach the stationary distribution") {
    const TabularMDP mdp = random_walk5();
    const Policy pi = Policy::uniform(5, 2);
    const int n = 50000;
    const Dataset d = rollout(mdp, pi, n, n, 11);
    const Vector rho = stationary(oracle::state_chain(mdp, pi));
    const Matrix freq = empirical_counts(d).distribution();
    // The walk mixes slowly (second eigenvalue ~0.81), which inflates the
    // multinomial variance by about (1 + l) / (1 - l) ~ 10.
    double chi2 = 0.0;
    for (int s = 0; s < 5; ++s)
        for (int a = 0; a < 2; ++a) {
            const double expected = rho(s) * pi(s, a);
            chi2 += n * (freq(s, a) - expected) * (freq(s, a) - expected) / expected;
            CHECK(std::abs(freq(s, a) - expected) < 0.02);
        }
    CHECK(chi2 < 10.0 * 9.0 * 4.0);
}

TEST_CASE("exhaustive dataset is uniform") {
    const Dataset d1 = exhaustive_dataset(random_walk5(), 1);
    CHECK(d1.size() == 10);
    const EmpiricalCounts c1 = empirical_counts(d1);
    CHECK((c1.counts.array() == 1).all());
    CHECK((c1.distribution().array() == 0.1).all());
    CHECK(d1.start_states() == std::vector<int>{0});

    const Dataset d3 = exhaustive_dataset(random_walk5(), 3);
    CHECK(d3.size() == 30);
    CHECK((empirical_counts(d3).counts.array() == 3).all());

    Rng rng(4);
    const TabularMDP stochastic = random_mdp(4, 3, rng);
    const Dataset ds = exhaustive_dataset(stochastic, 2, 5);
    const EmpiricalCounts cs = empirical_counts(ds);
    CHECK((cs.counts.array() == 2).all());
    CHECK(ds.start_states().size() == 4);
    for (const auto& t : ds.transitions()) CHECK(stochastic.p(t.s, t.a, t.s_next) > 0.0);
}

TEST_CASE("empirical counts") {
    const Dataset one(2, 2, {{0, 1, 0.5, 1}}, {0});
    const EmpiricalCounts c = empirical_counts(one);
    CHECK(c.counts(0, 1) == 1);
    CHECK(c.total == 1);
    CHECK(c.counts.sum() == 1);

    const Dataset two(2, 2, {{0, 1, 0.0, 0}, {1, 0, 0.0, 1}, {1, 0, 0.0, 1}}, {1});
    const Dataset both = concat(one, two);
    const EmpiricalCounts cb = empirical_counts(both);
    CHECK(cb.counts == c.counts + empirical_counts(two).counts);
    CHECK(cb.total == 4);
    CHECK(both.start_states().size() == 2);
}

TEST_CASE("property: counts total equals dataset size") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const int S = 1 + static_cast<int>(rng.index(8)), A = 1 + static_cast<int>(rng.index(4));
        const TabularMDP mdp = random_mdp(S, A, rng);
        const Dataset d = trial % 2 ? oracle::random_dataset(mdp, 1 + static_cast<int>(rng.index(300)), rng)
                                    : rollout(mdp, random_policy(S, A, rng), 1 + static_cast<int>(rng.index(300)),
                                              1 + static_cast<int>(rng.index(20)), rng.next());
        const EmpiricalCounts c = empirical_counts(d);
        CHECK(c.total == static_cast<long>(d.size()));
        CHECK(c.counts.sum() == c.total);
        CHECK(std::abs(c.distribution().sum() - 1.0) < 1e-12);
    }
}

TEST_CASE("rollout is reproducible byte for byte") {
    Rng rng(13);
    const TabularMDP mdp = random_mdp(5, 3, rng);
    const Policy pi = random_policy(5, 3, rng);
    CHECK(serialize(rollout(mdp, pi, 500, 20, 77)) == serialize(rollout(mdp, pi, 500, 20, 77)));
    CHECK(serialize(rollout(mdp, pi, 500, 20, 77)) != serialize(rollout(mdp, pi, 500, 20, 78)));
}

TEST_CASE("JSONL format and round trip") {
    const Dataset d = rollout(random_walk5(), Policy::uniform(5, 2), 25, 10, 2, "uniform", "randomwalk5");
    const std::string text = serialize(d);
    std::istringstream lines(text);
    std::string first;
    std::getline(lines, first);
    const Json header = Json::parse(first);
    CHECK(header.at("kind") == "dataset");
    CHECK(header.at("seed") == 2);
    CHECK(header.at("env") == "randomwalk5");
    std::string second;
    std::getline(lines, second);
    const Json t = Json::parse(second);
    for (const char* key : {"s", "a", "r", "s_next"}) CHECK(t.contains(key));

    std::istringstream in(text);
    const Dataset back = read_jsonl(in);
    CHECK(serialize(back) == text);
    CHECK(back.start_states() == d.start_states());

    const auto path = std::filesystem::temp_directory_path() / "srdice_dataset_test.jsonl";
    save_dataset(d, path.string());
    CHECK(serialize(load_dataset(path.string())) == text);
    std::filesystem::remove(path);
}

TEST_CASE("malformed or missing dataset files") {
    std::istringstream empty("");
    CHECK_THROWS_AS(read_jsonl(empty), ConfigError);
    std::istringstream wrong_kind("{\"kind\":\"mdp\"}\n");
    CHECK_THROWS_AS(read_jsonl(wrong_kind), ConfigError);
    std::istringstream no_starts("{\"kind\":\"dataset\",\"seed\":0,\"env\":\"x\"}\n{\"s\":0,\"a\":0,\"r\":1,\"s_next\":0}\n");
    CHECK_THROWS_AS(read_jsonl(no_starts), ConfigError);
    std::istringstream garbage("{\"kind\":\"dataset\"}\nnot json\n");
    CHECK_THROWS_AS(read_jsonl(garbage), ConfigError);
    CHECK_THROWS_AS(load_dataset("/nonexistent/dir/data.jsonl"), IoError);
}

TEST_CASE("reward substitution and start-state requirement") {
    const Dataset d = exhaustive_dataset(random_walk5(), 1);
    Matrix r(5, 2);
    for (int i = 0; i < 10; ++i) r(i) = i;
    const Dataset d2 = d.with_rewards(r);
    for (const auto& t : d2.transitions()) CHECK(t.r == r(t.s, t.a));
    CHECK(std::abs(d2.mean_reward() - 4.5) < 1e-12);
    const Dataset no_start(2, 1, {{0, 0, 1.0, 1}}, {});
    CHECK_THROWS(no_start.require_start_states());
    CHECK_THROWS(Dataset(2, 1, {}, {0}));
    CHECK_THROWS(Dataset(2, 1, {{0, 1, 0.0, 0}}, {0}));
}

}  // TEST_SUITE
