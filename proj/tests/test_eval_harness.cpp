#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "srdice/errors.hpp"
#include "srdice/harness.hpp"

using namespace srdice;

namespace {

RatioModel table_ratio(const Matrix& values) {
    return RatioModel(TabularRatio{MaskedRatio{values, BoolMatrix::Constant(values.rows(), values.cols(), true), {}}});
}

ExperimentConfig small_config(const std::string& method, long steps) {
    ExperimentConfig c = preset("toy_tabular", 3);
    c.methods = {method};
    c.steps = steps;
    c.seeds = 2;
    return c;
}

}  // namespace

TEST_SUITE("eval_harness") {

TEST_CASE("log MSE examples") {
    CHECK(std::abs(log_mse(1.0 + std::sqrt(2.0), 1.0).value) < 1e-12);
    CHECK(std::abs(log_mse(0.0, std::sqrt(2.0 * std::exp(1.0))).value - 1.0) < 1e-12);
    const LogMse exact = log_mse(0.3, 0.3);
    CHECK(exact.clamped);
    CHECK(exact.value == kLogMseFloor);
    CHECK(std::abs(kLogMseFloor - std::log(1e-30)) < 1e-12);
    CHECK(log_mse(2.0, 5.0).value == log_mse(5.0, 2.0).value);
    CHECK_FALSE(log_mse(2.0, 5.0).clamped);
    CHECK(log_ratio_mse(0.0) == kLogMseFloor);
    CHECK(std::abs(log_ratio_mse(std::exp(-3.0)) + 3.0) < 1e-12);
}

TEST_CASE("ratio MSE examples") {
    const TabularMDP mdp = random_walk5();
    const Policy pi = Policy::uniform(5, 2);
    const Dataset data = exhaustive_dataset(mdp, 1);
    const MaskedRatio truth = exact_ratio_oracle(mdp, pi, Discount(0.99), empirical_counts(data).distribution());
    CHECK(ratio_mse(truth.values, truth) == 0.0);
    CHECK(std::abs(ratio_mse(Matrix::Zero(5, 2), truth) - truth.values.array().square().mean()) < 1e-14);

    MaskedRatio single{Matrix::Zero(1, 2), BoolMatrix::Constant(1, 2, false), {}};
    single.values(0, 1) = 3.0;
    single.valid(0, 1) = true;
    Matrix est(1, 2);
    est << 100.0, 1.0;
    CHECK(ratio_mse(est, single) == 4.0);

    MaskedRatio none{Matrix::Zero(1, 2), BoolMatrix::Constant(1, 2, false), {}};
    CHECK_THROWS(ratio_mse(est, none));

    // A masked model entry reads as 0.
    BoolMatrix partial = BoolMatrix::Constant(1, 2, true);
    partial(0, 1) = false;
    const RatioModel masked(TabularRatio{MaskedRatio{Matrix::Constant(1, 2, 3.0), partial, {}}});
    CHECK(ratio_mse(masked, single) == 9.0);
}

TEST_CASE("smoothing and band entry") {
    const std::vector<double> xs{1, 2, 3, 4, 5};
    const std::vector<double> s3 = smooth(xs, 3);
    CHECK(s3 == std::vector<double>{1.0, 1.5, 2.0, 3.0, 4.0});
    CHECK(smooth(xs, 1) == xs);
    CHECK(smooth({}, 10).empty());

    CHECK(band_entry_index({5.0, 5.0, 5.0}) == 0);
    CHECK(band_entry_index({0.0, -10.0, -9.5, -10.2, -10.0}) == 1);
    CHECK(band_entry_index({-10.0, -5.0, -10.0, -10.0}) == 2);
    // A tolerance of zero only admits the exact final value.
    CHECK(band_entry_index({1.0, 2.0, 2.0}, 0.0) == 1);
}

TEST_CASE("Monte Carlo agrees with the exact return") {
    const TabularMDP mdp = random_walk5();
    const Policy pi = Policy::uniform(5, 2);
    const double truth = exact_return(mdp, pi, Discount(0.9));
    const MonteCarloEstimate mc = monte_carlo_return(mdp, pi, Discount(0.9), 100000, 11);
    CHECK(std::abs(mc.mean - truth) < 4.0 * mc.std_error);
    CHECK(monte_carlo_return(mdp, pi, Discount(0.9), 1000, 11).mean ==
          monte_carlo_return(mdp, pi, Discount(0.9), 1000, 11).mean);
}

TEST_CASE("random reward suite") {
    const TabularMDP mdp = random_walk5();
    const Policy pi = Policy::uniform(5, 2);
    const Dataset data = exhaustive_dataset(mdp, 1);
    const RandomRewardConfig cfg;

    SUBCASE("constant rewards and the keep band") {
        const RewardCase five = make_reward_case(mdp, pi, Discount(0.99), Matrix::Constant(5, 2, 5.0), cfg);
        CHECK(std::abs(five.truth - 5.0) < 1e-10);
        CHECK(five.kept);
        const RewardCase low = make_reward_case(mdp, pi, Discount(0.99), Matrix::Constant(5, 2, 0.5), cfg);
        CHECK_FALSE(low.kept);
        const RewardCase high = make_reward_case(mdp, pi, Discount(0.99), Matrix::Constant(5, 2, 9.5), cfg);
        CHECK_FALSE(high.kept);

        RandomRewardSuite suite;
        suite.cases = {five, low};
        const SuiteReport rep = evaluate_suite(suite, {{"ones", table_ratio(Matrix::Ones(5, 2))}}, data);
        REQUIRE(rep.kept == 1);
        CHECK(std::abs(rep.normalized_truth[0] - 1.0) < 1e-10);
        CHECK(std::abs(rep.raw_truth[0] - 5.0) < 1e-10);
    }
    SUBCASE("generation is deterministic and bounded") {
        RandomRewardConfig small = cfg;
        small.count = 1;
        const RandomRewardSuite a = random_reward_suite(mdp, pi, Discount(0.99), small, 4);
        const RandomRewardSuite b = random_reward_suite(mdp, pi, Discount(0.99), small, 4);
        REQUIRE(a.cases.size() == 1);
        CHECK(a.cases[0].reward == b.cases[0].reward);
        CHECK(a.cases[0].truth == b.cases[0].truth);
        CHECK(random_reward_suite(mdp, pi, Discount(0.99), small, 5).cases[0].reward != a.cases[0].reward);

        small.count = 50;
        const RandomRewardSuite many = random_reward_suite(mdp, pi, Discount(0.99), small, 4);
        for (const auto& c : many.cases) {
            CHECK(c.reward.minCoeff() >= 0.0);
            CHECK(c.reward.maxCoeff() <= 10.0);
            CHECK(std::abs(c.truth - exact_return(mdp.with_reward(c.reward), pi, Discount(0.99))) < 1e-12);
            CHECK(c.kept == (c.truth >= 1.0 && c.truth <= 9.0));
        }
        CHECK(many.kept() > 0);
    }
    SUBCASE("oracle ratios reproduce every truth") {
        RandomRewardConfig small = cfg;
        small.count = 30;
        const RandomRewardSuite suite = random_reward_suite(mdp, pi, Discount(0.99), small, 7);
        const MaskedRatio truth =
            exact_ratio_oracle(mdp, pi, Discount(0.99), empirical_counts(data).distribution());
        for (const auto& c : suite.cases) {
            const double mis = estimate_return_mis(RatioModel(TabularRatio{truth}), data.with_rewards(c.reward)).value;
            CHECK(std::abs(mis - c.truth) < 1e-9);
        }
        const SuiteReport rep = evaluate_suite(
            suite, {{"oracle", RatioModel(TabularRatio{truth})}, {"zero", table_ratio(Matrix::Zero(5, 2))}}, data);
        REQUIRE(rep.methods.size() == 2);
        CHECK(rep.methods[0].win_percentage == 100.0);
        CHECK(rep.methods[1].win_percentage == 0.0);
        for (double v : rep.log_mse[0]) CHECK(v < -40.0);
    }
    SUBCASE("win percentages") {
        RandomRewardConfig small = cfg;
        small.count = 40;
        const RandomRewardSuite suite = random_reward_suite(mdp, pi, Discount(0.99), small, 8);
        const RatioModel half = table_ratio(Matrix::Constant(5, 2, 0.5));
        const SuiteReport one = evaluate_suite(suite, {{"a", half}}, data);
        CHECK(one.methods[0].win_percentage == 100.0);
        const SuiteReport tie = evaluate_suite(suite, {{"a", half}, {"b", half}}, data);
        CHECK(tie.methods[0].win_percentage == 50.0);
        CHECK(tie.methods[1].win_percentage == 50.0);
        CHECK(tie.methods[0].mean_log_mse == tie.methods[1].mean_log_mse);
        const SuiteReport merged = merge_reports({tie, tie});
        CHECK(merged.kept == 2 * tie.kept);
        CHECK(merged.methods[0].win_percentage == 50.0);
        CHECK_THROWS(evaluate_suite(suite, {}, data));
    }
}

TEST_CASE("presets") {
    CHECK(preset_names().size() == 3);
    for (const auto& name : preset_names()) {
        const ExperimentConfig c = preset(name);
        CHECK(c.gamma == 0.99);
        CHECK(c.seeds == 10);
        CHECK(c.steps == 50000);
        CHECK(c.eval_every == 100);
        CHECK(c.combiner == ActionCombiner::KroneckerOneHot);
        CHECK(c.dataset == "exhaustive");
        CHECK(c.sr.optimizer.lr == 0.05);
        CHECK(c.dualdice.optimizer.lr == 0.05);
        CHECK(c.gradientdice.optimizer.lr == 0.1);
    }
    const ExperimentSetup dep = build_setup(preset("toy_dependent"));
    CHECK(dep.map.dim() == 6);
    CHECK(dep.dataset.size() == 10);
    CHECK(std::abs(dep.truth - exact_return(random_walk5(), Policy::uniform(5, 2), Discount(0.99))) < 1e-15);
    CHECK(build_setup(preset("toy_tabular")).map.table() == Matrix::Identity(10, 10));
    CHECK_THROWS_AS(preset("toy_pixels"), ConfigError);
}

TEST_CASE("config JSON round trip and validation") {
    ExperimentConfig c = preset("toy_inverted", 42);
    c.methods = {"deep_td", "srdice"};
    c.dualdice.lambda = 0.5;
    const ExperimentConfig back = experiment_from_json(Json::parse(to_json(c).dump()));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.seed == 42);
    CHECK(back.features == FeatureKind::Inverted);

    const ExperimentConfig from_preset = experiment_from_json(Json{{"preset", "toy_dependent"}, {"seeds", 3}});
    CHECK(from_preset.features == FeatureKind::Dependent);
    CHECK(from_preset.seeds == 3);

    CHECK_THROWS_AS(experiment_from_json(Json{{"preset", "toy_tabular"}, {"bogus", 1}}), ConfigError);
    CHECK_THROWS_AS(experiment_from_json(Json{{"gamma", "high"}}), ConfigError);
    CHECK_THROWS_AS(experiment_from_json(Json{{"methods", {"magic"}}}), ConfigError);
    try {
        experiment_from_json(Json{{"bogus", 1}});
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
}

TEST_CASE("trial seeds") {
    CHECK(trial_seed(0, 0, "srdice") == trial_seed(0, 0, "srdice"));
    CHECK(trial_seed(0, 0, "srdice") != trial_seed(0, 1, "srdice"));
    CHECK(trial_seed(0, 0, "srdice") != trial_seed(0, 0, "dualdice"));
    CHECK(trial_seed(1, 0, "srdice") == trial_seed(0, 1, "srdice"));
}

TEST_CASE("trace layout") {
    const ExperimentConfig c = small_config("srdice", 50000);
    const ExperimentSetup setup = build_setup(c);
    const TrialResult r = run_trial(c, setup, "srdice", 1);
    REQUIRE(r.trace.steps.size() == 500);
    CHECK(r.trace.steps.front() == 100);
    CHECK(r.trace.steps.back() == 50000);
    CHECK(r.seed == 4);
    CHECK(r.ratio.has_value());
    std::ostringstream out;
    write_trace_csv(r, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "method,seed,step,value_estimate,value_log_mse,ratio_mse");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 500);
    // SR-DICE from its untrained SR improves on the initial ratio error.
    CHECK(r.trace.ratio_mse.back() < r.trace.ratio_mse.front());

    const ExperimentConfig v = small_config("deep_td", 1000);
    const TrialResult q = run_trial(v, build_setup(v), "deep_td", 0);
    CHECK(q.trace.steps.size() == 10);
    CHECK_FALSE(q.ratio.has_value());
    for (double x : q.trace.ratio_mse) CHECK(std::isnan(x));
}

TEST_CASE("experiments are deterministic and thread-count independent") {
    ExperimentConfig c = small_config("srdice", 2000);
    c.methods = {"srdice", "deep_sr", "deep_td", "dualdice", "gradientdice"};
    const ExperimentSetup setup = build_setup(c);
    const auto a = run_experiment(c, setup, 1);
    const auto b = run_experiment(c, setup, 4);
    REQUIRE(a.size() == 10);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].method == c.methods[i / 2]);
        CHECK(a[i].trial == static_cast<int>(i % 2));
        std::ostringstream x, y;
        write_trace_csv(a[i], x);
        write_trace_csv(b[i], y);
        CHECK(x.str() == y.str());
    }
    const auto sums = summarize(c, a);
    REQUIRE(sums.size() == 5);
    CHECK(sums[0].smoothed_log_ratio_mse.size() == 20);
    CHECK(sums[1].smoothed_log_ratio_mse.empty());
    CHECK(std::isnan(sums[2].final_log_ratio_mse));
    CHECK(summary_json(c, sums, a).dump() == summary_json(c, summarize(c, b), b).dump());
}

TEST_CASE("property: SR-DICE beats its initialization on every preset") {
    for (const auto& name : preset_names()) {
        ExperimentConfig c = preset(name, 9);
        c.steps = 10000;
        const ExperimentSetup setup = build_setup(c);
        const TrialResult r = run_trial(c, setup, "srdice", 0);
        std::optional<double> initial;
        TDConfig td = c.sr;
        td.steps = 0;
        td.eval_every = 1;
        td.seed = trial_seed(c.seed, 0, "srdice");
        learn_sr_td(setup.dataset, setup.map, setup.pi, td, [&](long, const PairFunction& psi) {
            initial = ratio_mse(RatioModel(srdice_closed_form_w(setup.dataset, to_feature_sr(psi), setup.pi,
                                                                Discount(c.gamma), setup.map)),
                                setup.oracle);
        });
        REQUIRE(initial);
        INFO(name << " initial " << *initial << " final " << r.trace.ratio_mse.back());
        CHECK(r.trace.ratio_mse.back() < *initial);
    }
}

TEST_CASE("format_double") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

}  // TEST_SUITE
