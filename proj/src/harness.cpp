#include "srdice/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <thread>

#include "srdice/encoder.hpp"
#include "srdice/errors.hpp"
#include "srdice/linalg.hpp"

namespace srdice {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(const std::vector<double>& xs) {
    return xs.empty() ? kNaN : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double std_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size()));
}

// Summaries from the per-method log MSE columns.
void finalize_report(SuiteReport& report, const std::vector<std::string>& names) {
    const std::size_t m = names.size();
    const std::size_t k = report.kept;
    std::vector<double> wins(m, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) best = std::min(best, report.log_mse[i][r]);
        std::size_t n_best = 0;
        for (std::size_t i = 0; i < m; ++i) n_best += report.log_mse[i][r] == best;
        if (n_best == 0) continue;  // every method NaN
        for (std::size_t i = 0; i < m; ++i) {
            if (report.log_mse[i][r] == best) wins[i] += 1.0 / static_cast<double>(n_best);
        }
    }
    report.methods.clear();
    for (std::size_t i = 0; i < m; ++i) {
        report.methods.push_back({names[i], mean_of(report.log_mse[i]), std_of(report.log_mse[i]),
                                  k == 0 ? 0.0 : 100.0 * wins[i] / static_cast<double>(k)});
    }
}

}  // namespace

// ------------------------------------------------------- random rewards

std::size_t RandomRewardSuite::kept() const {
    return static_cast<std::size_t>(std::count_if(cases.begin(), cases.end(), [](const auto& c) { return c.kept; }));
}

RewardCase make_reward_case(const TabularMDP& mdp, const Policy& pi, Discount gamma, Matrix reward,
                            const RandomRewardConfig& config) {
    RewardCase c;
    c.truth = exact_return(mdp.with_reward(reward), pi, gamma);
    const double scaled = c.truth / config.scale;
    c.kept = scaled >= config.keep_low && scaled <= config.keep_high;
    c.reward = std::move(reward);
    return c;
}

RandomRewardSuite random_reward_suite(const TabularMDP& mdp, const Policy& pi, Discount gamma,
                                      const RandomRewardConfig& config, std::uint64_t seed) {
    if (config.count < 1) throw std::invalid_argument("random_reward_suite: count must be >= 1");
    const int S = mdp.n_states(), A = mdp.n_actions();
    std::vector<int> sizes{S * A};
    sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
    sizes.push_back(1);
    const Matrix inputs = Matrix::Identity(S * A, S * A);
    RandomRewardSuite suite;
    suite.config = config;
    suite.cases.reserve(static_cast<std::size_t>(config.count));
    for (int k = 0; k < config.count; ++k) {
        Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(k));
        const Mlp net = Mlp::normal_init(sizes, Activation::Relu, Activation::Sigmoid, rng);
        const Vector values = config.scale * net.forward(inputs).col(0);
        RewardCase c = make_reward_case(mdp, pi, gamma, pairs_to_table(values, S, A), config);
        c.seed = static_cast<std::uint64_t>(k);
        suite.cases.push_back(std::move(c));
    }
    return suite;
}

SuiteReport evaluate_suite(const RandomRewardSuite& suite, const std::vector<NamedRatio>& methods,
                           const Dataset& dataset) {
    if (methods.empty()) throw std::invalid_argument("evaluate_suite: no methods");
    SuiteReport report;
    report.log_mse.resize(methods.size());
    std::vector<std::string> names;
    std::vector<Matrix> tables;
    for (const auto& m : methods) {
        names.push_back(m.method);
        Matrix t = m.ratio.table();
        const BoolMatrix valid = m.ratio.valid();
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            if (!valid(i)) t(i) = 0.0;
        }
        tables.push_back(std::move(t));
    }
    const double n = static_cast<double>(dataset.size());
    for (const auto& c : suite.cases) {
        if (!c.kept) continue;
        double mean_reward = 0.0;
        for (const auto& t : dataset.transitions()) mean_reward += c.reward(t.s, t.a);
        mean_reward /= n;
        const double norm = mean_reward > 0.0 ? mean_reward : 1.0;
        report.raw_truth.push_back(c.truth);
        report.normalized_truth.push_back(c.truth / norm);
        for (std::size_t i = 0; i < methods.size(); ++i) {
            double est = 0.0;
            for (const auto& t : dataset.transitions()) est += tables[i](t.s, t.a) * c.reward(t.s, t.a);
            est /= n;
            report.log_mse[i].push_back(log_mse(est / norm, c.truth / norm).value);
        }
        ++report.kept;
    }
    finalize_report(report, names);
    return report;
}

SuiteReport merge_reports(const std::vector<SuiteReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("merge_reports: nothing to merge");
    SuiteReport merged;
    std::vector<std::string> names;
    for (const auto& m : reports.front().methods) names.push_back(m.method);
    merged.log_mse.resize(names.size());
    for (const auto& r : reports) {
        if (r.methods.size() != names.size()) throw std::invalid_argument("merge_reports: method sets differ");
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (r.methods[i].method != names[i]) throw std::invalid_argument("merge_reports: method order differs");
            merged.log_mse[i].insert(merged.log_mse[i].end(), r.log_mse[i].begin(), r.log_mse[i].end());
        }
        merged.raw_truth.insert(merged.raw_truth.end(), r.raw_truth.begin(), r.raw_truth.end());
        merged.normalized_truth.insert(merged.normalized_truth.end(), r.normalized_truth.begin(),
                                       r.normalized_truth.end());
        merged.kept += r.kept;
    }
    finalize_report(merged, names);
    return merged;
}

// ---------------------------------------------------------- experiments

void MetricTrace::add(long step, double value, double value_log, double ratio) {
    if (!steps.empty() && step <= steps.back()) throw std::invalid_argument("MetricTrace: steps must increase");
    steps.push_back(step);
    value_estimate.push_back(value);
    value_log_mse.push_back(value_log);
    ratio_mse.push_back(ratio);
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"toy_tabular", "toy_inverted", "toy_dependent"};
    return names;
}

const std::vector<std::string>& method_names() {
    static const std::vector<std::string> names{"srdice", "deep_sr", "deep_td", "dualdice", "gradientdice"};
    return names;
}

ExperimentConfig preset(const std::string& name, std::uint64_t seed) {
    ExperimentConfig c;
    if (name == "toy_tabular") {
        c.features = FeatureKind::TabularState;
    } else if (name == "toy_inverted") {
        c.features = FeatureKind::Inverted;
    } else if (name == "toy_dependent") {
        c.features = FeatureKind::Dependent;
    } else {
        throw ConfigError("preset: unknown name '" + name + "'");
    }
    c.name = name;
    c.seed = seed;
    c.sr.optimizer = {OptimizerKind::Sgd, 0.05};
    c.sr.target_update_every = 1;
    c.deep_td = c.sr;
    c.dualdice.optimizer = {OptimizerKind::Sgd, 0.05};
    c.gradientdice.optimizer = {OptimizerKind::Sgd, 0.1};
    c.gradientdice.u_lr = 1e-2;
    c.gradientdice.lambda = 1.0;
    return c;
}

namespace {

template <class T>
T get_field(const Json& j, const std::string& key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(where + key + ": " + e.what());
    }
}

template <class F>
void apply_enum(const Json& j, const std::string& key, const std::string& where, F&& assign) {
    try {
        assign(get_field<std::string>(j, key, where));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + key + ": " + e.what());
    }
}

Json td_to_json(const TDConfig& c) {
    return {{"optimizer", to_string(c.optimizer.kind)},
            {"lr", c.optimizer.lr},
            {"model", to_string(c.model)},
            {"hidden", c.hidden},
            {"activation", to_string(c.hidden_act)},
            {"target_update_every", c.target_update_every},
            {"next_mode", to_string(c.next_mode)}};
}

Json dice_to_json(const DiceConfig& c) {
    return {{"optimizer", to_string(c.optimizer.kind)},
            {"lr", c.optimizer.lr},
            {"u_lr", c.u_lr},
            {"lambda", c.lambda},
            {"model", to_string(c.model)},
            {"hidden", c.hidden},
            {"activation", to_string(c.hidden_act)},
            {"next_mode", to_string(c.next_mode)},
            {"start_mode", to_string(c.start_mode)},
            {"start_batch", c.start_batch},
            {"divergence_threshold", c.divergence_threshold}};
}

// Fields shared by both sub-blocks; returns false for an unrecognized key.
template <class C>
bool apply_model_field(C& c, const std::string& key, const Json& j, const std::string& where) {
    if (key == "optimizer") {
        apply_enum(j, key, where, [&](const std::string& v) { c.optimizer.kind = optimizer_kind_from_string(v); });
    } else if (key == "lr") {
        c.optimizer.lr = get_field<double>(j, key, where);
        if (!(c.optimizer.lr > 0.0)) throw ConfigError(where + "lr: must be positive");
    } else if (key == "model") {
        apply_enum(j, key, where, [&](const std::string& v) { c.model = model_kind_from_string(v); });
    } else if (key == "hidden") {
        c.hidden = get_field<std::vector<int>>(j, key, where);
        for (int h : c.hidden) {
            if (h < 1) throw ConfigError(where + "hidden: sizes must be positive");
        }
    } else if (key == "activation") {
        apply_enum(j, key, where, [&](const std::string& v) { c.hidden_act = activation_from_string(v); });
    } else if (key == "next_mode") {
        apply_enum(j, key, where, [&](const std::string& v) { c.next_mode = expectation_mode_from_string(v); });
    } else {
        return false;
    }
    return true;
}

void apply_td(TDConfig& c, const Json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        if (apply_model_field(c, key, j, where + ".")) continue;
        if (key == "target_update_every") {
            c.target_update_every = get_field<long>(j, key, where + ".");
            if (c.target_update_every < 0) throw ConfigError(where + ".target_update_every: must be >= 0");
        } else {
            throw ConfigError(where + "." + key + ": unknown field");
        }
    }
}

void apply_dice(DiceConfig& c, const Json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    const std::string w = where + ".";
    for (const auto& [key, value] : j.items()) {
        if (apply_model_field(c, key, j, w)) continue;
        if (key == "u_lr") {
            c.u_lr = get_field<double>(j, key, w);
        } else if (key == "lambda") {
            c.lambda = get_field<double>(j, key, w);
        } else if (key == "start_mode") {
            apply_enum(j, key, w, [&](const std::string& v) { c.start_mode = expectation_mode_from_string(v); });
        } else if (key == "start_batch") {
            c.start_batch = get_field<int>(j, key, w);
        } else if (key == "divergence_threshold") {
            c.divergence_threshold = get_field<double>(j, key, w);
        } else {
            throw ConfigError(w + key + ": unknown field");
        }
    }
}

}  // namespace

Json to_json(const ExperimentConfig& c) {
    return {{"name", c.name},
            {"env", c.env},
            {"policy", c.policy},
            {"behavior", c.behavior},
            {"gamma", c.gamma},
            {"dataset", c.dataset},
            {"copies", c.copies},
            {"rollout_steps", c.rollout_steps},
            {"episode_len", c.episode_len},
            {"features", to_string(c.features)},
            {"combiner", to_string(c.combiner)},
            {"feature_file", c.feature_file},
            {"methods", c.methods},
            {"steps", c.steps},
            {"batch", c.batch},
            {"eval_every", c.eval_every},
            {"seeds", c.seeds},
            {"smoothing", c.smoothing},
            {"seed", c.seed},
            {"sr", td_to_json(c.sr)},
            {"deep_td", td_to_json(c.deep_td)},
            {"dualdice", dice_to_json(c.dualdice)},
            {"gradientdice", dice_to_json(c.gradientdice)}};
}

ExperimentConfig experiment_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    ExperimentConfig c;
    if (j.contains("preset")) {
        c = preset(get_field<std::string>(j, "preset", "config."),
                   j.contains("seed") ? get_field<std::uint64_t>(j, "seed", "config.") : 0);
    }
    const std::string w = "config.";
    for (const auto& [key, value] : j.items()) {
        if (key == "preset") continue;
        if (key == "name") c.name = get_field<std::string>(j, key, w);
        else if (key == "env") c.env = get_field<std::string>(j, key, w);
        else if (key == "policy") c.policy = get_field<std::string>(j, key, w);
        else if (key == "behavior") c.behavior = get_field<std::string>(j, key, w);
        else if (key == "gamma") c.gamma = get_field<double>(j, key, w);
        else if (key == "dataset") c.dataset = get_field<std::string>(j, key, w);
        else if (key == "copies") c.copies = get_field<int>(j, key, w);
        else if (key == "rollout_steps") c.rollout_steps = get_field<int>(j, key, w);
        else if (key == "episode_len") c.episode_len = get_field<int>(j, key, w);
        else if (key == "features")
            apply_enum(j, key, w, [&](const std::string& v) { c.features = feature_kind_from_string(v); });
        else if (key == "combiner")
            apply_enum(j, key, w, [&](const std::string& v) { c.combiner = action_combiner_from_string(v); });
        else if (key == "feature_file") c.feature_file = get_field<std::string>(j, key, w);
        else if (key == "methods") c.methods = get_field<std::vector<std::string>>(j, key, w);
        else if (key == "steps") c.steps = get_field<long>(j, key, w);
        else if (key == "batch") c.batch = get_field<int>(j, key, w);
        else if (key == "eval_every") c.eval_every = get_field<long>(j, key, w);
        else if (key == "seeds") c.seeds = get_field<int>(j, key, w);
        else if (key == "smoothing") c.smoothing = get_field<int>(j, key, w);
        else if (key == "seed") c.seed = get_field<std::uint64_t>(j, key, w);
        else if (key == "sr") apply_td(c.sr, value, "config.sr");
        else if (key == "deep_td") apply_td(c.deep_td, value, "config.deep_td");
        else if (key == "dualdice") apply_dice(c.dualdice, value, "config.dualdice");
        else if (key == "gradientdice") apply_dice(c.gradientdice, value, "config.gradientdice");
        else throw ConfigError(w + key + ": unknown field");
    }
    if (!(c.gamma >= 0.0 && c.gamma < 1.0)) throw ConfigError("config.gamma: must lie in [0, 1)");
    if (c.steps < 0) throw ConfigError("config.steps: must be >= 0");
    if (c.batch < 1) throw ConfigError("config.batch: must be >= 1");
    if (c.eval_every < 1) throw ConfigError("config.eval_every: must be >= 1");
    if (c.seeds < 1) throw ConfigError("config.seeds: must be >= 1");
    if (c.smoothing < 1) throw ConfigError("config.smoothing: must be >= 1");
    if (c.copies < 1) throw ConfigError("config.copies: must be >= 1");
    if (c.methods.empty()) throw ConfigError("config.methods: must not be empty");
    for (const auto& m : c.methods) {
        if (std::find(method_names().begin(), method_names().end(), m) == method_names().end()) {
            throw ConfigError("config.methods: unknown method '" + m + "'");
        }
    }
    return c;
}

namespace {

TabularMDP load_env(const std::string& env) {
    if (env == "randomwalk5") return random_walk5();
    return mdp_from_json(read_json_file(env));
}

Policy load_policy(const std::string& spec, const TabularMDP& mdp, const std::string& field) {
    if (spec == "uniform") return Policy::uniform(mdp.n_states(), mdp.n_actions());
    Policy pi = policy_from_json(read_json_file(spec));
    if (pi.n_states() != mdp.n_states() || pi.n_actions() != mdp.n_actions()) {
        throw ConfigError("config." + field + ": policy shape does not match the MDP");
    }
    return pi;
}

FeatureMap build_features(const ExperimentConfig& c, const TabularMDP& mdp, const Dataset& dataset) {
    const int S = mdp.n_states(), A = mdp.n_actions();
    try {
        switch (c.features) {
            case FeatureKind::TabularSA:
                return FeatureMap::tabular_sa(S, A);
            case FeatureKind::TabularState:
                return FeatureMap::from_state_features(Matrix::Identity(S, S), A, c.combiner,
                                                       FeatureKind::TabularState);
            case FeatureKind::Inverted:
            case FeatureKind::Dependent:
                return FeatureMap::toy(c.features, S, A, c.combiner);
            case FeatureKind::Custom:
                if (c.feature_file.empty()) throw ConfigError("config.feature_file: required for custom features");
                return FeatureMap::load_custom(c.feature_file, A, c.combiner);
            case FeatureKind::Learned: {
                EncoderConfig enc;
                enc.seed = c.seed;
                return train_encoder(dataset, enc).features;
            }
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config.features: ") + e.what());
    }
    throw ConfigError("config.features: unsupported kind");
}

std::uint64_t method_stream(const std::string& method) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char ch : method) h = (h ^ ch) * 1099511628211ULL;
    return h;
}

}  // namespace

ExperimentSetup build_setup(const ExperimentConfig& c) {
    TabularMDP mdp = load_env(c.env);
    Policy pi = load_policy(c.policy, mdp, "policy");
    Discount gamma(c.gamma);
    Dataset dataset = [&] {
        if (c.dataset == "exhaustive") return exhaustive_dataset(mdp, c.copies, c.seed, c.env);
        if (c.dataset == "rollout") {
            if (c.rollout_steps < 1 || c.episode_len < 1) {
                throw ConfigError("config.rollout_steps/episode_len: must be >= 1");
            }
            return rollout(mdp, load_policy(c.behavior, mdp, "behavior"), c.rollout_steps, c.episode_len, c.seed,
                           c.behavior, c.env);
        }
        Dataset loaded = load_dataset(c.dataset);
        if (loaded.n_states() != mdp.n_states() || loaded.n_actions() != mdp.n_actions()) {
            throw ConfigError("config.dataset: dataset shape does not match the MDP");
        }
        return loaded;
    }();
    if (dataset.start_states().empty()) throw ConfigError("config.dataset: dataset has no start states");
    FeatureMap map = build_features(c, mdp, dataset);
    MaskedRatio oracle = exact_ratio_oracle(mdp, pi, gamma, empirical_counts(dataset).distribution());
    const double truth = exact_return(mdp, pi, gamma);
    return ExperimentSetup{std::move(mdp), std::move(pi), std::move(dataset), std::move(map), std::move(oracle), truth};
}

std::uint64_t trial_seed(std::uint64_t master, int trial, const std::string& method) {
    return Rng::derive(master + static_cast<std::uint64_t>(trial), method_stream(method)).next();
}

TrialResult run_trial(const ExperimentConfig& config, const ExperimentSetup& setup, const std::string& method,
                      int trial) {
    TrialResult result;
    result.method = method;
    result.trial = trial;
    result.seed = config.seed + static_cast<std::uint64_t>(trial);
    result.trace.window = config.smoothing;
    const std::uint64_t seed = trial_seed(config.seed, trial, method);
    const Discount gamma(config.gamma);
    const Dataset& data = setup.dataset;

    auto record_ratio = [&](long step, const RatioModel& ratio) {
        const ValueEstimate est = estimate_return_mis(ratio, data, method);
        if (step > 0) {
            result.trace.add(step, est.value, log_mse(est.value, setup.truth).value, ratio_mse(ratio, setup.oracle));
        }
        result.ratio = ratio;
        result.estimate = est;
    };
    auto record_value = [&](long step, ValueEstimate est) {
        if (step > 0) result.trace.add(step, est.value, log_mse(est.value, setup.truth).value, kNaN);
        result.estimate = std::move(est);
    };

    auto td_config = [&](TDConfig c) {
        c.steps = config.steps;
        c.batch = config.batch;
        c.gamma = config.gamma;
        c.eval_every = config.eval_every;
        c.seed = seed;
        return c;
    };
    auto dice_config = [&](DiceConfig c) {
        c.steps = config.steps;
        c.batch = config.batch;
        c.gamma = config.gamma;
        c.eval_every = config.eval_every;
        c.seed = seed;
        return c;
    };

    if (method == "srdice") {
        learn_sr_td(data, setup.map, setup.pi, td_config(config.sr), [&](long step, const PairFunction& psi) {
            record_ratio(step, RatioModel(srdice_closed_form_w(data, to_feature_sr(psi), setup.pi, gamma, setup.map)));
        });
    } else if (method == "deep_sr") {
        learn_sr_td(data, setup.map, setup.pi, td_config(config.sr), [&](long step, const PairFunction& psi) {
            record_value(step, deep_sr_baseline(data, to_feature_sr(psi), setup.map, setup.pi, gamma).estimate);
        });
    } else if (method == "deep_td") {
        deep_td(data, setup.pi, setup.map, td_config(config.deep_td), [&](long step, const PairFunction& q) {
            const Matrix table = pairs_to_table(q.evaluate_all().col(0), data.n_states(), data.n_actions());
            record_value(step, estimate_return_direct(table, setup.pi, data.start_states(), gamma, method));
        });
    } else if (method == "dualdice" || method == "gradientdice") {
        const bool dual = method == "dualdice";
        auto cb = [&](long step, const NetRatio& r) { record_ratio(step, RatioModel(r)); };
        const DiceResult res = dual ? dualdice(data, setup.pi, setup.map, dice_config(config.dualdice), cb)
                                    : gradientdice(data, setup.pi, setup.map, dice_config(config.gradientdice), cb);
        result.diverged = res.diverged;
        result.estimate.diverged = res.diverged;
        result.estimate.steps = res.steps;
    } else {
        throw ConfigError("unknown method '" + method + "'");
    }
    if (!result.diverged) result.estimate.steps = config.steps;
    return result;
}

std::vector<TrialResult> run_experiment(const ExperimentConfig& config, const ExperimentSetup& setup, int threads) {
    struct Task {
        std::string method;
        int trial;
    };
    std::vector<Task> tasks;
    for (const auto& m : config.methods) {
        for (int t = 0; t < config.seeds; ++t) tasks.push_back({m, t});
    }
    std::vector<std::optional<TrialResult>> slots(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                slots[i] = run_trial(config, setup, tasks[i].method, tasks[i].trial);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<TrialResult> results;
    results.reserve(slots.size());
    for (auto& s : slots) results.push_back(std::move(*s));
    return results;
}

std::vector<MethodSummary> summarize(const ExperimentConfig& config, const std::vector<TrialResult>& results) {
    std::vector<MethodSummary> out;
    for (const auto& method : config.methods) {
        MethodSummary s;
        s.method = method;
        std::vector<const TrialResult*> runs;
        for (const auto& r : results) {
            if (r.method == method) runs.push_back(&r);
        }
        s.trials = static_cast<int>(runs.size());
        std::size_t length = 0;
        std::vector<double> final_values, final_logs;
        for (const auto* r : runs) {
            s.diverged += r->diverged;
            length = std::max(length, r->trace.steps.size());
            if (!r->trace.steps.empty()) {
                final_values.push_back(r->trace.value_estimate.back());
                final_logs.push_back(r->trace.value_log_mse.back());
            }
        }
        s.final_value_mean = mean_of(final_values);
        s.final_value_log_mse_mean = mean_of(final_logs);
        const bool has_ratio = !runs.empty() && !runs.front()->trace.ratio_mse.empty() &&
                               !std::isnan(runs.front()->trace.ratio_mse.front());
        if (has_ratio && length > 0) {
            std::vector<double> curve(length);
            for (std::size_t i = 0; i < length; ++i) {
                std::vector<double> at;
                for (const auto* r : runs) {
                    if (i < r->trace.ratio_mse.size()) at.push_back(log_ratio_mse(r->trace.ratio_mse[i]));
                }
                curve[i] = mean_of(at);
            }
            s.smoothed_log_ratio_mse = smooth(curve, config.smoothing);
            s.final_log_ratio_mse = s.smoothed_log_ratio_mse.back();
            s.band_index = band_entry_index(s.smoothed_log_ratio_mse);
        } else {
            s.final_log_ratio_mse = kNaN;
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_trace_csv(const TrialResult& result, std::ostream& out) {
    out << "method,seed,step,value_estimate,value_log_mse,ratio_mse\n";
    const auto& t = result.trace;
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        out << result.method << ',' << result.seed << ',' << t.steps[i] << ',' << format_double(t.value_estimate[i])
            << ',' << format_double(t.value_log_mse[i]) << ',' << format_double(t.ratio_mse[i]) << '\n';
    }
}

Json summary_json(const ExperimentConfig& config, const std::vector<MethodSummary>& summaries,
                  const std::vector<TrialResult>& results) {
    Json methods = Json::array();
    for (const auto& s : summaries) {
        Json m = {{"method", s.method},
                  {"trials", s.trials},
                  {"diverged", s.diverged},
                  {"final_value_mean", s.final_value_mean},
                  {"final_value_log_mse_mean", s.final_value_log_mse_mean}};
        if (!s.smoothed_log_ratio_mse.empty()) {
            m["final_log_ratio_mse"] = s.final_log_ratio_mse;
            m["band_index"] = s.band_index;
            m["band_step"] = static_cast<long>(s.band_index + 1) * config.eval_every;
        }
        methods.push_back(std::move(m));
    }
    Json runs = Json::array();
    for (const auto& r : results) {
        runs.push_back({{"method", r.method},
                        {"seed", r.seed},
                        {"diverged", r.diverged},
                        {"steps", r.estimate.steps},
                        {"final_value", r.estimate.value},
                        {"final_ratio_mse", r.trace.ratio_mse.empty() ? kNaN : r.trace.ratio_mse.back()}});
    }
    return {{"experiment", config.name}, {"methods", std::move(methods)}, {"runs", std::move(runs)}};
}

}  // namespace srdice
