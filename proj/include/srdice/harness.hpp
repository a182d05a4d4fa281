#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "srdice/estimators.hpp"
#include "srdice/features.hpp"
#include "srdice/metrics.hpp"
#include "srdice/serialize.hpp"

namespace srdice {

// ------------------------------------------------------- random rewards

struct RandomRewardConfig {
    int count = 1000;
    std::vector<int> hidden{256, 256};
    /// Sigmoid output is multiplied by this; rewards lie in [0, scale].
    double scale = 10.0;
    /// Keep a reward when truth / scale lies in [keep_low, keep_high].
    double keep_low = 0.1;
    double keep_high = 0.9;
};

struct RewardCase {
    Matrix reward;  // S x A
    double truth = 0.0;
    bool kept = false;
    std::uint64_t seed = 0;
};

struct RandomRewardSuite {
    std::vector<RewardCase> cases;
    RandomRewardConfig config;

    std::size_t kept() const;
};

/// Scores an arbitrary reward table against the keep band.
RewardCase make_reward_case(const TabularMDP& mdp, const Policy& pi, Discount gamma, Matrix reward,
                            const RandomRewardConfig& config);

/// Each reward is a fresh relu network with N(0, 1) weights and zero biases
/// evaluated on one-hot(s, a); the ground truth is exact.
RandomRewardSuite random_reward_suite(const TabularMDP& mdp, const Policy& pi, Discount gamma,
                                      const RandomRewardConfig& config, std::uint64_t seed);

struct NamedRatio {
    std::string method;
    RatioModel ratio;
};

struct SuiteMethodSummary {
    std::string method;
    double mean_log_mse = 0.0;
    double std_log_mse = 0.0;
    double win_percentage = 0.0;
};

struct SuiteReport {
    std::vector<SuiteMethodSummary> methods;
    std::size_t kept = 0;
    /// log_mse[m][k] for method m on the k-th kept reward.
    std::vector<std::vector<double>> log_mse;
    /// Per kept reward: raw truth and truth / dataset mean reward.
    std::vector<double> raw_truth;
    std::vector<double> normalized_truth;
};

/// MIS estimate per method and kept reward, both estimate and truth divided
/// by the dataset mean reward. The lowest log MSE wins; ties split equally.
SuiteReport evaluate_suite(const RandomRewardSuite& suite, const std::vector<NamedRatio>& methods,
                           const Dataset& dataset);

/// Pools several reports over the same methods (e.g. one per seed).
SuiteReport merge_reports(const std::vector<SuiteReport>& reports);

// ---------------------------------------------------------- experiments

struct MetricTrace {
    std::vector<long> steps;
    std::vector<double> value_estimate;
    std::vector<double> value_log_mse;
    /// NaN for methods without a ratio model.
    std::vector<double> ratio_mse;
    int window = 10;

    void add(long step, double value, double value_log, double ratio);
};

struct ExperimentConfig {
    std::string name = "custom";
    /// "randomwalk5" or a path to an MDP JSON file.
    std::string env = "randomwalk5";
    /// "uniform" or a path to a policy JSON file.
    std::string policy = "uniform";
    std::string behavior = "uniform";
    double gamma = 0.99;
    /// "exhaustive", "rollout" or a path to a JSONL dataset.
    std::string dataset = "exhaustive";
    int copies = 1;
    int rollout_steps = 1000;
    int episode_len = 100;
    FeatureKind features = FeatureKind::TabularState;
    ActionCombiner combiner = ActionCombiner::KroneckerOneHot;
    /// Feature file for FeatureKind::Custom.
    std::string feature_file;
    std::vector<std::string> methods{"srdice", "dualdice", "gradientdice"};
    long steps = 50000;
    int batch = 128;
    long eval_every = 100;
    int seeds = 10;
    int smoothing = 10;
    std::uint64_t seed = 0;
    TDConfig sr;
    TDConfig deep_td;
    DiceConfig dualdice;
    DiceConfig gradientdice;
};

/// toy_tabular, toy_inverted, toy_dependent. Throws ConfigError otherwise.
ExperimentConfig preset(const std::string& name, std::uint64_t seed = 0);
const std::vector<std::string>& preset_names();
const std::vector<std::string>& method_names();

Json to_json(const ExperimentConfig& config);
/// Starts from the named preset when "preset" is present, then applies
/// every recognized field. Unknown fields are a ConfigError.
ExperimentConfig experiment_from_json(const Json& j);

/// Everything a trial needs, built once per experiment.
struct ExperimentSetup {
    TabularMDP mdp;
    Policy pi;
    Dataset dataset;
    FeatureMap map;
    MaskedRatio oracle;
    double truth;
};

ExperimentSetup build_setup(const ExperimentConfig& config);

struct TrialResult {
    std::string method;
    int trial = 0;
    std::uint64_t seed = 0;
    MetricTrace trace;
    bool diverged = false;
    /// Final ratio table (S x A) when the method produces one.
    std::optional<RatioModel> ratio;
    ValueEstimate estimate;
};

/// Seed of (master, trial, method) stream.
std::uint64_t trial_seed(std::uint64_t master, int trial, const std::string& method);

TrialResult run_trial(const ExperimentConfig& config, const ExperimentSetup& setup, const std::string& method,
                      int trial);

/// Runs every (method, trial) pair on a pool of `threads` workers; results
/// are ordered method-major, trial-minor regardless of scheduling.
std::vector<TrialResult> run_experiment(const ExperimentConfig& config, const ExperimentSetup& setup,
                                        int threads = 1);

struct MethodSummary {
    std::string method;
    int trials = 0;
    int diverged = 0;
    /// Mean over trials of ln(ratio MSE), smoothed; empty without ratios.
    std::vector<double> smoothed_log_ratio_mse;
    double final_log_ratio_mse = 0.0;
    std::size_t band_index = 0;
    double final_value_mean = 0.0;
    double final_value_log_mse_mean = 0.0;
};

std::vector<MethodSummary> summarize(const ExperimentConfig& config, const std::vector<TrialResult>& results);

/// CSV header: method,seed,step,value_estimate,value_log_mse,ratio_mse
void write_trace_csv(const TrialResult& result, std::ostream& out);
Json summary_json(const ExperimentConfig& config, const std::vector<MethodSummary>& summaries,
                  const std::vector<TrialResult>& results);

/// Shortest round-trip representation ("%.17g"); nan/inf spelled out.
std::string format_double(double x);

}  // namespace srdice
