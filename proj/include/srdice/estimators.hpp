#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "srdice/batch.hpp"
#include "srdice/dataset.hpp"
#include "srdice/features.hpp"
#include "srdice/mdp.hpp"
#include "srdice/optim.hpp"
#include "srdice/pair_function.hpp"

namespace srdice {

struct TabularRatio {
    MaskedRatio ratio;
};

struct LinearRatio {
    Vector w;
    FeatureMap map;
};

/// Scalar network (or table) over pairs.
struct NetRatio {
    PairFunction w;
    int n_states;
    int n_actions;
};

/// Estimated density ratio d^pi / d^D in one of three representations.
class RatioModel {
public:
    using Variant = std::variant<TabularRatio, LinearRatio, NetRatio>;

    RatioModel(Variant model) : model_(std::move(model)) {}

    /// S x A ratio values; masked entries read as 0.
    Matrix table() const;
    BoolMatrix valid() const;
    std::string kind() const;
    const Variant& model() const { return model_; }

private:
    Variant model_;
};

struct ValueEstimate {
    double value = 0.0;
    std::string method;
    /// Mean ratio over the dataset, E_{d^D}[w]. 1 for direct estimators.
    double mean_ratio = 1.0;
    long steps = 0;
    /// Transitions whose ratio entry was masked.
    long masked = 0;
    bool diverged = false;
};

// ---------------------------------------------------------------- SR-DICE

/// Tabular closed form
///   r*(s, a) = (1 - gamma) |D| / count(s, a) * mean_{s0 in D0} pi(a|s) sr(s0, s),
/// masked where count(s, a) = 0. `sr_hat` may be any approximation.
TabularRatio srdice_tabular_ratios(const Dataset& dataset, const TabularSR& sr_hat, const Policy& pi, Discount gamma);

/// w* = (1 - gamma) |D| / |D0| (Phi^T Phi)^+ Psi^T 1.
LinearRatio srdice_closed_form_w(const Dataset& dataset, const FeatureSR& sr, const Policy& pi, Discount gamma,
                                 const FeatureMap& map);

struct IterativeWConfig {
    long steps = 50000;
    int batch = 128;
    OptimizerConfig optimizer{OptimizerKind::Sgd, 0.05};
    /// Exact: full-dataset Gram term and exact pi-weighted start term, i.e.
    /// deterministic gradient descent (batch is ignored). Sampled: minibatches
    /// of transitions and start states with a0 drawn from pi.
    ExpectationMode mode = ExpectationMode::Exact;
    std::uint64_t seed = 0;
};

LinearRatio srdice_iterative_w(const Dataset& dataset, const FeatureSR& sr, const Policy& pi, Discount gamma,
                               const FeatureMap& map, const IterativeWConfig& config);

// ----------------------------------------------------------- TD learners

/// Shared by SR TD and Deep TD. target_update_every = 0 never refreshes the
/// target after initialization.
struct TDConfig {
    long steps = 50000;
    int batch = 128;
    OptimizerConfig optimizer{OptimizerKind::Sgd, 0.05};
    long target_update_every = 1;
    double gamma = 0.99;
    std::uint64_t seed = 0;
    ExpectationMode next_mode = ExpectationMode::Sampled;
    ModelKind model = ModelKind::Mlp;
    std::vector<int> hidden{32, 32};
    Activation hidden_act = Activation::Tanh;
    /// Callback cadence; 0 disables progress callbacks.
    long eval_every = 0;
};
using SRLearnConfig = TDConfig;

/// Called at step 0 and after every eval_every steps.
using ProgressCallback = std::function<void(long step, const PairFunction& model)>;

/// Learns psi(s, a) in R^F by TD against a target network. Table models
/// hold one row per pair; linear and mlp models read phi(s, a).
PairFunction learn_sr_td(const Dataset& dataset, const FeatureMap& map, const Policy& pi, const SRLearnConfig& config,
                         const ProgressCallback& progress = {});

FeatureSR to_feature_sr(const PairFunction& psi);

enum class RegressionMode { LeastSquares, Sgd };

std::string to_string(RegressionMode mode);
RegressionMode regression_mode_from_string(const std::string& name);

struct DeepSRConfig {
    RegressionMode mode = RegressionMode::LeastSquares;
    long steps = 50000;
    int batch = 128;
    OptimizerConfig optimizer{OptimizerKind::Sgd, 0.05};
    std::uint64_t seed = 0;
};

struct DeepSRResult {
    Vector w_sr;
    ValueEstimate estimate;
};

/// Regresses r on phi and reads the value off the SR:
///   (1 - gamma) mean_{s0} sum_{a0} pi(a0|s0) w_sr . psi(s0, a0).
DeepSRResult deep_sr_baseline(const Dataset& dataset, const FeatureSR& sr, const FeatureMap& map, const Policy& pi,
                              Discount gamma, const DeepSRConfig& config = {});

struct DeepTDResult {
    PairFunction q;
    ValueEstimate estimate;
};

/// Fitted Q evaluation with a target network; the value is read at D0.
DeepTDResult deep_td(const Dataset& dataset, const Policy& pi, const FeatureMap& map, const TDConfig& config,
                     const ProgressCallback& progress = {});

// ------------------------------------------------------------ DICE family

struct DiceConfig {
    long steps = 50000;
    int batch = 128;
    /// Start-state minibatch size; 0 uses `batch`.
    int start_batch = 0;
    OptimizerConfig optimizer{OptimizerKind::Sgd, 0.05};
    /// GradientDICE normalization multiplier and its learning rate.
    double lambda = 1.0;
    double u_lr = 1e-2;
    double gamma = 0.99;
    std::uint64_t seed = 0;
    ExpectationMode next_mode = ExpectationMode::Sampled;
    ExpectationMode start_mode = ExpectationMode::Sampled;
    ModelKind model = ModelKind::Mlp;
    std::vector<int> hidden{32, 32};
    Activation hidden_act = Activation::Tanh;
    long eval_every = 0;
    double divergence_threshold = 1e8;
};

struct DiceResult {
    NetRatio ratio;
    /// f (and u for GradientDICE) at the end of training.
    PairFunction f;
    double u = 0.0;
    long steps = 0;
    bool diverged = false;
};

using RatioCallback = std::function<void(long step, const NetRatio& ratio)>;

/// Alternating steps on one minibatch: descent for f, then ascent for w at
/// the updated f.
DiceResult dualdice(const Dataset& dataset, const Policy& pi, const FeatureMap& map, const DiceConfig& config,
                    const RatioCallback& progress = {});

/// Alternating steps: descent for w, then ascent for f and u at the updated w.
DiceResult gradientdice(const Dataset& dataset, const Policy& pi, const FeatureMap& map, const DiceConfig& config,
                        const RatioCallback& progress = {});

// ------------------------------------------------------------- estimates

/// mean_D ratio(s, a) * r.
ValueEstimate estimate_return_mis(const RatioModel& ratio, const Dataset& dataset, const std::string& method = "mis");

/// (1 - gamma) mean_{s0} sum_a pi(a|s0) Q(s0, a) for an S x A table Q.
ValueEstimate estimate_return_direct(const Matrix& q, const Policy& pi, const std::vector<int>& start_states,
                                     Discount gamma, const std::string& method = "direct");

/// Direct estimate with Q = psi . w.
ValueEstimate estimate_return_direct(const FeatureSR& sr, const Vector& w, const Policy& pi,
                                     const std::vector<int>& start_states, Discount gamma,
                                     const std::string& method = "direct");

/// Tabular SR estimate (1 - gamma) mean_{s0} sum_s sr(s0, s) sum_a pi(a|s) rbar(s, a),
/// where rbar is the dataset mean reward of (s, a) and 0 for unseen pairs.
ValueEstimate estimate_return_tabular_sr(const TabularSR& sr, const Dataset& dataset, const Policy& pi,
                                         Discount gamma);

/// S x A view of a scalar pair table indexed by sa_index.
Matrix pairs_to_table(const Vector& values, int n_states, int n_actions);

}  // namespace srdice
