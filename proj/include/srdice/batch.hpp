#pragma once

#include <string>
#include <vector>

#include "srdice/dataset.hpp"
#include "srdice/mdp.hpp"

namespace srdice {

/// How an expectation over a policy action (a' or a0) is formed: one draw
/// from pi, or the exact pi-weighted sum over all actions.
enum class ExpectationMode { Sampled, Exact };

std::string to_string(ExpectationMode mode);
ExpectationMode expectation_mode_from_string(const std::string& name);

/// Minibatch of transitions with their bootstrap and start-state terms.
///
/// For transition i, entries [i*next_block, (i+1)*next_block) of next_pairs
/// and next_weights give E_{a'~pi}[f(s'_i, a')] = sum_k weight_k f(pair_k).
/// start_pairs/start_weights give E_{s0, a0~pi}[f(s0, a0)]; weights sum to 1.
struct Minibatch {
    std::vector<int> pairs;
    std::vector<double> rewards;
    std::vector<int> next_pairs;
    std::vector<double> next_weights;
    int next_block = 1;
    std::vector<int> start_pairs;
    std::vector<double> start_weights;

    std::size_t size() const { return pairs.size(); }
};

/// Samples minibatches uniformly with replacement. Start states are drawn
/// independently of transitions.
class MinibatchSampler {
public:
    MinibatchSampler(const Dataset& dataset, const Policy& pi);

    /// `start_batch` = 0 skips the start-state term.
    Minibatch sample(int batch, int start_batch, ExpectationMode next_mode, ExpectationMode start_mode,
                     Rng& rng) const;

    /// Every transition once and every recorded start state once.
    Minibatch full(ExpectationMode next_mode, ExpectationMode start_mode, Rng& rng) const;

    const Dataset& dataset() const { return dataset_; }

private:
    void add_next(Minibatch& mb, int s_next, ExpectationMode mode, Rng& rng) const;
    void add_start(Minibatch& mb, int s0, double weight, ExpectationMode mode, Rng& rng) const;

    const Dataset& dataset_;
    const Policy& pi_;
};

}  // namespace srdice
