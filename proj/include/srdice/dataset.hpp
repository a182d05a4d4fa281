#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "srdice/mdp.hpp"

namespace srdice {

struct Transition {
    int s = 0;
    int a = 0;
    double r = 0.0;
    int s_next = 0;
};

struct DatasetMeta {
    std::uint64_t seed = 0;
    std::string behavior;
    std::string env;
    double gamma = 0.0;
};

/// Bag of transitions plus the recorded episode start states. Immutable.
class Dataset {
public:
    Dataset(int n_states, int n_actions, std::vector<Transition> transitions,
            std::vector<int> start_states, DatasetMeta meta = {});

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    const std::vector<Transition>& transitions() const { return transitions_; }
    const std::vector<int>& start_states() const { return start_states_; }
    const DatasetMeta& meta() const { return meta_; }
    std::size_t size() const { return transitions_.size(); }

    /// Copy with every r replaced by reward(s, a).
    Dataset with_rewards(const Matrix& reward) const;

    /// Throws std::invalid_argument if there are no start states.
    void require_start_states() const;

    double mean_reward() const;

private:
    int n_states_;
    int n_actions_;
    std::vector<Transition> transitions_;
    std::vector<int> start_states_;
    DatasetMeta meta_;
};

struct EmpiricalCounts {
    Eigen::MatrixXi counts;
    long total = 0;

    /// counts / total, the empirical d^D.
    Matrix distribution() const;
};

/// Episodes of `episode_len` steps from d0 until `n_steps` transitions are
/// collected. The MDP horizon, when set, caps the episode length.
Dataset rollout(const TabularMDP& mdp, const Policy& behavior, int n_steps, int episode_len,
                std::uint64_t seed, const std::string& behavior_name = "custom",
                const std::string& env_name = "custom");

/// `copies` transitions per (s, a), successors drawn from p(.|s,a); start
/// states are the support of d0.
Dataset exhaustive_dataset(const TabularMDP& mdp, int copies, std::uint64_t seed = 0,
                           const std::string& env_name = "custom");

EmpiricalCounts empirical_counts(const Dataset& dataset);

Dataset concat(const Dataset& first, const Dataset& second);

/// JSON-lines: header line, one line per transition, then the start states.
void write_jsonl(const Dataset& dataset, std::ostream& out);
Dataset read_jsonl(std::istream& in);

void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace srdice
