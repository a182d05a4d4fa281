#include "srdice/dataset.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "srdice/errors.hpp"

namespace srdice {

using nlohmann::json;

namespace {

std::vector<double> row_weights(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    return {row.data(), row.data() + row.size()};
}

}  // namespace

Dataset::Dataset(int n_states, int n_actions, std::vector<Transition> transitions,
                 std::vector<int> start_states, DatasetMeta meta)
    : n_states_(n_states),
      n_actions_(n_actions),
      transitions_(std::move(transitions)),
      start_states_(std::move(start_states)),
      meta_(std::move(meta)) {
    if (n_states <= 0 || n_actions <= 0) throw std::invalid_argument("dataset needs positive sizes");
    if (transitions_.empty()) throw std::invalid_argument("dataset has no transitions");
    for (const auto& t : transitions_) {
        if (t.s < 0 || t.s >= n_states || t.s_next < 0 || t.s_next >= n_states || t.a < 0 ||
            t.a >= n_actions) {
            throw std::invalid_argument("transition index out of bounds");
        }
    }
    for (int s0 : start_states_) {
        if (s0 < 0 || s0 >= n_states) throw std::invalid_argument("start state out of bounds");
    }
}

Dataset Dataset::with_rewards(const Matrix& reward) const {
    if (reward.rows() != n_states_ || reward.cols() != n_actions_) {
        throw std::invalid_argument("reward table shape does not match dataset");
    }
    std::vector<Transition> out = transitions_;
    for (auto& t : out) t.r = reward(t.s, t.a);
    return Dataset(n_states_, n_actions_, std::move(out), start_states_, meta_);
}

void Dataset::require_start_states() const {
    if (start_states_.empty()) throw std::invalid_argument("dataset has no start states");
}

double Dataset::mean_reward() const {
    double total = 0.0;
    for (const auto& t : transitions_) total += t.r;
    return total / static_cast<double>(transitions_.size());
}

Matrix EmpiricalCounts::distribution() const {
    return counts.cast<double>() / static_cast<double>(total);
}

Dataset rollout(const TabularMDP& mdp, const Policy& behavior, int n_steps, int episode_len,
                std::uint64_t seed, const std::string& behavior_name, const std::string& env_name) {
    validate_compatible(mdp, behavior);
    if (n_steps < 1) throw std::invalid_argument("rollout: n_steps must be >= 1");
    if (episode_len < 1) throw std::invalid_argument("rollout: episode_len must be >= 1");
    if (mdp.horizon()) episode_len = std::min(episode_len, *mdp.horizon());

    Rng rng(seed);
    const int A = mdp.n_actions();
    const auto& d0 = mdp.initial_dist();
    std::vector<Transition> transitions;
    std::vector<int> starts;
    transitions.reserve(static_cast<std::size_t>(n_steps));

    int s = 0;
    int t_in_episode = episode_len;
    while (static_cast<int>(transitions.size()) < n_steps) {
        if (t_in_episode == episode_len) {
            s = static_cast<int>(rng.categorical({d0.data(), static_cast<std::size_t>(d0.size())}));
            starts.push_back(s);
            t_in_episode = 0;
        }
        const int a = static_cast<int>(rng.categorical(row_weights(behavior.probs().row(s))));
        const int s_next =
            static_cast<int>(rng.categorical(row_weights(mdp.transition().row(sa_index(s, a, A)))));
        transitions.push_back({s, a, mdp.reward()(s, a), s_next});
        s = s_next;
        ++t_in_episode;
    }
    DatasetMeta meta{seed, behavior_name, env_name, 0.0};
    return Dataset(mdp.n_states(), A, std::move(transitions), std::move(starts), std::move(meta));
}

Dataset exhaustive_dataset(const TabularMDP& mdp, int copies, std::uint64_t seed,
                           const std::string& env_name) {
    if (copies < 1) throw std::invalid_argument("exhaustive_dataset: copies must be >= 1");
    Rng rng(seed);
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    std::vector<Transition> transitions;
    transitions.reserve(static_cast<std::size_t>(copies * S * A));
    for (int c = 0; c < copies; ++c) {
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const int s_next = static_cast<int>(
                    rng.categorical(row_weights(mdp.transition().row(sa_index(s, a, A)))));
                transitions.push_back({s, a, mdp.reward()(s, a), s_next});
            }
        }
    }
    std::vector<int> starts;
    for (int s = 0; s < S; ++s) {
        if (mdp.initial_dist()(s) > 0.0) starts.push_back(s);
    }
    DatasetMeta meta{seed, "exhaustive", env_name, 0.0};
    return Dataset(S, A, std::move(transitions), std::move(starts), std::move(meta));
}

EmpiricalCounts empirical_counts(const Dataset& dataset) {
    EmpiricalCounts out{Eigen::MatrixXi::Zero(dataset.n_states(), dataset.n_actions()), 0};
    for (const auto& t : dataset.transitions()) ++out.counts(t.s, t.a);
    out.total = static_cast<long>(dataset.size());
    return out;
}

Dataset concat(const Dataset& first, const Dataset& second) {
    if (first.n_states() != second.n_states() || first.n_actions() != second.n_actions()) {
        throw std::invalid_argument("concat: datasets over different spaces");
    }
    auto transitions = first.transitions();
    transitions.insert(transitions.end(), second.transitions().begin(), second.transitions().end());
    auto starts = first.start_states();
    starts.insert(starts.end(), second.start_states().begin(), second.start_states().end());
    return Dataset(first.n_states(), first.n_actions(), std::move(transitions), std::move(starts),
                   first.meta());
}

void write_jsonl(const Dataset& dataset, std::ostream& out) {
    const auto& m = dataset.meta();
    json header = {{"kind", "dataset"},       {"seed", m.seed},
                   {"env", m.env},            {"behavior", m.behavior},
                   {"gamma", m.gamma},        {"n_states", dataset.n_states()},
                   {"n_actions", dataset.n_actions()}};
    out << header.dump() << '\n';
    for (const auto& t : dataset.transitions()) {
        out << json{{"s", t.s}, {"a", t.a}, {"r", t.r}, {"s_next", t.s_next}}.dump() << '\n';
    }
    out << json{{"start_states", dataset.start_states()}}.dump() << '\n';
}

Dataset read_jsonl(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("dataset file is empty");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("dataset header: ") + e.what());
    }
    if (!header.is_object() || header.value("kind", "") != "dataset") {
        throw ConfigError("dataset header: kind != dataset");
    }
    DatasetMeta meta;
    int S = 0, A = 0;
    try {
        meta = {header.value("seed", std::uint64_t{0}), header.value("behavior", ""), header.value("env", ""),
                header.value("gamma", 0.0)};
        S = header.at("n_states").get<int>();
        A = header.at("n_actions").get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("dataset header: ") + e.what());
    }

    std::vector<Transition> transitions;
    std::vector<int> starts;
    bool saw_starts = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (saw_starts) throw ConfigError("dataset: content after start_states line");
        try {
            const json j = json::parse(line);
            if (j.contains("start_states")) {
                starts = j.at("start_states").get<std::vector<int>>();
                saw_starts = true;
            } else {
                transitions.push_back({j.at("s").get<int>(), j.at("a").get<int>(),
                                       j.at("r").get<double>(), j.at("s_next").get<int>()});
            }
        } catch (const json::exception& e) {
            throw ConfigError(std::string("dataset line: ") + e.what());
        }
    }
    if (!saw_starts) throw ConfigError("dataset: missing start_states line");
    try {
        return Dataset(S, A, std::move(transitions), std::move(starts), std::move(meta));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("dataset: ") + e.what());
    }
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_jsonl(dataset, out);
    if (!out) throw IoError("failed writing " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return read_jsonl(in);
}

}  // namespace srdice
