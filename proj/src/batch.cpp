#include "srdice/batch.hpp"

#include <stdexcept>

namespace srdice {

std::string to_string(ExpectationMode mode) { return mode == ExpectationMode::Sampled ? "sampled" : "exact"; }

ExpectationMode expectation_mode_from_string(const std::string& name) {
    if (name == "sampled") return ExpectationMode::Sampled;
    if (name == "exact") return ExpectationMode::Exact;
    throw std::invalid_argument("unknown expectation mode: " + name);
}

MinibatchSampler::MinibatchSampler(const Dataset& dataset, const Policy& pi) : dataset_(dataset), pi_(pi) {
    if (pi.n_states() != dataset.n_states() || pi.n_actions() != dataset.n_actions()) {
        throw std::invalid_argument("policy shape does not match dataset");
    }
}

void MinibatchSampler::add_next(Minibatch& mb, int s_next, ExpectationMode mode, Rng& rng) const {
    const int A = pi_.n_actions();
    if (mode == ExpectationMode::Sampled) {
        const auto row = pi_.probs().row(s_next);
        std::vector<double> w(static_cast<std::size_t>(A));
        for (int a = 0; a < A; ++a) w[static_cast<std::size_t>(a)] = row(a);
        mb.next_pairs.push_back(static_cast<int>(sa_index(s_next, static_cast<int>(rng.categorical(w)), A)));
        mb.next_weights.push_back(1.0);
    } else {
        for (int a = 0; a < A; ++a) {
            mb.next_pairs.push_back(static_cast<int>(sa_index(s_next, a, A)));
            mb.next_weights.push_back(pi_(s_next, a));
        }
    }
}

void MinibatchSampler::add_start(Minibatch& mb, int s0, double weight, ExpectationMode mode, Rng& rng) const {
    const int A = pi_.n_actions();
    if (mode == ExpectationMode::Sampled) {
        std::vector<double> w(static_cast<std::size_t>(A));
        for (int a = 0; a < A; ++a) w[static_cast<std::size_t>(a)] = pi_(s0, a);
        mb.start_pairs.push_back(static_cast<int>(sa_index(s0, static_cast<int>(rng.categorical(w)), A)));
        mb.start_weights.push_back(weight);
    } else {
        for (int a = 0; a < A; ++a) {
            mb.start_pairs.push_back(static_cast<int>(sa_index(s0, a, A)));
            mb.start_weights.push_back(weight * pi_(s0, a));
        }
    }
}

Minibatch MinibatchSampler::sample(int batch, int start_batch, ExpectationMode next_mode,
                                   ExpectationMode start_mode, Rng& rng) const {
    if (batch < 1) throw std::invalid_argument("minibatch size must be >= 1");
    const auto& data = dataset_.transitions();
    const int A = dataset_.n_actions();
    Minibatch mb;
    mb.next_block = next_mode == ExpectationMode::Sampled ? 1 : A;
    mb.pairs.reserve(static_cast<std::size_t>(batch));
    for (int i = 0; i < batch; ++i) {
        const auto& t = data[rng.index(data.size())];
        mb.pairs.push_back(static_cast<int>(sa_index(t.s, t.a, A)));
        mb.rewards.push_back(t.r);
        add_next(mb, t.s_next, next_mode, rng);
    }
    if (start_batch > 0) {
        dataset_.require_start_states();
        const auto& starts = dataset_.start_states();
        const double w = 1.0 / start_batch;
        for (int i = 0; i < start_batch; ++i) add_start(mb, starts[rng.index(starts.size())], w, start_mode, rng);
    }
    return mb;
}

Minibatch MinibatchSampler::full(ExpectationMode next_mode, ExpectationMode start_mode, Rng& rng) const {
    const int A = dataset_.n_actions();
    Minibatch mb;
    mb.next_block = next_mode == ExpectationMode::Sampled ? 1 : A;
    for (const auto& t : dataset_.transitions()) {
        mb.pairs.push_back(static_cast<int>(sa_index(t.s, t.a, A)));
        mb.rewards.push_back(t.r);
        add_next(mb, t.s_next, next_mode, rng);
    }
    const auto& starts = dataset_.start_states();
    if (!starts.empty()) {
        const double w = 1.0 / static_cast<double>(starts.size());
        for (int s0 : starts) add_start(mb, s0, w, start_mode, rng);
    }
    return mb;
}

}  // namespace srdice
