#include "srdice/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace srdice {

LogMse log_mse(double estimate, double truth) {
    const double err = 0.5 * (estimate - truth) * (estimate - truth);
    if (!(err > 1e-30)) {
        if (std::isnan(err)) return {err, false};
        return {kLogMseFloor, true};
    }
    return {std::log(err), false};
}

double ratio_mse(const Matrix& ratio, const MaskedRatio& oracle) {
    if (ratio.rows() != oracle.values.rows() || ratio.cols() != oracle.values.cols()) {
        throw std::invalid_argument("ratio_mse: shape mismatch");
    }
    double sum = 0.0;
    long n = 0;
    for (Eigen::Index s = 0; s < ratio.rows(); ++s) {
        for (Eigen::Index a = 0; a < ratio.cols(); ++a) {
            if (!oracle.valid(s, a)) continue;
            const double d = ratio(s, a) - oracle.values(s, a);
            sum += d * d;
            ++n;
        }
    }
    if (n == 0) throw std::invalid_argument("ratio_mse: oracle is masked everywhere");
    return sum / static_cast<double>(n);
}

double ratio_mse(const RatioModel& ratio, const MaskedRatio& oracle) {
    Matrix values = ratio.table();
    const BoolMatrix valid = ratio.valid();
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (!valid(i)) values(i) = 0.0;
    }
    return ratio_mse(values, oracle);
}

double log_ratio_mse(double mse) {
    if (std::isnan(mse)) return mse;
    return mse > 1e-30 ? std::log(mse) : kLogMseFloor;
}

std::vector<double> smooth(const std::vector<double>& values, int window) {
    if (window < 1) throw std::invalid_argument("smooth: window must be >= 1");
    std::vector<double> out(values.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sum += values[i];
        if (i >= static_cast<std::size_t>(window)) sum -= values[i - static_cast<std::size_t>(window)];
        out[i] = sum / static_cast<double>(std::min<std::size_t>(i + 1, static_cast<std::size_t>(window)));
    }
    return out;
}

std::size_t band_entry_index(const std::vector<double>& curve, double tolerance) {
    if (curve.empty()) throw std::invalid_argument("band_entry_index: empty curve");
    const double final_value = curve.back();
    const double half_width = tolerance * std::abs(final_value);
    std::size_t index = curve.size() - 1;
    while (index > 0 && std::abs(curve[index - 1] - final_value) <= half_width) --index;
    return index;
}

MonteCarloEstimate monte_carlo_return(const TabularMDP& mdp, const Policy& pi, Discount gamma, long episodes,
                                      std::uint64_t seed) {
    validate_compatible(mdp, pi);
    if (episodes < 2) throw std::invalid_argument("monte_carlo_return: need at least 2 episodes");
    Rng rng(seed);
    const int S = mdp.n_states(), A = mdp.n_actions();
    std::vector<double> d0(mdp.initial_dist().data(), mdp.initial_dist().data() + S);
    std::vector<std::vector<double>> policy_rows(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) {
        const auto row = pi.probs().row(s);
        policy_rows[static_cast<std::size_t>(s)].assign(row.data(), row.data() + 0);
        for (int a = 0; a < A; ++a) policy_rows[static_cast<std::size_t>(s)].push_back(row(a));
    }
    std::vector<std::vector<double>> next_rows(static_cast<std::size_t>(S * A));
    for (int p = 0; p < S * A; ++p) {
        for (int s2 = 0; s2 < S; ++s2) next_rows[static_cast<std::size_t>(p)].push_back(mdp.transition()(p, s2));
    }
    double sum = 0.0, sum_sq = 0.0;
    for (long e = 0; e < episodes; ++e) {
        int s = static_cast<int>(rng.categorical(d0));
        int a = static_cast<int>(rng.categorical(policy_rows[static_cast<std::size_t>(s)]));
        while (rng.uniform() < gamma.value()) {
            s = static_cast<int>(rng.categorical(next_rows[static_cast<std::size_t>(sa_index(s, a, A))]));
            a = static_cast<int>(rng.categorical(policy_rows[static_cast<std::size_t>(s)]));
        }
        const double r = mdp.reward()(s, a);
        sum += r;
        sum_sq += r * r;
    }
    const double n = static_cast<double>(episodes);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    return {mean, std::sqrt(var / n)};
}

}  // namespace srdice
