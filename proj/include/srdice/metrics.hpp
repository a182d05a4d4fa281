#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "srdice/estimators.hpp"
#include "srdice/mdp.hpp"

namespace srdice {

/// ln(1e-30): the value reported for an exact estimate.
inline const double kLogMseFloor = std::log(1e-30);

struct LogMse {
    double value = 0.0;
    bool clamped = false;
};

/// ln(0.5 (estimate - truth)^2), clamped below at ln(1e-30).
LogMse log_mse(double estimate, double truth);

/// Mean squared error over the oracle's valid entries. Masked model entries
/// count as 0. Throws when every oracle entry is masked.
double ratio_mse(const Matrix& ratio, const MaskedRatio& oracle);
double ratio_mse(const RatioModel& ratio, const MaskedRatio& oracle);

/// ln(ratio_mse), with the same floor as log_mse.
double log_ratio_mse(double mse);

/// Trailing uniform moving average: point i averages the last `window`
/// values up to and including i (fewer at the start).
std::vector<double> smooth(const std::vector<double>& values, int window);

/// First index after which every value stays within `tolerance * |final|`
/// of the final value.
std::size_t band_entry_index(const std::vector<double>& curve, double tolerance = 0.1);

/// Normalized discounted return by Monte Carlo: each episode stops at a
/// Geometric(1 - gamma) time T and scores r(s_T, a_T), an unbiased sample
/// of sum_{s,a} d^pi(s, a) r(s, a).
struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};
MonteCarloEstimate monte_carlo_return(const TabularMDP& mdp, const Policy& pi, Discount gamma, long episodes,
                                      std::uint64_t seed);

}  // namespace srdice
