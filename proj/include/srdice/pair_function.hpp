#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srdice/features.hpp"
#include "srdice/mlp.hpp"

namespace srdice {

enum class ModelKind { Table, Linear, Mlp };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Vector-valued function of a state-action pair, indexed by sa_index.
///
/// Table keeps one free parameter row per pair. Linear and Mlp read the
/// pair through a FeatureMap. Parameters are exposed as one flat vector so
/// the optimizers and the finite-difference checker treat every model alike.
class PairFunction {
public:
    static PairFunction table(int n_pairs, int out_dim);
    static PairFunction linear(const FeatureMap& map, int out_dim, Rng& rng);
    static PairFunction mlp(const FeatureMap& map, const std::vector<int>& hidden, Activation hidden_act,
                            Activation output_act, int out_dim, Rng& rng);

    /// Forward pass over `pairs`, cached for a matching backward call.
    struct Eval {
        std::vector<int> pairs;
        Matrix values;  // one row per entry of pairs
        Mlp::Cache cache;
    };

    Eval evaluate(std::span<const int> pairs) const;
    Matrix forward(std::span<const int> pairs) const { return evaluate(pairs).values; }
    /// n_pairs x out_dim table of values.
    Matrix evaluate_all() const;

    /// dL/dparams for upstream dL/dvalues (rows aligned with eval.pairs).
    Vector gradient(const Eval& eval, const Matrix& upstream) const;

    ModelKind kind() const { return kind_; }
    int n_pairs() const { return n_pairs_; }
    int out_dim() const { return out_dim_; }
    Vector& params();
    const Vector& params() const;
    const std::optional<Mlp>& net() const { return net_; }

private:
    PairFunction(ModelKind kind, int n_pairs, int out_dim);

    ModelKind kind_;
    int n_pairs_;
    int out_dim_;
    Matrix inputs_;
    Vector params_;
    std::optional<Mlp> net_;
};

/// Sorted distinct pair ids drawn from several lists, with O(log n) lookup.
class PairIndex {
public:
    void add(std::span<const int> pairs);
    void finalize();
    const std::vector<int>& unique() const { return unique_; }
    int position(int pair) const;

private:
    std::vector<int> unique_;
};

}  // namespace srdice
