#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "srdice/mdp.hpp"
#include "srdice/mlp.hpp"
#include "srdice/pair_function.hpp"

namespace srdice {

using Json = nlohmann::json;

/// {"n_states", "n_actions", "transition": [S][A][S], "reward": [S][A],
///  "initial_dist": [S], "horizon"?}
Json to_json(const TabularMDP& mdp);
TabularMDP mdp_from_json(const Json& j);

/// {"probs": [S][A]}; a bare nested array is also accepted on input.
Json to_json(const Policy& pi);
Policy policy_from_json(const Json& j);

/// {"sizes", "hidden_activation", "output_activation", "params"}
Json to_json(const Mlp& net);
Mlp mlp_from_json(const Json& j);

/// {"kind", "n_pairs", "out_dim", "params"} plus "net" for mlp models.
/// Linear and mlp models need the feature map they were built on.
Json to_json(const PairFunction& f);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

/// Parses a whole file; IoError when unreadable, ConfigError when malformed.
Json read_json_file(const std::string& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const Json& j, const std::string& path);

}  // namespace srdice
