#include "srdice/serialize.hpp"

#include <fstream>

#include "srdice/errors.hpp"

namespace srdice {

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw ConfigError("expected a non-empty nested array");
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != j[0].size()) throw ConfigError("ragged nested array");
        for (std::size_t k = 0; k < j[i].size(); ++k) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
        }
    }
    return m;
}

Json vector_to_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from_json(const Json& j) {
    if (!j.is_array()) throw ConfigError("expected an array");
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Json to_json(const TabularMDP& mdp) {
    const int S = mdp.n_states(), A = mdp.n_actions();
    Json transition = Json::array();
    for (int s = 0; s < S; ++s) {
        Json per_action = Json::array();
        for (int a = 0; a < A; ++a) per_action.push_back(vector_to_json(mdp.transition().row(sa_index(s, a, A))));
        transition.push_back(std::move(per_action));
    }
    Json j = {{"n_states", S},
              {"n_actions", A},
              {"transition", std::move(transition)},
              {"reward", matrix_to_json(mdp.reward())},
              {"initial_dist", vector_to_json(mdp.initial_dist())}};
    if (mdp.horizon()) j["horizon"] = *mdp.horizon();
    return j;
}

TabularMDP mdp_from_json(const Json& j) {
    try {
        const int S = j.at("n_states").get<int>();
        const int A = j.at("n_actions").get<int>();
        if (S < 1 || A < 1) throw ConfigError("n_states and n_actions must be positive");
        const Json& tr = j.at("transition");
        if (!tr.is_array() || tr.size() != static_cast<std::size_t>(S)) throw ConfigError("transition: expected S rows");
        Matrix transition(static_cast<Eigen::Index>(S) * A, S);
        for (int s = 0; s < S; ++s) {
            if (tr[s].size() != static_cast<std::size_t>(A)) throw ConfigError("transition: expected A entries per state");
            for (int a = 0; a < A; ++a) {
                const Vector row = vector_from_json(tr[s][a]);
                if (row.size() != S) throw ConfigError("transition: expected S successors");
                transition.row(sa_index(s, a, A)) = row.transpose();
            }
        }
        std::optional<int> horizon;
        if (j.contains("horizon") && !j["horizon"].is_null()) horizon = j["horizon"].get<int>();
        return TabularMDP(S, A, std::move(transition), matrix_from_json(j.at("reward")),
                          vector_from_json(j.at("initial_dist")), horizon);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("mdp: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("mdp: ") + e.what());
    }
}

Json to_json(const Policy& pi) { return {{"probs", matrix_to_json(pi.probs())}}; }

Policy policy_from_json(const Json& j) {
    try {
        return Policy(matrix_from_json(j.is_object() ? j.at("probs") : j));
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("policy: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("policy: ") + e.what());
    }
}

Json to_json(const Mlp& net) {
    return {{"sizes", net.sizes()},
            {"hidden_activation", to_string(net.hidden_activation())},
            {"output_activation", to_string(net.output_activation())},
            {"params", vector_to_json(net.params())}};
}

Mlp mlp_from_json(const Json& j) {
    try {
        Mlp net(j.at("sizes").get<std::vector<int>>(), activation_from_string(j.at("hidden_activation")),
                activation_from_string(j.at("output_activation")));
        const Vector params = vector_from_json(j.at("params"));
        if (params.size() != net.params().size()) throw ConfigError("mlp: parameter count mismatch");
        net.params() = params;
        return net;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("mlp: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("mlp: ") + e.what());
    }
}

Json to_json(const PairFunction& f) {
    Json j = {{"kind", to_string(f.kind())},
              {"n_pairs", f.n_pairs()},
              {"out_dim", f.out_dim()},
              {"params", vector_to_json(f.params())}};
    if (f.net()) j["net"] = to_json(*f.net());
    return j;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_json_file(const Json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace srdice
