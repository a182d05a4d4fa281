// Command-line front end: dataset, oracle, run, sweep and suite subcommands.
// Exit codes: 0 ok, 2 configuration error, 3 I/O error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "srdice/errors.hpp"
#include "srdice/harness.hpp"

namespace fs = std::filesystem;
using namespace srdice;

namespace {

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    int threads = 0;
    std::string config;
};

int thread_count(const GlobalOptions& g) {
    if (g.threads > 0) return g.threads;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void make_dirs(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json nan_as_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

// ------------------------------------------------------------- dataset

struct DatasetOptions {
    std::string env;
    std::string behavior = "uniform";
    bool exhaustive = false;
    int copies = 1;
    int steps = 1000;
    int episode_len = 100;
    std::string file;
};

TabularMDP load_env(const std::string& env) {
    if (env.empty()) throw ConfigError("env: required (builtin 'randomwalk5' or an MDP JSON file)");
    if (env == "randomwalk5") return random_walk5();
    try {
        return mdp_from_json(read_json_file(env));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("env: " + std::string(e.what()));
    }
}

Policy load_policy(const std::string& spec, const TabularMDP& mdp, const std::string& field) {
    if (spec == "uniform") return Policy::uniform(mdp.n_states(), mdp.n_actions());
    try {
        Policy pi = policy_from_json(read_json_file(spec));
        validate_compatible(mdp, pi);
        return pi;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(field + ": " + e.what());
    }
}

int cmd_dataset(const GlobalOptions& g, const DatasetOptions& o) {
    const TabularMDP mdp = load_env(o.env);
    const std::uint64_t seed = g.seed.value_or(0);
    if (o.copies < 1) throw ConfigError("copies: must be >= 1");
    if (!o.exhaustive && (o.steps < 1 || o.episode_len < 1)) throw ConfigError("steps/episode-len: must be >= 1");
    const Dataset d = o.exhaustive ? exhaustive_dataset(mdp, o.copies, seed, o.env)
                                   : rollout(mdp, load_policy(o.behavior, mdp, "behavior"), o.steps,
                                             o.episode_len, seed, o.behavior, o.env);
    fs::path path = o.file.empty() ? fs::path(g.out) / "dataset.jsonl" : fs::path(o.file);
    if (path.has_parent_path()) make_dirs(path.parent_path());
    save_dataset(d, path.string());
    const EmpiricalCounts c = empirical_counts(d);
    std::cout << Json{{"file", path.string()},
                      {"size", d.size()},
                      {"start_states", d.start_states().size()},
                      {"support", (c.counts.array() > 0).count()},
                      {"pairs", mdp.n_pairs()}}
                     .dump()
              << "\n";
    return 0;
}

// -------------------------------------------------------------- oracle

struct OracleOptions {
    std::string env;
    std::string policy = "uniform";
    double gamma = 0.99;
    std::string dataset;
    bool exhaustive = false;
};

int cmd_oracle(const GlobalOptions&, const OracleOptions& o) {
    const TabularMDP mdp = load_env(o.env);
    const Policy pi = load_policy(o.policy, mdp, "policy");
    if (!(o.gamma >= 0.0 && o.gamma < 1.0)) throw ConfigError("gamma: must lie in [0, 1)");
    const Discount gamma(o.gamma);
    const Matrix d = exact_occupancy(mdp, pi, gamma).d;
    const Matrix psi = exact_tabular_sr(mdp, pi, gamma).psi;
    Json out = {{"gamma", o.gamma},
                {"return", exact_return(mdp, pi, gamma)},
                {"occupancy", matrix_to_json(d)},
                {"sr_row_sums", vector_to_json(psi.rowwise().sum())}};
    std::optional<Dataset> data;
    if (!o.dataset.empty()) {
        data = load_dataset(o.dataset);
        if (data->n_states() != mdp.n_states() || data->n_actions() != mdp.n_actions()) {
            throw ConfigError("dataset: shape does not match the MDP");
        }
    } else if (o.exhaustive) {
        data = exhaustive_dataset(mdp, 1);
    }
    if (data) {
        const MaskedRatio r = exact_ratio_oracle(mdp, pi, gamma, empirical_counts(*data).distribution());
        Json rows = Json::array();
        for (int s = 0; s < mdp.n_states(); ++s) {
            Json row = Json::array();
            for (int a = 0; a < mdp.n_actions(); ++a) row.push_back(r.valid(s, a) ? Json(r.values(s, a)) : Json(nullptr));
            rows.push_back(std::move(row));
        }
        Json violations = Json::array();
        for (const auto& sa : r.support_violations) violations.push_back({sa.s, sa.a});
        out["ratio"] = std::move(rows);
        out["support_violations"] = violations;
        if (!r.support_violations.empty()) {
            out["warning"] = "target occupancy has mass on pairs absent from the dataset";
        }
    }
    std::cout << dump(out);
    return 0;
}

// ------------------------------------------------------- run and sweep

struct RunOptions {
    std::string preset;
    std::optional<int> seeds;
    std::optional<long> steps;
    std::optional<long> eval_every;
    std::vector<std::string> methods;
};

ExperimentConfig load_config(const GlobalOptions& g, const RunOptions& o) {
    Json j = Json::object();
    if (!g.config.empty()) j = read_json_file(g.config);
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    if (!o.preset.empty()) j["preset"] = o.preset;
    if (g.seed) j["seed"] = *g.seed;
    if (o.seeds) j["seeds"] = *o.seeds;
    if (o.steps) j["steps"] = *o.steps;
    if (o.eval_every) j["eval_every"] = *o.eval_every;
    if (!o.methods.empty()) j["methods"] = o.methods;
    if (g.config.empty() && o.preset.empty()) throw ConfigError("config: pass --config FILE or --preset NAME");
    return experiment_from_json(j);
}

void write_experiment(const fs::path& dir, const ExperimentConfig& cfg, const ExperimentSetup& setup,
                      const std::vector<TrialResult>& results) {
    make_dirs(dir / "traces");
    write_text(dir / "config.json", dump(to_json(cfg)));
    std::ostringstream data;
    write_jsonl(setup.dataset, data);
    write_text(dir / "dataset.jsonl", data.str());
    for (const auto& r : results) {
        std::ostringstream csv;
        write_trace_csv(r, csv);
        write_text(dir / "traces" / (r.method + "_" + std::to_string(r.seed) + ".csv"), csv.str());
    }
    write_text(dir / "summary.json", dump(summary_json(cfg, summarize(cfg, results), results)));
}

void print_summary(const std::vector<MethodSummary>& summaries) {
    for (const auto& s : summaries) {
        std::cout << s.method << ": final log ratio MSE " << format_double(s.final_log_ratio_mse) << ", band index "
                  << s.band_index << ", value " << format_double(s.final_value_mean) << ", diverged " << s.diverged
                  << "/" << s.trials << "\n";
    }
}

int cmd_run(const GlobalOptions& g, const RunOptions& o) {
    const ExperimentConfig cfg = load_config(g, o);
    const ExperimentSetup setup = build_setup(cfg);
    const auto results = run_experiment(cfg, setup, thread_count(g));
    write_experiment(g.out, cfg, setup, results);
    print_summary(summarize(cfg, results));
    return 0;
}

void set_lr(ExperimentConfig& cfg, const std::string& method, double lr) {
    if (method == "srdice" || method == "deep_sr") cfg.sr.optimizer.lr = lr;
    else if (method == "deep_td") cfg.deep_td.optimizer.lr = lr;
    else if (method == "dualdice") cfg.dualdice.optimizer.lr = lr;
    else if (method == "gradientdice") cfg.gradientdice.optimizer.lr = lr;
}

int cmd_sweep(const GlobalOptions& g, const RunOptions& o, const std::vector<double>& lrs) {
    const ExperimentConfig base = load_config(g, o);
    for (double lr : lrs) {
        if (!(lr > 0.0)) throw ConfigError("lrs: learning rates must be positive");
    }
    const ExperimentSetup setup = build_setup(base);
    make_dirs(g.out);
    write_text(fs::path(g.out) / "config.json", dump(to_json(base)));
    Json rows = Json::array();
    std::ostringstream csv;
    csv << "method,lr,trials,diverged,final_log_ratio_mse,band_index,final_value_mean,final_value_log_mse_mean\n";
    for (const auto& method : base.methods) {
        for (double lr : lrs) {
            ExperimentConfig cfg = base;
            cfg.methods = {method};
            set_lr(cfg, method, lr);
            const auto results = run_experiment(cfg, setup, thread_count(g));
            const MethodSummary s = summarize(cfg, results).front();
            rows.push_back({{"method", method},
                            {"lr", lr},
                            {"trials", s.trials},
                            {"diverged", s.diverged},
                            {"final_log_ratio_mse", nan_as_null(s.final_log_ratio_mse)},
                            {"band_index", s.band_index},
                            {"final_value_mean", nan_as_null(s.final_value_mean)},
                            {"final_value_log_mse_mean", nan_as_null(s.final_value_log_mse_mean)}});
            csv << method << ',' << format_double(lr) << ',' << s.trials << ',' << s.diverged << ','
                << format_double(s.final_log_ratio_mse) << ',' << s.band_index << ','
                << format_double(s.final_value_mean) << ',' << format_double(s.final_value_log_mse_mean) << '\n';
            std::cout << method << " lr " << format_double(lr) << ": final log ratio MSE "
                      << format_double(s.final_log_ratio_mse) << ", diverged " << s.diverged << "/" << s.trials
                      << "\n";
        }
    }
    write_text(fs::path(g.out) / "sweep.csv", csv.str());
    write_text(fs::path(g.out) / "summary.json", dump(Json{{"experiment", base.name}, {"rows", rows}}));
    return 0;
}

// --------------------------------------------------------------- suite

struct SuiteOptions {
    int rewards = 1000;
    bool zero_baseline = false;
};

int cmd_suite(const GlobalOptions& g, const RunOptions& o, const SuiteOptions& so) {
    if (so.rewards < 1) throw ConfigError("rewards: must be >= 1");
    const ExperimentConfig cfg = load_config(g, o);
    const ExperimentSetup setup = build_setup(cfg);
    const auto results = run_experiment(cfg, setup, thread_count(g));
    RandomRewardConfig rc;
    rc.count = so.rewards;
    const RandomRewardSuite suite = random_reward_suite(setup.mdp, setup.pi, Discount(cfg.gamma), rc, cfg.seed);

    std::vector<SuiteReport> reports;
    for (int trial = 0; trial < cfg.seeds; ++trial) {
        std::vector<NamedRatio> named;
        for (const auto& r : results) {
            if (r.trial == trial && r.ratio) named.push_back({r.method, *r.ratio});
        }
        if (so.zero_baseline) {
            const int S = setup.mdp.n_states(), A = setup.mdp.n_actions();
            named.push_back({"zero", RatioModel(TabularRatio{MaskedRatio{Matrix::Zero(S, A),
                                                                         BoolMatrix::Constant(S, A, true), {}}})});
        }
        if (named.empty()) throw ConfigError("config.methods: the suite needs at least one ratio-based method");
        if (suite.kept() > 0) reports.push_back(evaluate_suite(suite, named, setup.dataset));
    }
    make_dirs(g.out);
    write_text(fs::path(g.out) / "config.json", dump(to_json(cfg)));
    Json table = Json::array();
    std::ostringstream csv;
    csv << "method,mean_log_mse,std_log_mse,win_percentage\n";
    std::size_t kept = suite.kept();
    if (!reports.empty()) {
        const SuiteReport merged = merge_reports(reports);
        for (const auto& m : merged.methods) {
            table.push_back({{"method", m.method},
                             {"mean_log_mse", m.mean_log_mse},
                             {"std_log_mse", m.std_log_mse},
                             {"win_percentage", m.win_percentage}});
            csv << m.method << ',' << format_double(m.mean_log_mse) << ',' << format_double(m.std_log_mse) << ','
                << format_double(m.win_percentage) << '\n';
            std::cout << m.method << ": log MSE " << format_double(m.mean_log_mse) << " +- "
                      << format_double(m.std_log_mse) << ", win " << format_double(m.win_percentage) << "%\n";
        }
    } else {
        std::cout << "no reward passed the keep band\n";
    }
    write_text(fs::path(g.out) / "suite.csv", csv.str());
    write_text(fs::path(g.out) / "summary.json",
               dump(Json{{"experiment", cfg.name}, {"rewards", so.rewards}, {"kept", kept}, {"methods", table}}));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Off-policy evaluation with SR-DICE and DICE baselines on tabular MDPs"};
    app.require_subcommand(1);
    GlobalOptions g;
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Master seed");
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    app.add_option("--config", g.config, "Experiment config JSON file");

    DatasetOptions dopt;
    auto* dataset = app.add_subcommand("dataset", "Generate a JSONL dataset");
    dataset->add_option("--env", dopt.env, "randomwalk5 or an MDP JSON file");
    dataset->add_option("--behavior", dopt.behavior, "uniform or a policy JSON file")->capture_default_str();
    dataset->add_flag("--exhaustive", dopt.exhaustive, "Every (s, a) pair `copies` times");
    dataset->add_option("--copies", dopt.copies)->capture_default_str();
    dataset->add_option("--steps", dopt.steps, "Rollout transitions")->capture_default_str();
    dataset->add_option("--episode-len", dopt.episode_len)->capture_default_str();
    dataset->add_option("--file", dopt.file, "Output path (default OUT/dataset.jsonl)");

    OracleOptions oopt;
    auto* oracle = app.add_subcommand("oracle", "Print exact occupancy, SR row sums, return and ratios");
    oracle->add_option("--env", oopt.env, "randomwalk5 or an MDP JSON file");
    oracle->add_option("--policy", oopt.policy, "uniform or a policy JSON file")->capture_default_str();
    oracle->add_option("--gamma", oopt.gamma)->capture_default_str();
    oracle->add_option("--dataset", oopt.dataset, "Ratio table against this dataset's empirical distribution");
    oracle->add_flag("--exhaustive", oopt.exhaustive, "Ratio table against the exhaustive dataset");

    RunOptions ropt;
    std::vector<double> lrs{1.0, 0.5, 0.1, 0.05, 0.01, 0.001};
    SuiteOptions sopt;
    auto add_run_options = [&](CLI::App* cmd) {
        cmd->add_option("--preset", ropt.preset, "toy_tabular, toy_inverted or toy_dependent");
        cmd->add_option("--seeds", ropt.seeds, "Number of trials");
        cmd->add_option("--steps", ropt.steps, "Training steps per method");
        cmd->add_option("--eval-every", ropt.eval_every, "Evaluation cadence in steps");
        cmd->add_option("--methods", ropt.methods, "srdice, deep_sr, deep_td, dualdice, gradientdice");
    };
    auto* run = app.add_subcommand("run", "Run an experiment and write traces and a summary");
    add_run_options(run);
    auto* sweep = app.add_subcommand("sweep", "Learning-rate sweep per method");
    add_run_options(sweep);
    sweep->add_option("--lrs", lrs, "Learning-rate grid")->capture_default_str();
    auto* suite = app.add_subcommand("suite", "Randomized-reward evaluation of the learned ratios");
    add_run_options(suite);
    suite->add_option("--rewards", sopt.rewards, "Number of random rewards")->capture_default_str();
    suite->add_flag("--zero-baseline", sopt.zero_baseline, "Add an all-zero ratio as a strawman");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (*seed_opt) g.seed = seed_value;

    try {
        if (*dataset) return cmd_dataset(g, dopt);
        if (*oracle) return cmd_oracle(g, oopt);
        if (*run) return cmd_run(g, ropt);
        if (*sweep) return cmd_sweep(g, ropt, lrs);
        if (*suite) return cmd_suite(g, ropt, sopt);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
