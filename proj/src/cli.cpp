#include "miirl/cli.hpp"

#include "miirl/environments.hpp"
#include "miirl/io.hpp"
#include "miirl/metrics.hpp"
#include "miirl/parallel.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace miirl {

namespace fs = std::filesystem;

namespace {

/// Bad flags or incompatible options (exit 1).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unreadable, malformed or inconsistent input data (exit 2).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Logger {
    std::ostream& err;

    template <class... Args>
    void operator()(const Args&... args) const {
        std::ostringstream line;
        line << "miirl: ";
        (line << ... << args);
        err << line.str() << '\n';
    }
};

std::vector<double> default_lag_weights(int history_len) {
    std::vector<double> w(static_cast<std::size_t>(history_len));
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = j % 2 == 0 ? 1.0 : 0.5;
    return w;
}

Json int_list(const std::vector<bool>& mask) {
    Json out = Json::array();
    for (std::size_t s = 0; s < mask.size(); ++s) {
        if (mask[s]) out.push_back(s);
    }
    return out;
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::string target;
    std::uint64_t seed = 0;
    std::string out;
    int n_traj = -1;
    int len = -1;
    int sessions = -1;
    // gridworld
    bool no_penalty = false;
    int side = 15;
    double slip = 0.3;
    double density = 0.15;
    // maze
    int depth = 6;
    double stay = 0.9;
    std::string mode = "greedy";
    double reward_scale = 1.0;
    // bandit
    int history = 3;
    int agent_history = 3;
    int trials = 200;
    std::vector<double> lag_weights;
    double gamma = 0.99;
};

struct Generated {
    DemoFile demos;
    EnvironmentFile env;
    std::optional<std::vector<TrialRecord>> raw;
};

PolicyMode parse_mode(const std::string& mode) {
    if (mode == "greedy") return PolicyMode::greedy;
    if (mode == "boltzmann") return PolicyMode::boltzmann;
    throw UsageError("--mode must be greedy or boltzmann");
}

DemoFile demo_file(const TabularMDP& mdp, SimulatedData&& data) {
    DemoFile f;
    f.num_states = mdp.num_states();
    f.num_actions = mdp.num_actions();
    f.demos = std::move(data.demos);
    f.labels = std::move(data.truth.labels);
    return f;
}

Generated generate_gridworld(const GenerateArgs& a) {
    GridworldSpec spec;
    spec.side = a.side;
    spec.slip_prob = a.slip;
    spec.resource_density = a.density;
    spec.penalty_on_other = a.no_penalty ? 0.0 : -1.0;
    spec.seed = a.seed;
    DemoSpec ds;
    ds.num_trajectories = a.n_traj < 0 ? 512 : a.n_traj;
    ds.length = a.len < 0 ? 64 : a.len;
    ds.num_sessions = a.sessions < 0 ? 1 : a.sessions;
    ds.mode = parse_mode(a.mode);
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    auto grid = gen_gridworld(spec);
    IntentionProcess process{{grid.hungry, grid.thirsty}, Vector(2), std::nullopt};
    process.prior << 0.7, 0.3;
    Rng rng(derive_seed(a.seed, 1));
    auto data = simulate_demonstrations(grid.mdp, process, ds, rng);

    Generated g;
    g.env.kind = "gridworld";
    g.env.mdp = grid.mdp;
    g.env.truth_rewards = data.truth.rewards;
    g.env.truth_policies = data.truth.policies;
    g.env.extra = {{"side", spec.side},
                   {"slip_prob", spec.slip_prob},
                   {"resource_density", spec.resource_density},
                   {"reward_on_target", spec.reward_on_target},
                   {"penalty_on_other", spec.penalty_on_other},
                   {"seed", a.seed},
                   {"intentions", {"hungry", "thirsty"}},
                   {"prior", {0.7, 0.3}},
                   {"policy_mode", a.mode},
                   {"food", int_list(grid.food)},
                   {"water", int_list(grid.water)}};
    g.demos = demo_file(grid.mdp, std::move(data));
    return g;
}

Generated generate_maze(const GenerateArgs& a) {
    if (a.depth < 1 || a.depth > 12) throw UsageError("--depth must lie in [1, 12]");
    if (!(a.stay >= 0.0 && a.stay <= 1.0)) throw UsageError("--stay must lie in [0, 1]");
    DemoSpec ds;
    ds.num_trajectories = a.n_traj < 0 ? 4000 : a.n_traj;
    ds.length = a.len < 0 ? 15 : a.len;
    ds.num_sessions = a.sessions < 0 ? 20 : a.sessions;
    ds.mode = parse_mode(a.mode);
    const auto mdp = gen_tree_maze(a.depth, a.gamma);
    IntentionProcess process{maze_intention_rewards(a.depth, a.reward_scale), Vector::Constant(2, 0.5),
                             Matrix(2, 2)};
    *process.trans << a.stay, 1.0 - a.stay, 1.0 - a.stay, a.stay;
    Rng rng(derive_seed(a.seed, 1));
    auto data = simulate_demonstrations(mdp, process, ds, rng);

    Generated g;
    g.env.kind = "maze";
    g.env.mdp = mdp;
    g.env.truth_rewards = data.truth.rewards;
    g.env.truth_policies = data.truth.policies;
    g.env.extra = {{"depth", a.depth},
                   {"water_port", maze_water_port(a.depth)},
                   {"intentions", {"water", "home"}},
                   {"prior", {0.5, 0.5}},
                   {"trans", matrix_to_json(*process.trans)},
                   {"policy_mode", a.mode},
                   {"reward_scale", a.reward_scale},
                   {"seed", a.seed}};
    g.demos = demo_file(mdp, std::move(data));
    return g;
}

Generated generate_bandit(const GenerateArgs& a) {
    BanditSpec spec;
    spec.history_len = a.history;
    spec.session_length = a.trials;
    spec.seed = a.seed;
    const int sessions = a.sessions < 0 ? 80 : a.sessions;
    if (sessions < 1) throw UsageError("--sessions must be positive");
    if (a.agent_history < 1 || a.agent_history > 8) throw UsageError("--agent-history must lie in [1, 8]");
    const auto lags = a.lag_weights.empty() ? default_lag_weights(a.agent_history) : a.lag_weights;
    if (static_cast<int>(lags.size()) != a.agent_history) {
        throw UsageError("--lag-weights needs one value per agent history slot");
    }
    try {
        spec.validate();
        if (a.history > 8) throw std::invalid_argument("--history must be at most 8");
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto policy = reference_bandit_policy(a.agent_history, lags);
    const auto agent = BanditAgent::single(policy);
    Rng rng(derive_seed(a.seed, 1));
    std::vector<TrialRecord> trials;
    for (int s = 0; s < sessions; ++s) {
        auto session = simulate_bandit_session(agent, spec, s, rng);
        trials.insert(trials.end(), session.begin(), session.end());
    }

    Generated g;
    g.env.kind = "bandit";
    g.env.mdp = TabularMDP(history_state_count(a.history), 2, a.gamma);
    if (a.history == a.agent_history) g.env.truth_policies = {policy};
    g.env.extra = {{"history_len", a.history},
                   {"agent_history_len", a.agent_history},
                   {"lag_weights", lags},
                   {"window", spec.window},
                   {"criterion", spec.criterion},
                   {"min_block", spec.min_block},
                   {"session_length", spec.session_length},
                   {"sessions", sessions},
                   {"seed", a.seed}};
    g.demos.num_states = g.env.mdp.num_states();
    g.demos.num_actions = 2;
    g.demos.demos = encode_bandit_trials(trials, a.history);
    for (const auto& t : trials) g.demos.labels.push_back(t.latent);
    g.raw = std::move(trials);
    return g;
}

int cmd_generate(const GenerateArgs& a, const Logger& log) {
    if (a.n_traj == 0 || a.len == 0 || a.sessions == 0) throw UsageError("counts must be positive");
    Generated g;
    if (a.target == "gridworld") {
        g = generate_gridworld(a);
    } else if (a.target == "maze") {
        g = generate_maze(a);
    } else if (a.target == "bandit") {
        g = generate_bandit(a);
    } else {
        throw UsageError("unknown generator '" + a.target + "'");
    }
    const fs::path dir(a.out);
    save_demonstrations(g.demos, dir / "demos.jsonl");
    save_environment(g.env, dir / "env.json");
    if (g.raw) {
        std::ostringstream csv;
        write_bandit_trials(csv, *g.raw);
        write_text_file(dir / "raw.csv", csv.str());
    }
    std::vector<int> per_label;
    for (int l : g.demos.labels) {
        if (l < 0) continue;
        if (l >= static_cast<int>(per_label.size())) per_label.resize(static_cast<std::size_t>(l) + 1, 0);
        ++per_label[static_cast<std::size_t>(l)];
    }
    log(a.target, ": ", g.demos.demos.size(), " trajectories, ", g.demos.demos.total_steps(),
        " steps, ", g.demos.num_states, " states, ", g.demos.num_actions, " actions, ",
        group_sessions(g.demos.demos).size(), " sessions, label counts [", join_ints(per_label),
        "] -> ", dir.string());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// shared fit setup
// ---------------------------------------------------------------------------

struct FitInputs {
    DemoFile demos;
    std::optional<EnvironmentFile> env;
    TabularMDP mdp{1, 1, 0.0};
};

DemoFile read_demos(const std::string& path, const Logger& log) {
    DemoFile f;
    try {
        f = load_demonstrations(path);
    } catch (const ParseError& e) {
        throw DataError(path + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw DataError(e.what());
    }
    for (const auto& w : f.warnings) log(path, ": warning: ", w);
    return f;
}

EnvironmentFile read_env(const std::string& path) {
    try {
        return load_environment(path);
    } catch (const std::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

TabularMDP with_discount(const TabularMDP& mdp, double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw UsageError("--gamma must lie in [0, 1)");
    if (mdp.has_transitions()) {
        return TabularMDP(mdp.num_states(), mdp.num_actions(), gamma, mdp.transitions());
    }
    return TabularMDP(mdp.num_states(), mdp.num_actions(), gamma);
}

/// Builds the MDP from the environment (or the demo header when model-free).
TabularMDP resolve_mdp(const std::optional<EnvironmentFile>& env, int num_states, int num_actions,
                       const RunConfig& cfg, const std::string& demo_path) {
    if (env) {
        if (env->mdp.num_states() != num_states || env->mdp.num_actions() != num_actions) {
            throw DataError(demo_path + ": header declares " + std::to_string(num_states) + " states / " +
                            std::to_string(num_actions) + " actions but the environment has " +
                            std::to_string(env->mdp.num_states()) + " / " +
                            std::to_string(env->mdp.num_actions()));
        }
        return cfg.gamma ? with_discount(env->mdp, *cfg.gamma) : env->mdp;
    }
    return with_discount(TabularMDP(num_states, num_actions, 0.0), cfg.gamma.value_or(0.99));
}

void check_compatible(const RunConfig& cfg, const TabularMDP& mdp) {
    const auto& s = cfg.spec;
    if (s.num_intentions < 1) throw UsageError("--k must be at least 1");
    if (is_single(s.algorithm) && s.num_intentions != 1) {
        throw UsageError(std::string(to_string(s.algorithm)) + " fits a single intention; use --k 1");
    }
    if (s.restarts < 1) throw UsageError("--restarts must be at least 1");
    if (solver_of(s.algorithm) == SolverKind::iavi && !mdp.has_transitions()) {
        throw UsageError(std::string(to_string(s.algorithm)) +
                         " needs an environment file with transitions (--env)");
    }
    try {
        s.em.solver_cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

/// Options shared by fit and sweep.
struct ModelOptions {
    std::string algo;
    int k = 1;
    std::string config;
    int restarts = 10;
    std::uint64_t seed = 0;
    double gamma = 0.99;
    bool per_step = false;
    int jobs = 0;
    CLI::Option* algo_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* restarts_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* gamma_opt = nullptr;
    CLI::Option* per_step_opt = nullptr;

    void attach(CLI::App* cmd) {
        algo_opt = cmd->add_option("--algo", algo, "iavi | iql | lv-iavi | lv-iql | lmv-iavi | lmv-iql");
        k_opt = cmd->add_option("--k", k, "number of intentions");
        cmd->add_option("--config", config, "JSON run configuration (flags take precedence)");
        restarts_opt = cmd->add_option("--restarts", restarts, "seeded initializations per fit (default 10)");
        seed_opt = cmd->add_option("--seed", seed, "master seed");
        gamma_opt = cmd->add_option("--gamma", gamma, "discount factor override");
        per_step_opt = cmd->add_flag("--per-step-switching", per_step,
                                     "treat every step as its own trajectory");
        cmd->add_option("--jobs", jobs, "worker threads (default: MIIRL_JOBS or 1)");
    }

    RunConfig resolve() const {
        RunConfig cfg;
        bool have_algo = false;
        if (!config.empty()) {
            try {
                const Json j = Json::parse(read_text_file(config));
                have_algo = j.is_object() && j.contains("algorithm");
                cfg = run_config_from_json(j, cfg);
            } catch (const Json::parse_error& e) {
                throw UsageError(config + ": malformed JSON at byte " + std::to_string(e.byte));
            } catch (const ParseError& e) {
                throw UsageError(config + ": " + e.what());
            } catch (const std::runtime_error& e) {
                throw UsageError(e.what());
            }
        }
        if (algo_opt->count() > 0) {
            try {
                cfg.spec.algorithm = parse_algorithm(algo);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            have_algo = true;
        }
        if (!have_algo) throw UsageError("--algo is required (or an 'algorithm' entry in --config)");
        if (k_opt->count() > 0) cfg.spec.num_intentions = k;
        if (restarts_opt->count() > 0) cfg.spec.restarts = restarts;
        if (seed_opt->count() > 0) cfg.seed = seed;
        if (gamma_opt->count() > 0) cfg.gamma = gamma;
        if (per_step_opt->count() > 0) cfg.spec.per_step_switching = per_step;
        cfg.spec.em.solver = solver_of(cfg.spec.algorithm);
        return cfg;
    }

    int job_count() const {
        if (jobs < 0) throw UsageError("--jobs must be non-negative");
        return jobs > 0 ? jobs : default_jobs();
    }
};

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitArgs {
    ModelOptions model;
    std::string in;
    std::string env;
    std::string out;
    std::string warm_start;
    bool strict = false;
};

int cmd_fit(const FitArgs& a, const Logger& log) {
    const RunConfig cfg = a.model.resolve();
    const int jobs = a.model.job_count();
    const auto demos = read_demos(a.in, log);
    std::optional<EnvironmentFile> env;
    if (!a.env.empty()) env = read_env(a.env);
    if (demos.demos.empty()) throw DataError(a.in + ": no demonstrations to fit");
    const auto mdp = resolve_mdp(env, demos.num_states, demos.num_actions, cfg, a.in);
    check_compatible(cfg, mdp);

    std::optional<FittedModel> warm;
    if (!a.warm_start.empty()) {
        try {
            warm = load_result_bundle(a.warm_start).model;
        } catch (const std::exception& e) {
            throw DataError(a.warm_start + ": " + e.what());
        }
        if (warm->num_intentions() != cfg.spec.num_intentions) {
            throw UsageError("warm-start bundle has K = " + std::to_string(warm->num_intentions()) +
                             " but --k is " + std::to_string(cfg.spec.num_intentions));
        }
        if (is_markov(warm->algorithm) != is_markov(cfg.spec.algorithm)) {
            throw UsageError("warm-start bundle uses a different intention process");
        }
        if (warm->rewards.front().values.rows() != mdp.num_states() ||
            warm->rewards.front().values.cols() != mdp.num_actions()) {
            throw UsageError("warm-start bundle does not match the environment size");
        }
    }

    log("fitting ", to_string(cfg.spec.algorithm), " with K = ", cfg.spec.num_intentions, ", ",
        cfg.spec.restarts, " restart(s), seed ", cfg.seed, ", ", jobs, " job(s)");
    const FittedModel model =
        fit_with_restarts(cfg.spec, demos.demos, mdp, cfg.seed, jobs, warm ? &*warm : nullptr);

    ResultBundle bundle;
    bundle.model = model;
    const Demonstrations& train = demos.demos;
    const auto steps = static_cast<long long>(train.total_steps());
    const auto params = count_parameters(model_kind(cfg.spec.algorithm), cfg.spec.num_intentions,
                                         mdp.num_states(), mdp.num_actions());
    bundle.metrics["train_ll"] = model.train_ll;
    bundle.metrics["num_params"] = static_cast<double>(params);
    bundle.metrics["num_obs"] = static_cast<double>(steps);
    bundle.metrics["bic"] = bic(model.train_ll, params, std::max<long long>(steps, 1));
    bundle.metrics["random_ll"] = random_policy_log_likelihood(train, mdp.num_actions());
    if (demos.has_labels() && !model.per_step_switching) {
        const int K = cfg.spec.num_intentions;
        const bool in_range = std::all_of(demos.labels.begin(), demos.labels.end(),
                                          [K](int l) { return l < K; });
        if (in_range) {
            bundle.metrics["cluster_accuracy"] =
                cluster_alignment(map_assignment(model.posteriors), demos.labels, K).accuracy;
        }
    }

    auto& p = bundle.provenance;
    p.config = {{"run", run_config_to_json(cfg)},
                {"inputs",
                 {{"demonstrations", a.in},
                  {"environment", a.env.empty() ? Json(nullptr) : Json(a.env)},
                  {"warm_start", a.warm_start.empty() ? Json(nullptr) : Json(a.warm_start)}}}};
    p.config_hash = config_hash(p.config);
    p.master_seed = cfg.seed;
    p.seeds = model.restart_seeds;
    p.selected_restart = model.selected_restart;
    try {
        save_result_bundle(bundle, a.out);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }

    log("train LL ", format_real(model.train_ll), ", BIC ", format_real(bundle.metrics["bic"]),
        ", ", model.trace.iterations, " EM iteration(s), ",
        model.trace.converged ? "converged" : "NOT converged", ", restart ", model.selected_restart,
        " selected -> ", a.out);
    if (bundle.metrics.count("cluster_accuracy")) {
        log("cluster accuracy against truth labels: ", format_real(bundle.metrics["cluster_accuracy"]));
    }
    if (a.strict && !model.trace.converged) {
        log("error: fit did not converge (--strict)");
        return kExitNotConverged;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string model;
    std::string in;
    std::string metrics = "ll";
    std::string env;
    std::string out;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void emit_table(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows, std::ostream& out) {
    if (path.empty()) {
        write_csv(out, header, rows);
        return;
    }
    std::ostringstream text;
    write_csv(text, header, rows);
    try {
        write_text_file(path, text.str());
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
}

int cmd_eval(const EvalArgs& a, const Logger& log, std::ostream& out) {
    const auto metrics = split_list(a.metrics);
    for (const auto& m : metrics) {
        if (m != "ll" && m != "evd" && m != "bic" && m != "accuracy") {
            throw UsageError("unknown metric '" + m + "' (expected ll, evd, bic, accuracy)");
        }
    }
    ResultBundle bundle;
    try {
        bundle = load_result_bundle(a.model);
    } catch (const std::exception& e) {
        throw DataError(a.model + ": " + e.what());
    }
    const auto demos = read_demos(a.in, log);
    std::optional<EnvironmentFile> env;
    if (!a.env.empty()) env = read_env(a.env);
    const FittedModel& model = bundle.model;
    const int K = model.num_intentions();
    const auto& r0 = model.rewards.front().values;
    if (r0.rows() != demos.num_states || r0.cols() != demos.num_actions) {
        throw DataError("model and demonstrations disagree on the state/action space");
    }
    const std::string name(to_string(model.algorithm));
    std::vector<std::vector<std::string>> rows;

    const double ll = model_log_likelihood(model, demos.demos);
    for (const auto& m : metrics) {
        if (m == "ll") {
            rows.push_back({"ll", name, "", "", format_real(ll)});
            rows.push_back({"ll", "random", "", "",
                            format_real(random_policy_log_likelihood(demos.demos, demos.num_actions))});
        } else if (m == "bic") {
            const auto params = count_parameters(model_kind(model.algorithm), K, demos.num_states,
                                                 demos.num_actions);
            const auto steps = std::max<long long>(static_cast<long long>(demos.demos.total_steps()), 1);
            rows.push_back({"bic", name, "", "", format_real(bic(ll, params, steps))});
        } else if (m == "accuracy") {
            if (!demos.has_labels()) throw DataError(a.in + ": accuracy needs truth labels");
            const Matrix post = model_posteriors(model, demos.demos);
            if (model.per_step_switching) throw UsageError("accuracy is per trajectory; model switches per step");
            try {
                const auto al = cluster_alignment(map_assignment(post), demos.labels, K);
                rows.push_back({"accuracy", name, "", "", format_real(al.accuracy)});
            } catch (const std::out_of_range& e) {
                throw DataError(std::string("truth labels exceed the model's intention count: ") + e.what());
            }
        } else if (m == "evd") {
            if (!env) throw DataError("EVD needs an environment file with ground truth (--env)");
            if (!env->mdp.has_transitions()) throw DataError("EVD needs an environment with transitions");
            const auto T = env->truth_rewards.size();
            if (T == 0 || env->truth_policies.size() != T) {
                throw DataError(a.env + ": no ground-truth rewards and policies for EVD");
            }
            Matrix table(static_cast<Eigen::Index>(T), K);
            for (std::size_t j = 0; j < T; ++j) {
                for (int k = 0; k < K; ++k) {
                    table(static_cast<Eigen::Index>(j), k) =
                        evd(env->mdp, env->truth_rewards[j], env->truth_policies[j],
                            model.rewards[static_cast<std::size_t>(k)]);
                }
            }
            std::vector<int> match(T, 0);
            if (static_cast<std::size_t>(K) == T && K > 1) {
                std::vector<int> perm(T);
                std::iota(perm.begin(), perm.end(), 0);
                bool labelled = false;
                if (demos.has_labels() && !model.per_step_switching) {
                    try {
                        const auto al = cluster_alignment(
                            map_assignment(model_posteriors(model, demos.demos)), demos.labels, K);
                        for (int k = 0; k < K; ++k) match[static_cast<std::size_t>(al.permutation[static_cast<std::size_t>(k)])] = k;
                        labelled = true;
                    } catch (const std::out_of_range&) {
                    }
                }
                if (!labelled) {
                    double best = std::numeric_limits<double>::infinity();
                    do {
                        double total = 0.0;
                        for (std::size_t j = 0; j < T; ++j) total += table(static_cast<Eigen::Index>(j), perm[j]);
                        if (total < best) {
                            best = total;
                            match = perm;
                        }
                    } while (std::next_permutation(perm.begin(), perm.end()));
                }
            } else {
                for (std::size_t j = 0; j < T; ++j) {
                    Eigen::Index k = 0;
                    table.row(static_cast<Eigen::Index>(j)).minCoeff(&k);
                    match[j] = static_cast<int>(k);
                }
            }
            for (std::size_t j = 0; j < T; ++j) {
                rows.push_back({"evd", name, std::to_string(j), std::to_string(match[j]),
                                format_real(table(static_cast<Eigen::Index>(j), match[j]))});
            }
        }
    }
    emit_table(a.out, {"metric", "model", "intention", "matched", "value"}, rows, out);
    log("evaluated ", rows.size(), " metric row(s) for ", demos.demos.size(), " trajectories");
    return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
    ModelOptions model;
    std::string param;
    std::vector<int> values;
    int folds = 5;
    std::string in;
    std::string raw;
    std::string env;
    std::string out;
};

int cmd_sweep(const SweepArgs& a, const Logger& log, std::ostream& out) {
    if (a.param != "k" && a.param != "history") throw UsageError("--param must be k or history");
    if (a.values.empty()) throw UsageError("--values needs at least one value");
    if (a.folds < 1) throw UsageError("--folds must be at least 1");
    RunConfig cfg = a.model.resolve();
    const int jobs = a.model.job_count();
    std::optional<EnvironmentFile> env;
    if (!a.env.empty()) env = read_env(a.env);

    std::optional<DemoFile> demos;
    std::vector<TrialRecord> trials;
    if (a.param == "k") {
        if (a.in.empty()) throw UsageError("a K sweep needs --in");
        demos = read_demos(a.in, log);
        if (demos->demos.empty()) throw DataError(a.in + ": no demonstrations");
    } else {
        if (a.raw.empty()) throw UsageError("a history sweep needs --raw (trial log from generate bandit)");
        if (solver_of(cfg.spec.algorithm) != SolverKind::iql) {
            throw UsageError("history sweeps re-encode the state space and need a model-free (iql) algorithm");
        }
        try {
            trials = load_bandit_trials(a.raw);
        } catch (const ParseError& e) {
            throw DataError(a.raw + ": " + e.what());
        } catch (const std::runtime_error& e) {
            throw DataError(e.what());
        }
        if (trials.empty()) throw DataError(a.raw + ": no trials");
    }

    std::vector<std::vector<std::string>> rows;
    for (int value : a.values) {
        RunConfig point = cfg;
        Demonstrations data;
        TabularMDP mdp(1, 1, 0.0);
        if (a.param == "k") {
            point.spec.num_intentions = value;
            data = demos->demos;
            mdp = resolve_mdp(env, demos->num_states, demos->num_actions, point, a.in);
        } else {
            if (value < 1 || value > 8) throw UsageError("history lengths must lie in [1, 8]");
            data = encode_bandit_trials(trials, value);
            const double gamma = point.gamma.value_or(env ? env->mdp.discount() : 0.99);
            mdp = with_discount(TabularMDP(history_state_count(value), 2, 0.0), gamma);
        }
        check_compatible(point, mdp);
        CrossValidation cv;
        try {
            cv = cross_validate(data, a.folds, point.spec, mdp, point.seed, jobs);
        } catch (const std::invalid_argument& e) {
            throw DataError(e.what());
        }
        for (const auto& f : cv.folds) {
            rows.push_back({a.param, std::to_string(value), std::to_string(f.fold), format_real(f.train_ll),
                            format_real(f.test_ll), format_real(f.bic)});
        }
        log(a.param, " = ", value, ": test LL ", format_real(cv.mean_test_ll), " +- ",
            format_real(cv.se_test_ll), ", train LL ", format_real(cv.mean_train_ll),
            cv.folds.front().degenerate ? " (single fold: train = test)" : "");
    }
    emit_table(a.out, {"param", "value", "fold", "train_ll", "test_ll", "bic"}, rows, out);
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    const Logger log{err};
    CLI::App app{"Multi-intention inverse reinforcement learning"};
    app.name("miirl");
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "simulate a demonstration dataset");
    generate->add_option("target", gen.target, "gridworld | maze | bandit")->required();
    generate->add_option("--seed", gen.seed, "generator seed");
    generate->add_option("--out", gen.out, "output directory")->required();
    generate->add_option("--n-traj", gen.n_traj, "number of trajectories (gridworld 512, maze 4000)");
    generate->add_option("--len", gen.len, "steps per trajectory (gridworld 64, maze 15)");
    generate->add_option("--sessions", gen.sessions, "number of sessions (gridworld 1, maze 20, bandit 80)");
    generate->add_flag("--no-penalty", gen.no_penalty, "gridworld: reward 0 on the other resource");
    generate->add_option("--side", gen.side, "gridworld side length");
    generate->add_option("--slip", gen.slip, "gridworld slip probability");
    generate->add_option("--density", gen.density, "gridworld resource density");
    generate->add_option("--depth", gen.depth, "maze depth (6 gives 127 states)");
    generate->add_option("--stay", gen.stay, "maze: probability of keeping the intention");
    generate->add_option("--mode", gen.mode, "expert policy: greedy | boltzmann");
    generate->add_option("--reward-scale", gen.reward_scale, "maze reward magnitude");
    generate->add_option("--history", gen.history, "bandit: history length of the state encoding");
    generate->add_option("--agent-history", gen.agent_history, "bandit: history length used by the agent");
    generate->add_option("--trials", gen.trials, "bandit: trials per session");
    generate->add_option("--lag-weights", gen.lag_weights, "bandit: agent evidence weight per lag")
        ->delimiter(',');
    generate->add_option("--gamma", gen.gamma, "discount recorded in the environment");

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "fit a model and write a result bundle");
    fit.model.attach(fit_cmd);
    fit_cmd->add_option("--in", fit.in, "demonstrations (JSON lines)")->required();
    fit_cmd->add_option("--env", fit.env, "environment file");
    fit_cmd->add_option("--out", fit.out, "result bundle path")->required();
    fit_cmd->add_option("--warm-start", fit.warm_start, "initialize from a result bundle");
    fit_cmd->add_flag("--strict", fit.strict, "exit 3 when EM does not converge");

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "evaluate a result bundle on demonstrations");
    eval->add_option("--model", ev.model, "result bundle")->required();
    eval->add_option("--in", ev.in, "demonstrations (JSON lines)")->required();
    eval->add_option("--metrics", ev.metrics, "comma list of ll, evd, bic, accuracy");
    eval->add_option("--env,--truth", ev.env, "environment file with ground truth");
    eval->add_option("--out", ev.out, "CSV output (default: standard output)");

    SweepArgs sw;
    auto* sweep = app.add_subcommand("sweep", "cross-validated sweep over K or history length");
    sw.model.attach(sweep);
    sweep->add_option("--param", sw.param, "k | history")->required();
    sweep->add_option("--values", sw.values, "comma list of values")->required()->delimiter(',');
    sweep->add_option("--folds", sw.folds, "cross-validation folds (default 5)");
    sweep->add_option("--in", sw.in, "demonstrations for K sweeps");
    sweep->add_option("--raw", sw.raw, "bandit trial log for history sweeps");
    sweep->add_option("--env", sw.env, "environment file");
    sweep->add_option("--out", sw.out, "CSV output (default: standard output)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*generate) return cmd_generate(gen, log);
        if (*fit_cmd) return cmd_fit(fit, log);
        if (*eval) return cmd_eval(ev, log, out);
        if (*sweep) return cmd_sweep(sw, log, out);
    } catch (const UsageError& e) {
        log("error: ", e.what());
        return kExitUsage;
    } catch (const DataError& e) {
        log("error: ", e.what());
        return kExitData;
    } catch (const ParseError& e) {
        log("error: ", e.what());
        return kExitData;
    } catch (const std::invalid_argument& e) {
        log("error: ", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        log("error: ", e.what());
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace miirl
