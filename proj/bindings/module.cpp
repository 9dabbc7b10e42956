#include "miirl/cli.hpp"
#include "miirl/environments.hpp"
#include "miirl/io.hpp"
#include "miirl/metrics.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace miirl;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Algorithm algorithm_arg(const std::string& name) { return parse_algorithm(name); }

FitSpec make_spec(const std::string& algorithm, int k, int restarts, bool per_step_switching, int max_iter,
                  double tol, double policy_smoothing) {
    FitSpec spec;
    spec.algorithm = algorithm_arg(algorithm);
    spec.num_intentions = k;
    spec.restarts = restarts;
    spec.per_step_switching = per_step_switching;
    spec.em.solver = solver_of(spec.algorithm);
    spec.em.max_iter = max_iter;
    spec.em.tol = tol;
    spec.em.solver_cfg.policy_smoothing = policy_smoothing;
    return spec;
}

py::dict solver_result(const SolverOutput& out) {
    py::dict d;
    d["reward"] = out.reward.values;
    d["q"] = out.q.values;
    d["expert_policy"] = out.expert_policy_estimate.probs;
    d["converged"] = out.converged;
    d["sweeps"] = out.sweeps_used;
    return d;
}

}  // namespace

PYBIND11_MODULE(_miirl, m) {
    m.doc() = "Multi-intention inverse reinforcement learning (tabular)";
    m.attr("__version__") = kToolVersion;

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<MissingModelError>(m, "MissingModelError", PyExc_ValueError);

    py::class_<TabularMDP>(m, "TabularMDP")
        .def(py::init<int, int, double>(), py::arg("num_states"), py::arg("num_actions"), py::arg("discount"))
        .def(py::init<int, int, double, RowMatrix>(), py::arg("num_states"), py::arg("num_actions"),
             py::arg("discount"), py::arg("transitions"))
        .def_property_readonly("num_states", &TabularMDP::num_states)
        .def_property_readonly("num_actions", &TabularMDP::num_actions)
        .def_property_readonly("discount", &TabularMDP::discount)
        .def_property_readonly("has_transitions", &TabularMDP::has_transitions)
        .def_property_readonly("transitions", [](const TabularMDP& mdp) { return mdp.transitions(); })
        .def("__repr__", [](const TabularMDP& mdp) {
            std::ostringstream s;
            s << "TabularMDP(" << mdp.num_states() << " states, " << mdp.num_actions() << " actions, gamma "
              << mdp.discount() << (mdp.has_transitions() ? ")" : ", model-free)");
            return s.str();
        });

    py::class_<Trajectory>(m, "Trajectory")
        .def(py::init([](std::vector<std::pair<int, int>> steps, std::string id, std::string session,
                         std::optional<int> next_state) {
                 Trajectory t;
                 t.id = std::move(id);
                 t.session = std::move(session);
                 for (auto [s, a] : steps) t.steps.push_back({s, a});
                 t.next_state = next_state;
                 return t;
             }),
             py::arg("steps"), py::arg("id") = "", py::arg("session") = "", py::arg("next_state") = py::none())
        .def_readwrite("id", &Trajectory::id)
        .def_readwrite("session", &Trajectory::session)
        .def_readwrite("next_state", &Trajectory::next_state)
        .def_property_readonly("steps", [](const Trajectory& t) {
            std::vector<std::pair<int, int>> out;
            for (const auto& st : t.steps) out.emplace_back(st.state, st.action);
            return out;
        })
        .def("__len__", [](const Trajectory& t) { return t.steps.size(); });

    py::class_<Demonstrations>(m, "Demonstrations")
        .def(py::init<>())
        .def(py::init([](std::vector<Trajectory> trajs, std::optional<std::vector<double>> weights) {
                 if (weights) return Demonstrations(std::move(trajs), std::move(*weights));
                 return Demonstrations(std::move(trajs));
             }),
             py::arg("trajectories"), py::arg("weights") = py::none())
        .def("add", &Demonstrations::add, py::arg("trajectory"), py::arg("weight") = 1.0)
        .def_readonly("trajectories", &Demonstrations::trajectories)
        .def_readonly("weights", &Demonstrations::weights)
        .def("total_steps", &Demonstrations::total_steps)
        .def("validate", &Demonstrations::validate)
        .def("__len__", &Demonstrations::size);

    py::class_<FittedModel>(m, "FittedModel")
        .def_property_readonly("algorithm", [](const FittedModel& f) { return std::string(to_string(f.algorithm)); })
        .def_property_readonly("num_intentions", &FittedModel::num_intentions)
        .def_readonly("per_step_switching", &FittedModel::per_step_switching)
        .def_readonly("prior", &FittedModel::prior)
        .def_readonly("trans", &FittedModel::trans)
        .def_property_readonly("rewards",
                               [](const FittedModel& f) {
                                   std::vector<Matrix> out;
                                   for (const auto& r : f.rewards) out.push_back(r.values);
                                   return out;
                               })
        .def_property_readonly("qs",
                               [](const FittedModel& f) {
                                   std::vector<Matrix> out;
                                   for (const auto& q : f.qs) out.push_back(q.values);
                                   return out;
                               })
        .def_readonly("posteriors", &FittedModel::posteriors)
        .def_readonly("train_ll", &FittedModel::train_ll)
        .def_readonly("restart_seeds", &FittedModel::restart_seeds)
        .def_readonly("selected_restart", &FittedModel::selected_restart)
        .def_property_readonly("log_likelihood_trace", [](const FittedModel& f) { return f.trace.log_likelihood; })
        .def_property_readonly("iterations", [](const FittedModel& f) { return f.trace.iterations; })
        .def_property_readonly("converged", [](const FittedModel& f) { return f.trace.converged; });

    // Planning and policies
    m.def(
        "q_star", [](const TabularMDP& mdp, const RowMatrix& reward) { return q_star(mdp, RewardTable{reward}).q.values; },
        py::arg("mdp"), py::arg("reward"), "Optimal action values by value iteration.");
    m.def(
        "boltzmann_policy", [](const RowMatrix& q) { return boltzmann_policy(QTable{q}).probs; }, py::arg("q"));
    m.def(
        "policy_state_values",
        [](const TabularMDP& mdp, const RowMatrix& reward, const RowMatrix& policy) {
            return policy_state_values(mdp, RewardTable{reward}, PolicyTable{policy});
        },
        py::arg("mdp"), py::arg("reward"), py::arg("policy"));

    // Single-intention solvers
    m.def(
        "iavi_from_policy",
        [](const TabularMDP& mdp, const RowMatrix& policy) {
            return solver_result(iavi_from_policy(mdp, PolicyTable{policy}, SolverConfig{}));
        },
        py::arg("mdp"), py::arg("policy"), "Reward and Q reproducing a full-support policy.");
    m.def(
        "iavi",
        [](const TabularMDP& mdp, const Demonstrations& demos, double policy_smoothing) {
            SolverConfig cfg;
            cfg.policy_smoothing = policy_smoothing;
            return solver_result(iavi(mdp, demos, cfg));
        },
        py::arg("mdp"), py::arg("demos"), py::arg("policy_smoothing") = SolverConfig{}.policy_smoothing);
    m.def(
        "iql",
        [](const Demonstrations& demos, int num_states, int num_actions, double discount, double policy_smoothing,
           int epochs) {
            SolverConfig cfg;
            cfg.policy_smoothing = policy_smoothing;
            cfg.iql_epochs = epochs;
            return solver_result(iql(demos, num_states, num_actions, discount, cfg));
        },
        py::arg("demos"), py::arg("num_states"), py::arg("num_actions"), py::arg("discount"),
        py::arg("policy_smoothing") = SolverConfig{}.policy_smoothing, py::arg("epochs") = SolverConfig{}.iql_epochs);

    // Latent-intention inference
    m.def(
        "forward_backward",
        [](const RowMatrix& log_emissions, const Eigen::VectorXd& pi0, const RowMatrix& trans) {
            const auto out = forward_backward(log_emissions, pi0, trans);
            return py::make_tuple(out.gamma, out.xi, out.total_ll);
        },
        py::arg("log_emissions"), py::arg("pi0"), py::arg("trans"),
        "Smoothed posteriors, pairwise posteriors and total log-likelihood.");
    m.def(
        "fit",
        [](const Demonstrations& demos, const TabularMDP& mdp, const std::string& algorithm, int k, int restarts,
           std::uint64_t seed, int jobs, bool per_step_switching, int max_iter, double tol, double policy_smoothing) {
            const auto spec = make_spec(algorithm, k, restarts, per_step_switching, max_iter, tol, policy_smoothing);
            py::gil_scoped_release release;
            return fit_with_restarts(spec, demos, mdp, seed, jobs);
        },
        py::arg("demos"), py::arg("mdp"), py::arg("algorithm") = "lv-iavi", py::arg("k") = 2, py::arg("restarts") = 10,
        py::arg("seed") = 0, py::arg("jobs") = 1, py::arg("per_step_switching") = false,
        py::arg("max_iter") = EmConfig{}.max_iter, py::arg("tol") = EmConfig{}.tol,
        py::arg("policy_smoothing") = SolverConfig{}.policy_smoothing);
    m.def("log_likelihood", &model_log_likelihood, py::arg("model"), py::arg("demos"));
    m.def("posteriors", &model_posteriors, py::arg("model"), py::arg("demos"));
    m.def(
        "cross_validate",
        [](const Demonstrations& demos, const TabularMDP& mdp, const std::string& algorithm, int k, int folds,
           int restarts, std::uint64_t seed, int jobs) {
            const auto spec = make_spec(algorithm, k, restarts, false, EmConfig{}.max_iter, EmConfig{}.tol,
                                        SolverConfig{}.policy_smoothing);
            CrossValidation cv;
            {
                py::gil_scoped_release release;
                cv = cross_validate(demos, folds, spec, mdp, seed, jobs);
            }
            py::list rows;
            for (const auto& f : cv.folds) {
                py::dict row;
                row["fold"] = f.fold;
                row["train_ll"] = f.train_ll;
                row["test_ll"] = f.test_ll;
                row["bic"] = f.bic;
                row["test_sessions"] = f.test_sessions;
                rows.append(row);
            }
            return rows;
        },
        py::arg("demos"), py::arg("mdp"), py::arg("algorithm"), py::arg("k") = 1, py::arg("folds") = 5,
        py::arg("restarts") = 10, py::arg("seed") = 0, py::arg("jobs") = 1);

    // Metrics
    m.def(
        "evd",
        [](const TabularMDP& mdp, const RowMatrix& true_reward, const RowMatrix& expert_policy,
           const RowMatrix& learnt_reward) {
            return evd(mdp, RewardTable{true_reward}, PolicyTable{expert_policy}, RewardTable{learnt_reward});
        },
        py::arg("mdp"), py::arg("true_reward"), py::arg("expert_policy"), py::arg("learnt_reward"));
    m.def("bic", &bic, py::arg("log_likelihood"), py::arg("num_params"), py::arg("num_obs"));
    m.def(
        "count_parameters",
        [](const std::string& algorithm, int k, int num_states, int num_actions) {
            return count_parameters(model_kind(algorithm_arg(algorithm)), k, num_states, num_actions);
        },
        py::arg("algorithm"), py::arg("k"), py::arg("num_states"), py::arg("num_actions"));
    m.def(
        "cluster_alignment",
        [](const std::vector<int>& predicted, const std::vector<int>& truth, int k) {
            const auto al = cluster_alignment(predicted, truth, k);
            return py::make_tuple(al.permutation, al.accuracy);
        },
        py::arg("predicted"), py::arg("truth"), py::arg("k"));

    // Environments
    m.def(
        "gridworld",
        [](std::uint64_t seed, int side, double slip_prob, double resource_density, double penalty, double discount) {
            GridworldSpec spec;
            spec.seed = seed;
            spec.side = side;
            spec.slip_prob = slip_prob;
            spec.resource_density = resource_density;
            spec.penalty_on_other = penalty;
            spec.discount = discount;
            auto g = gen_gridworld(spec);
            py::dict d;
            d["mdp"] = g.mdp;
            d["hungry"] = g.hungry.values;
            d["thirsty"] = g.thirsty.values;
            d["food"] = g.food;
            d["water"] = g.water;
            return d;
        },
        py::arg("seed") = 0, py::arg("side") = 15, py::arg("slip_prob") = 0.3, py::arg("resource_density") = 0.15,
        py::arg("penalty") = -1.0, py::arg("discount") = 0.99);
    m.def("tree_maze", &gen_tree_maze, py::arg("depth") = 6, py::arg("discount") = 0.99);
    m.def(
        "maze_rewards",
        [](int depth, double scale) {
            std::vector<Matrix> out;
            for (const auto& r : maze_intention_rewards(depth, scale)) out.push_back(r.values);
            return out;
        },
        py::arg("depth") = 6, py::arg("scale") = 1.0);
    m.def(
        "simulate",
        [](const TabularMDP& mdp, const std::vector<RowMatrix>& rewards, const Eigen::VectorXd& prior,
           std::optional<RowMatrix> trans, int num_trajectories, int length, int num_sessions, bool boltzmann,
           std::uint64_t seed) {
            IntentionProcess process;
            for (const auto& r : rewards) process.rewards.push_back(RewardTable{r});
            process.prior = prior;
            if (trans) process.trans = *trans;
            DemoSpec spec;
            spec.num_trajectories = num_trajectories;
            spec.length = length;
            spec.num_sessions = num_sessions;
            spec.mode = boltzmann ? PolicyMode::boltzmann : PolicyMode::greedy;
            Rng rng(seed);
            auto sim = simulate_demonstrations(mdp, process, spec, rng);
            std::vector<Matrix> policies;
            for (const auto& p : sim.truth.policies) policies.push_back(p.probs);
            return py::make_tuple(std::move(sim.demos), sim.truth.labels, policies);
        },
        py::arg("mdp"), py::arg("rewards"), py::arg("prior"), py::arg("trans") = py::none(),
        py::arg("num_trajectories") = 512, py::arg("length") = 64, py::arg("num_sessions") = 1,
        py::arg("boltzmann") = false, py::arg("seed") = 0,
        "Returns (demonstrations, true labels, expert policies).");

    // Files
    m.def(
        "load_demonstrations",
        [](const std::filesystem::path& path) {
            auto f = load_demonstrations(path);
            return py::make_tuple(std::move(f.demos), f.num_states, f.num_actions, f.labels);
        },
        py::arg("path"), "Returns (demonstrations, num_states, num_actions, labels).");
    m.def(
        "load_result_model", [](const std::filesystem::path& path) { return load_result_bundle(path).model; },
        py::arg("path"));

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "miirl");
            std::vector<const char*> argv;
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
}
