#pragma once

#include "miirl/em.hpp"

#include <string_view>

namespace miirl {

enum class Algorithm { iavi, iql, lv_iavi, lv_iql, lmv_iavi, lmv_iql };

std::string_view to_string(Algorithm algo);
/// Throws std::invalid_argument on unknown names.
Algorithm parse_algorithm(std::string_view name);

SolverKind solver_of(Algorithm algo);
bool is_markov(Algorithm algo);
bool is_single(Algorithm algo);

struct FitSpec {
    Algorithm algorithm = Algorithm::lv_iavi;
    int num_intentions = 1;
    EmConfig em{};
    int restarts = 1;
    /// Treat every step as its own trajectory so intentions may switch per action.
    bool per_step_switching = false;

    void validate() const;
};

/// Fitted parameters of any algorithm. Single-intention fits use K = 1 with
/// prior = [1]; Bernoulli fits keep `trans` empty; Markov fits store pi0 in `prior`.
struct FittedModel {
    Algorithm algorithm = Algorithm::iavi;
    bool per_step_switching = false;
    Vector prior;
    Matrix trans;
    std::vector<RewardTable> rewards;
    std::vector<QTable> qs;
    EmTrace trace;
    /// Posterior intention probabilities of the training trajectories (N x K).
    Matrix posteriors;
    double train_ll = 0.0;
    std::vector<std::uint64_t> restart_seeds;
    int selected_restart = 0;

    int num_intentions() const { return static_cast<int>(prior.size()); }
    BernoulliMixture bernoulli() const;
    MarkovMixture markov() const;
};

/// One seeded fit (no restarts).
FittedModel fit_model(const FitSpec& spec, const Demonstrations& demos, const TabularMDP& mdp,
                      std::uint64_t seed, const FittedModel* warm_start = nullptr);

/// Runs spec.restarts seeded fits (in parallel up to `jobs`) and keeps the one with the
/// highest training log-likelihood; ties go to the lowest restart index.
FittedModel fit_with_restarts(const FitSpec& spec, const Demonstrations& demos,
                              const TabularMDP& mdp, std::uint64_t master_seed, int jobs = 1,
                              const FittedModel* warm_start = nullptr);

/// Observed-data log-likelihood of `demos` under frozen model parameters.
double model_log_likelihood(const FittedModel& model, const Demonstrations& demos);

/// Posterior intention probabilities under frozen model parameters. Rows follow
/// `demos`, or its one-step split when the model switches per step.
Matrix model_posteriors(const FittedModel& model, const Demonstrations& demos);

}  // namespace miirl
