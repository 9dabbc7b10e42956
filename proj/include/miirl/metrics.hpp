#pragma once

#include "miirl/model.hpp"

namespace miirl {

/// Mean squared gap between the expert's state values and those of the
/// Boltzmann-optimal policy for `learnt_reward`, both under `true_reward`.
double evd(const TabularMDP& mdp, const RewardTable& true_reward, const PolicyTable& expert_policy,
           const RewardTable& learnt_reward, double tol = 1e-10);

/// p ln n - 2 LL. Throws when num_obs < 1.
double bic(double total_ll, long long num_params, long long num_obs);

enum class ModelKind { bernoulli, markov };

long long count_parameters(ModelKind kind, int num_intentions, int num_states, int num_actions);
ModelKind model_kind(Algorithm algo);

struct Alignment {
    /// permutation[predicted] = truth label.
    std::vector<int> permutation;
    double accuracy = 0.0;
};

/// Best relabeling over all K! permutations; ties keep the lexicographically first.
Alignment cluster_alignment(const std::vector<int>& predicted, const std::vector<int>& truth,
                            int num_intentions);

/// Log-likelihood of the uniform random policy: total weighted steps * ln(1/|A|).
double random_policy_log_likelihood(const Demonstrations& demos, int num_actions);

// ---------------------------------------------------------------------------
// Session-level cross-validation
// ---------------------------------------------------------------------------

struct FoldReport {
    int fold = 0;
    std::vector<std::string> train_sessions;
    std::vector<std::string> test_sessions;
    double train_ll = 0.0;
    double test_ll = 0.0;
    std::size_t train_steps = 0;
    std::size_t test_steps = 0;
    double bic = 0.0;
    std::uint64_t seed = 0;
    /// Set when train and test sets coincide (a single fold).
    bool degenerate = false;
    FittedModel model;
};

struct CrossValidation {
    std::vector<FoldReport> folds;
    double mean_train_ll = 0.0;
    double se_train_ll = 0.0;
    double mean_test_ll = 0.0;
    double se_test_ll = 0.0;
};

/// Fold index of every session (in first-appearance order), from a seeded shuffle.
std::vector<int> partition_sessions(std::size_t num_sessions, int n_folds, std::uint64_t seed);

/// Mean and sample SD / sqrt(n); SE is 0 for a single value.
std::pair<double, double> mean_and_se(const std::vector<double>& values);

CrossValidation cross_validate(const Demonstrations& demos, int n_folds, const FitSpec& spec,
                               const TabularMDP& mdp, std::uint64_t master_seed, int jobs = 1);

}  // namespace miirl
