#pragma once

#include "miirl/mdp.hpp"

#include <cstdint>

namespace miirl {

/// Constants shared by the single-intention solvers.
///
/// IQL learning rates are hand-tuned defaults. Both solvers stop once a full
/// sweep (IAVI) or epoch (IQL) moves every table entry by less than `reward_tol`.
struct SolverConfig {
    double reward_tol = 1e-8;
    int max_sweeps = 20000;
    double policy_smoothing = 1e-6;
    int iql_epochs = 1000;
    double iql_lr_q = 0.1;
    double iql_lr_r = 0.5;
    double iql_lr_sh = 0.1;
    /// When set, IQL replays transitions in a per-epoch permutation drawn from `rng_seed`
    /// instead of trajectory/step order.
    bool iql_shuffle = false;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Optional warm start for a solver run.
struct SolverInit {
    std::optional<RewardTable> reward;
    std::optional<QTable> q;
    /// IQL only: the table tracking gamma * max_a' Q(s', a').
    std::optional<Matrix> shifted_q;
};

struct SolverOutput {
    RewardTable reward;
    QTable q;
    PolicyTable expert_policy_estimate;
    Matrix shifted_q;  // empty for IAVI
    bool converged = false;
    int sweeps_used = 0;
    double final_delta = 0.0;
};

/// Weighted, additively smoothed empirical policy. States with no (weighted)
/// visits get uniform rows. Throws when every weight is zero.
PolicyTable estimate_expert_policy(const Demonstrations& demos, int num_states, int num_actions,
                                   double smoothing);

/// Zero-mean minimum-norm solution of the per-state reward system:
/// r(a) = eta(a) - mean_b eta(b).
Vector solve_state_rewards(const Vector& eta);

/// Inverse action-value iteration against a given expert policy (full support required).
SolverOutput iavi_from_policy(const TabularMDP& mdp, const PolicyTable& expert,
                              const SolverConfig& cfg, const SolverInit& init = {});

/// Inverse action-value iteration on (weighted) demonstrations.
SolverOutput iavi(const TabularMDP& mdp, const Demonstrations& demos, const SolverConfig& cfg,
                  const SolverInit& init = {});

/// Model-free inverse Q-learning over replayed transitions.
SolverOutput iql(const Demonstrations& demos, int num_states, int num_actions, double discount,
                 const SolverConfig& cfg, const SolverInit& init = {});

}  // namespace miirl
