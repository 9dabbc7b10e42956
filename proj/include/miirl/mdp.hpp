#pragma once

#include "miirl/types.hpp"

#include <span>

namespace miirl {

/**
 * Finite MDP with an optional dense transition model.
 *
 * Transitions are stored as a (|S|*|A|) x |S| row-major matrix whose row
 * s*|A| + a holds T(s, a, .). An MDP built without transitions is usable by the
 * model-free routines only.
 */
class TabularMDP {
public:
    TabularMDP(int num_states, int num_actions, double discount);
    TabularMDP(int num_states, int num_actions, double discount, Matrix transitions);

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    double discount() const { return discount_; }
    bool has_transitions() const { return transitions_.has_value(); }

    /// Throws MissingModelError when the MDP is model-free.
    const Matrix& transitions() const;
    double transition(int state, int action, int next_state) const;

    int row(int state, int action) const { return state * num_actions_ + action; }

    /// Returns gamma * sum_s' T(s, a, s') v(s') as an |S| x |A| matrix.
    Matrix discounted_expectation(const Vector& values) const;

private:
    int num_states_;
    int num_actions_;
    double discount_;
    std::optional<Matrix> transitions_;
};

struct QStarResult {
    QTable q;
    bool converged = false;
    int iterations = 0;
    /// Bellman optimality residual of the returned table.
    double residual = 0.0;
};

/// Optimal action values by value iteration.
QStarResult q_star(const TabularMDP& mdp, const RewardTable& reward, double tol = 1e-10,
                   int max_iter = 100000);

/// Row-wise softmax of Q (max-subtracted).
PolicyTable boltzmann_policy(const QTable& q);

/// Row-wise log-softmax of Q; finite wherever Q is finite.
Matrix log_boltzmann(const Matrix& q);

/// One-hot argmax policy; ties go to the lowest action index.
PolicyTable greedy_policy(const QTable& q);

/// Sum of log pi(s, a) over the trajectory. Zero-probability pairs give -infinity.
double trajectory_log_likelihood(const PolicyTable& policy, const Trajectory& traj);

/// Same sum against a precomputed log-policy table.
double trajectory_log_likelihood_log(const Matrix& log_policy, const Trajectory& traj);

/// State values of `policy` under `reward` by iterative policy evaluation.
/// The returned vector is within `tol` of the exact fixed point.
Vector policy_state_values(const TabularMDP& mdp, const RewardTable& reward,
                           const PolicyTable& policy, double tol = 1e-10);

/// Index sampled from a discrete distribution given as (unnormalized-safe) probabilities.
int sample_index(std::span<const double> probs, Rng& rng);

/// Rolls out `policy` for `length` steps from `start_state`.
Trajectory simulate(const TabularMDP& mdp, const PolicyTable& policy, int start_state,
                    int length, Rng& rng);

void validate_policy(const PolicyTable& policy, double tol = 1e-9);

}  // namespace miirl
