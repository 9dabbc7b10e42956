#pragma once

#include "miirl/irl.hpp"

#include <functional>

namespace miirl {

enum class SolverKind { iavi, iql };

/// How the Gaussian perturbation of the initial intention transition matrix is applied.
enum class TransitionNoise {
    all_entries,  ///< every entry of 0.95 I gets noise (default)
    diagonal,     ///< only the diagonal is perturbed
};

struct EmConfig {
    SolverKind solver = SolverKind::iavi;
    SolverConfig solver_cfg{};
    int max_iter = 200;
    /// Convergence threshold on both max |delta r| and max |delta posterior|.
    double tol = 1e-3;
    bool warm_start = true;
    TransitionNoise transition_noise = TransitionNoise::all_entries;
    /// Standard deviation of the initial transition noise (variance 0.05).
    double transition_noise_sd = 0.22360679774997896;
    double init_reward_sd = 0.2;
    double init_q_sd = 5.0;
};

struct BernoulliMixture {
    Vector nu;
    std::vector<RewardTable> rewards;
    std::vector<QTable> qs;

    int num_intentions() const { return static_cast<int>(nu.size()); }
};

struct MarkovMixture {
    Vector pi0;
    Matrix trans;
    std::vector<RewardTable> rewards;
    std::vector<QTable> qs;

    int num_intentions() const { return static_cast<int>(pi0.size()); }
};

/// zeta(i, k): posterior probability that trajectory i came from intention k.
struct Responsibilities {
    Matrix zeta;
};

struct HmmPosteriors {
    Matrix gamma;             ///< N x K smoothed posteriors
    std::vector<Matrix> xi;   ///< N-1 slices; xi[i-1](k, l) = Pr(y_{i-1}=k, y_i=l | data)
    double total_ll = 0.0;
};

struct EmTrace {
    std::vector<double> log_likelihood;
    std::vector<double> reward_delta;
    std::vector<double> posterior_delta;
    int iterations = 0;
    bool converged = false;
};

/// Run the configured single-intention solver. Model-free runs take the discount from `mdp`.
SolverOutput run_solver(SolverKind kind, const TabularMDP& mdp, const Demonstrations& demos,
                        const SolverConfig& cfg, const SolverInit& init = {});

/// log Pr(xi_i | pi_k) for every trajectory and intention (rows: trajectories).
Matrix trajectory_log_likelihoods(const Demonstrations& demos, const std::vector<QTable>& qs);

/// Log-space mixture posteriors; a row whose likelihoods are all -inf falls back to nu.
Responsibilities compute_responsibilities(const Demonstrations& demos,
                                          const BernoulliMixture& mixture);
Responsibilities responsibilities_from_log_likelihoods(const Matrix& log_lik, const Vector& nu);

/// Sum_i w_i log sum_k nu_k Pr(xi_i | pi_k).
double mixture_log_likelihood(const Matrix& log_lik, const Vector& nu,
                              const std::vector<double>& weights);

/// Scaled forward-backward over one ordered sequence of trajectory-level emissions.
HmmPosteriors forward_backward(const Matrix& log_emissions, const Vector& pi0,
                               const Matrix& trans);

std::pair<Vector, Matrix> init_markov_params(int num_intentions, Rng& rng,
                                             TransitionNoise noise = TransitionNoise::all_entries,
                                             double noise_sd = 0.22360679774997896);

struct InitialRewards {
    std::vector<RewardTable> rewards;
    std::vector<QTable> qs;
};

InitialRewards init_rewards(int num_intentions, int num_states, int num_actions, Rng& rng,
                            double reward_sd = 0.2, double q_sd = 5.0);

/// Argmax per row, lowest index on ties.
std::vector<int> map_assignment(const Matrix& posteriors);

struct LvFit {
    BernoulliMixture mixture;
    Responsibilities responsibilities;
    EmTrace trace;
};

struct Session {
    std::string name;
    std::vector<std::size_t> members;  ///< trajectory indices in temporal order
};

/// Groups trajectories by session label, sessions ordered by first appearance.
std::vector<Session> group_sessions(const Demonstrations& demos);

/// Wraps every step as its own one-step trajectory (per-step intention switching).
Demonstrations split_into_steps(const Demonstrations& demos);

struct LmvFit {
    MarkovMixture mixture;
    std::vector<Session> sessions;
    std::vector<HmmPosteriors> posteriors;  ///< one per session
    EmTrace trace;

    /// gamma rows scattered back into trajectory order (N x K).
    Matrix trajectory_posteriors(std::size_t num_trajectories) const;
};

/// Log-emission rows of one session, tempered by trajectory weights (weight 0 = uninformative).
Matrix session_log_emissions(const Matrix& log_lik, const Session& session,
                             const std::vector<double>& weights);

/// `start`, when given, replaces the random initialization (warm start from a previous fit).
LvFit lv_fit(const Demonstrations& demos, int num_intentions, const TabularMDP& mdp,
             const EmConfig& cfg, Rng& rng, const std::optional<BernoulliMixture>& start = {});

LmvFit lmv_fit(const Demonstrations& demos, int num_intentions, const TabularMDP& mdp,
               const EmConfig& cfg, Rng& rng, const std::optional<MarkovMixture>& start = {});

/// Total log-likelihood of a Markov mixture on demonstrations (sum over sessions).
double markov_log_likelihood(const Demonstrations& demos, const MarkovMixture& mixture);

}  // namespace miirl
