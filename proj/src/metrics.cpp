#include "miirl/metrics.hpp"

#include "miirl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace miirl {

double evd(const TabularMDP& mdp, const RewardTable& true_reward, const PolicyTable& expert_policy,
           const RewardTable& learnt_reward, double tol) {
    if (!mdp.has_transitions()) throw MissingModelError("EVD needs a transition model");
    const Vector v_true = policy_state_values(mdp, true_reward, expert_policy, tol);
    const PolicyTable learnt = boltzmann_policy(q_star(mdp, learnt_reward, tol).q);
    const Vector v_learnt = policy_state_values(mdp, true_reward, learnt, tol);
    return (v_true - v_learnt).array().square().mean();
}

double bic(double total_ll, long long num_params, long long num_obs) {
    if (num_obs < 1) throw std::invalid_argument("BIC needs at least one observation");
    return static_cast<double>(num_params) * std::log(static_cast<double>(num_obs)) -
           2.0 * total_ll;
}

long long count_parameters(ModelKind kind, int num_intentions, int num_states, int num_actions) {
    const long long K = num_intentions;
    long long p = K * num_states * num_actions + (K - 1);
    if (kind == ModelKind::markov) p += K * (K - 1);
    return p;
}

ModelKind model_kind(Algorithm algo) {
    return is_markov(algo) ? ModelKind::markov : ModelKind::bernoulli;
}

Alignment cluster_alignment(const std::vector<int>& predicted, const std::vector<int>& truth,
                            int num_intentions) {
    if (predicted.size() != truth.size()) throw std::invalid_argument("label vectors differ in length");
    if (num_intentions < 1) throw std::invalid_argument("K must be at least 1");
    const int K = num_intentions;
    Matrix counts = Matrix::Zero(K, K);
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] < 0 || predicted[i] >= K || truth[i] < 0 || truth[i] >= K) {
            throw std::out_of_range("label out of range at index " + std::to_string(i));
        }
        counts(predicted[i], truth[i]) += 1.0;
    }
    std::vector<int> perm(static_cast<std::size_t>(K));
    std::iota(perm.begin(), perm.end(), 0);
    Alignment best{perm, -1.0};
    double best_hits = -1.0;
    do {
        double hits = 0.0;
        for (int k = 0; k < K; ++k) hits += counts(k, perm[static_cast<std::size_t>(k)]);
        if (hits > best_hits) {
            best_hits = hits;
            best.permutation = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    best.accuracy = predicted.empty() ? 1.0 : best_hits / static_cast<double>(predicted.size());
    return best;
}

double random_policy_log_likelihood(const Demonstrations& demos, int num_actions) {
    if (num_actions < 1) throw std::invalid_argument("action count must be positive");
    double steps = 0.0;
    for (std::size_t i = 0; i < demos.size(); ++i) {
        steps += demos.weights[i] * static_cast<double>(demos.trajectories[i].steps.size());
    }
    return steps * std::log(1.0 / num_actions);
}

std::vector<int> partition_sessions(std::size_t num_sessions, int n_folds, std::uint64_t seed) {
    if (n_folds < 1) throw std::invalid_argument("fold count must be at least 1");
    if (num_sessions < static_cast<std::size_t>(n_folds)) {
        throw std::invalid_argument("fewer sessions (" + std::to_string(num_sessions) +
                                    ") than folds (" + std::to_string(n_folds) + ")");
    }
    std::vector<std::size_t> order(num_sessions);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    // Fisher-Yates with explicit draws so the result does not depend on the library's shuffle.
    for (std::size_t i = num_sessions; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    std::vector<int> fold(num_sessions);
    for (std::size_t j = 0; j < num_sessions; ++j) {
        fold[order[j]] = static_cast<int>(j % static_cast<std::size_t>(n_folds));
    }
    return fold;
}

std::pair<double, double> mean_and_se(const std::vector<double>& values) {
    if (values.empty()) return {0.0, 0.0};
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

CrossValidation cross_validate(const Demonstrations& demos, int n_folds, const FitSpec& spec,
                               const TabularMDP& mdp, std::uint64_t master_seed, int jobs) {
    spec.validate();
    const auto sessions = group_sessions(demos);
    const auto fold_of = partition_sessions(sessions.size(), n_folds, master_seed);

    CrossValidation cv;
    cv.folds.resize(static_cast<std::size_t>(n_folds));
    parallel_for(cv.folds.size(), jobs, [&](std::size_t f) {
        FoldReport& rep = cv.folds[f];
        rep.fold = static_cast<int>(f);
        rep.degenerate = n_folds == 1;
        rep.seed = derive_seed(master_seed, f + 1);
        Demonstrations train;
        Demonstrations test;
        for (std::size_t s = 0; s < sessions.size(); ++s) {
            const bool held_out = rep.degenerate || fold_of[s] == static_cast<int>(f);
            const bool training = rep.degenerate || !held_out;
            if (held_out) rep.test_sessions.push_back(sessions[s].name);
            if (training) rep.train_sessions.push_back(sessions[s].name);
            for (auto i : sessions[s].members) {
                if (held_out) test.add(demos.trajectories[i], demos.weights[i]);
                if (training) train.add(demos.trajectories[i], demos.weights[i]);
            }
        }
        rep.model = fit_with_restarts(spec, train, mdp, rep.seed, 1);
        rep.train_ll = rep.model.train_ll;
        rep.test_ll = model_log_likelihood(rep.model, test);
        rep.train_steps = train.total_steps();
        rep.test_steps = test.total_steps();
        rep.bic = bic(rep.train_ll,
                      count_parameters(model_kind(spec.algorithm), spec.num_intentions,
                                       mdp.num_states(), mdp.num_actions()),
                      static_cast<long long>(std::max<std::size_t>(rep.train_steps, 1)));
    });

    std::vector<double> train_ll;
    std::vector<double> test_ll;
    for (const auto& rep : cv.folds) {
        train_ll.push_back(rep.train_ll);
        test_ll.push_back(rep.test_ll);
    }
    std::tie(cv.mean_train_ll, cv.se_train_ll) = mean_and_se(train_ll);
    std::tie(cv.mean_test_ll, cv.se_test_ll) = mean_and_se(test_ll);
    return cv;
}

}  // namespace miirl
