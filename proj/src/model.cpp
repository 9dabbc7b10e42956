#include "miirl/model.hpp"

#include "miirl/parallel.hpp"

#include <array>

namespace miirl {

namespace {

constexpr std::array<std::pair<Algorithm, std::string_view>, 6> kAlgorithmNames{{
    {Algorithm::iavi, "iavi"},
    {Algorithm::iql, "iql"},
    {Algorithm::lv_iavi, "lv-iavi"},
    {Algorithm::lv_iql, "lv-iql"},
    {Algorithm::lmv_iavi, "lmv-iavi"},
    {Algorithm::lmv_iql, "lmv-iql"},
}};

}  // namespace

std::string_view to_string(Algorithm algo) {
    for (const auto& [a, name] : kAlgorithmNames) {
        if (a == algo) return name;
    }
    return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
    for (const auto& [a, n] : kAlgorithmNames) {
        if (n == name) return a;
    }
    throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

SolverKind solver_of(Algorithm algo) {
    switch (algo) {
        case Algorithm::iavi:
        case Algorithm::lv_iavi:
        case Algorithm::lmv_iavi:
            return SolverKind::iavi;
        default:
            return SolverKind::iql;
    }
}

bool is_markov(Algorithm algo) { return algo == Algorithm::lmv_iavi || algo == Algorithm::lmv_iql; }

bool is_single(Algorithm algo) { return algo == Algorithm::iavi || algo == Algorithm::iql; }

void FitSpec::validate() const {
    if (num_intentions < 1) throw std::invalid_argument("K must be at least 1");
    if (is_single(algorithm) && num_intentions != 1) {
        throw std::invalid_argument("single-intention algorithms require K = 1");
    }
    if (restarts < 1) throw std::invalid_argument("restart count must be at least 1");
    if (em.solver != solver_of(algorithm)) {
        throw std::invalid_argument("EM solver does not match the algorithm");
    }
}

BernoulliMixture FittedModel::bernoulli() const { return {prior, rewards, qs}; }

MarkovMixture FittedModel::markov() const {
    return {prior, trans.size() > 0 ? trans : Matrix::Ones(1, 1), rewards, qs};
}

namespace {

const Demonstrations& prepared(const FittedModel& model, const Demonstrations& demos,
                               Demonstrations& storage) {
    if (!model.per_step_switching) return demos;
    storage = split_into_steps(demos);
    return storage;
}

}  // namespace

FittedModel fit_model(const FitSpec& spec, const Demonstrations& demos, const TabularMDP& mdp,
                      std::uint64_t seed, const FittedModel* warm_start) {
    spec.validate();
    FittedModel model;
    model.algorithm = spec.algorithm;
    model.per_step_switching = spec.per_step_switching;
    Demonstrations split;
    const Demonstrations& data = prepared(model, demos, split);
    Rng rng(seed);
    const int K = spec.num_intentions;

    if (warm_start && warm_start->num_intentions() != K) {
        throw std::invalid_argument("warm-start model has a different number of intentions");
    }

    if (is_single(spec.algorithm)) {
        SolverInit init;
        if (warm_start) {
            init.reward = warm_start->rewards.front();
            init.q = warm_start->qs.front();
        }
        auto out = run_solver(spec.em.solver, mdp, data, spec.em.solver_cfg, init);
        model.prior = Vector::Ones(1);
        model.rewards = {std::move(out.reward)};
        model.qs = {std::move(out.q)};
        model.posteriors = Matrix::Ones(static_cast<Eigen::Index>(data.size()), 1);
        const Matrix ll = trajectory_log_likelihoods(data, model.qs);
        model.train_ll = mixture_log_likelihood(ll, model.prior, data.weights);
        model.trace.log_likelihood = {model.train_ll};
        model.trace.reward_delta = {out.final_delta};
        model.trace.posterior_delta = {0.0};
        model.trace.iterations = 1;
        model.trace.converged = out.converged;
    } else if (is_markov(spec.algorithm)) {
        std::optional<MarkovMixture> start;
        if (warm_start) start = warm_start->markov();
        auto fit = lmv_fit(data, K, mdp, spec.em, rng, start);
        model.prior = fit.mixture.pi0;
        model.trans = fit.mixture.trans;
        model.rewards = std::move(fit.mixture.rewards);
        model.qs = std::move(fit.mixture.qs);
        model.posteriors = fit.trajectory_posteriors(data.size());
        model.trace = std::move(fit.trace);
        model.train_ll = model.trace.log_likelihood.back();
    } else {
        std::optional<BernoulliMixture> start;
        if (warm_start) start = warm_start->bernoulli();
        auto fit = lv_fit(data, K, mdp, spec.em, rng, start);
        model.prior = fit.mixture.nu;
        model.rewards = std::move(fit.mixture.rewards);
        model.qs = std::move(fit.mixture.qs);
        model.posteriors = std::move(fit.responsibilities.zeta);
        model.trace = std::move(fit.trace);
        model.train_ll = model.trace.log_likelihood.back();
    }
    model.restart_seeds = {seed};
    model.selected_restart = 0;
    return model;
}

FittedModel fit_with_restarts(const FitSpec& spec, const Demonstrations& demos,
                              const TabularMDP& mdp, std::uint64_t master_seed, int jobs,
                              const FittedModel* warm_start) {
    spec.validate();
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(spec.restarts));
    for (std::size_t r = 0; r < seeds.size(); ++r) seeds[r] = derive_seed(master_seed, r);

    // Deterministic fits (single solvers, warm starts, K = 1) give identical restarts.
    const bool deterministic = is_single(spec.algorithm) || warm_start != nullptr ||
                               spec.num_intentions == 1;
    const std::size_t runs = deterministic ? 1 : seeds.size();
    std::vector<std::optional<FittedModel>> fits(runs);
    parallel_for(runs, jobs, [&](std::size_t r) {
        fits[r] = fit_model(spec, demos, mdp, seeds[r], warm_start);
    });

    std::size_t best = 0;
    for (std::size_t r = 1; r < runs; ++r) {
        if (fits[r]->train_ll > fits[best]->train_ll) best = r;
    }
    FittedModel out = std::move(*fits[best]);
    out.restart_seeds = seeds;
    out.selected_restart = static_cast<int>(best);
    return out;
}

double model_log_likelihood(const FittedModel& model, const Demonstrations& demos) {
    Demonstrations split;
    const Demonstrations& data = prepared(model, demos, split);
    if (is_markov(model.algorithm)) return markov_log_likelihood(data, model.markov());
    return mixture_log_likelihood(trajectory_log_likelihoods(data, model.qs), model.prior,
                                  data.weights);
}

Matrix model_posteriors(const FittedModel& model, const Demonstrations& demos) {
    Demonstrations split;
    const Demonstrations& data = prepared(model, demos, split);
    const Matrix ll = trajectory_log_likelihoods(data, model.qs);
    if (!is_markov(model.algorithm)) {
        return responsibilities_from_log_likelihoods(ll, model.prior).zeta;
    }
    const auto mixture = model.markov();
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(data.size()), mixture.pi0.size());
    for (const auto& session : group_sessions(data)) {
        const Matrix e = session_log_emissions(ll, session, data.weights);
        const auto post = forward_backward(e, mixture.pi0, mixture.trans);
        for (std::size_t j = 0; j < session.members.size(); ++j) {
            out.row(static_cast<Eigen::Index>(session.members[j])) =
                post.gamma.row(static_cast<Eigen::Index>(j));
        }
    }
    return out;
}

}  // namespace miirl
