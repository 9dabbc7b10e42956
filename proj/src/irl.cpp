#include "miirl/irl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace miirl {

void SolverConfig::validate() const {
    if (!(reward_tol > 0.0)) throw std::invalid_argument("reward_tol must be positive");
    if (max_sweeps < 1) throw std::invalid_argument("max_sweeps must be at least 1");
    if (!(policy_smoothing >= 0.0)) throw std::invalid_argument("policy_smoothing must be >= 0");
    if (iql_epochs < 1) throw std::invalid_argument("iql_epochs must be at least 1");
    for (double lr : {iql_lr_q, iql_lr_r, iql_lr_sh}) {
        if (!(lr > 0.0 && lr <= 1.0)) throw std::invalid_argument("learning rates must lie in (0, 1]");
    }
}

PolicyTable estimate_expert_policy(const Demonstrations& demos, int num_states, int num_actions,
                                   double smoothing) {
    if (!(smoothing >= 0.0)) throw std::invalid_argument("smoothing must be non-negative");
    demos.validate(num_states, num_actions);
    const bool any_weight =
        std::any_of(demos.weights.begin(), demos.weights.end(), [](double w) { return w > 0.0; });
    if (!any_weight) throw std::invalid_argument("all trajectory weights are zero");

    Matrix counts = Matrix::Zero(num_states, num_actions);
    for (std::size_t i = 0; i < demos.size(); ++i) {
        const double w = demos.weights[i];
        if (w == 0.0) continue;
        for (const auto& st : demos.trajectories[i].steps) counts(st.state, st.action) += w;
    }

    PolicyTable p{Matrix(num_states, num_actions)};
    for (int s = 0; s < num_states; ++s) {
        const double total = counts.row(s).sum();
        if (total <= 0.0) {
            p.probs.row(s).setConstant(1.0 / num_actions);
        } else {
            p.probs.row(s) =
                (counts.row(s).array() + smoothing) / (total + smoothing * num_actions);
        }
    }
    return p;
}

Vector solve_state_rewards(const Vector& eta) {
    if (!eta.allFinite()) throw std::invalid_argument("eta has non-finite entries");
    return eta.array() - eta.mean();
}

namespace {

Matrix zero_mean_rows(const Matrix& eta) {
    Matrix r = eta;
    r.colwise() -= eta.rowwise().mean();
    return r;
}

}  // namespace

SolverOutput iavi_from_policy(const TabularMDP& mdp, const PolicyTable& expert,
                              const SolverConfig& cfg, const SolverInit& init) {
    cfg.validate();
    if (!mdp.has_transitions()) throw MissingModelError("IAVI needs a transition model");
    const int S = mdp.num_states();
    const int A = mdp.num_actions();
    if (expert.probs.rows() != S || expert.probs.cols() != A) {
        throw std::invalid_argument("expert policy shape does not match MDP");
    }
    if ((expert.probs.array() <= 0.0).any()) {
        throw std::invalid_argument("IAVI needs a full-support expert policy (use smoothing > 0)");
    }
    const Matrix log_pi = expert.probs.array().log().matrix();

    Matrix r = init.reward ? init.reward->values : Matrix::Zero(S, A);
    Matrix q = init.q ? init.q->values : Matrix::Zero(S, A);

    SolverOutput out;
    for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        const Matrix future = mdp.discounted_expectation(q.rowwise().maxCoeff());
        Matrix r_next = zero_mean_rows(log_pi - future);
        Matrix q_next = r_next + future;
        const double delta = std::max((r_next - r).cwiseAbs().maxCoeff(),
                                      (q_next - q).cwiseAbs().maxCoeff());
        r = std::move(r_next);
        q = std::move(q_next);
        out.sweeps_used = sweep;
        out.final_delta = delta;
        if (delta < cfg.reward_tol) {
            out.converged = true;
            break;
        }
    }
    out.reward.values = std::move(r);
    out.q.values = std::move(q);
    out.expert_policy_estimate = expert;
    return out;
}

SolverOutput iavi(const TabularMDP& mdp, const Demonstrations& demos, const SolverConfig& cfg,
                  const SolverInit& init) {
    cfg.validate();
    if (!mdp.has_transitions()) throw MissingModelError("IAVI needs a transition model");
    auto expert = estimate_expert_policy(demos, mdp.num_states(), mdp.num_actions(),
                                         cfg.policy_smoothing);
    return iavi_from_policy(mdp, expert, cfg, init);
}

SolverOutput iql(const Demonstrations& demos, int num_states, int num_actions, double discount,
                 const SolverConfig& cfg, const SolverInit& init) {
    cfg.validate();
    if (demos.empty() || demos.total_steps() == 0) {
        throw std::invalid_argument("IQL needs at least one demonstrated step");
    }
    if (!(discount >= 0.0 && discount < 1.0)) throw std::invalid_argument("discount must lie in [0, 1)");
    const int S = num_states;
    const int A = num_actions;

    SolverOutput out;
    out.expert_policy_estimate = estimate_expert_policy(demos, S, A, cfg.policy_smoothing);
    const Matrix& pi = out.expert_policy_estimate.probs;
    if ((pi.array() <= 0.0).any()) {
        throw std::invalid_argument("IQL needs a full-support policy estimate (use smoothing > 0)");
    }
    const Matrix log_pi = pi.array().log().matrix();

    Matrix r = init.reward ? init.reward->values : Matrix::Zero(S, A);
    Matrix q = init.q ? init.q->values : Matrix::Zero(S, A);
    Matrix sh = init.shifted_q ? *init.shifted_q : Matrix::Zero(S, A);

    // Weights scale the step sizes relative to the heaviest trajectory.
    const double w_max = *std::max_element(demos.weights.begin(), demos.weights.end());

    struct Transition {
        int state;
        int action;
        int next;  // -1 when the successor is unknown
        double scale;
    };
    std::vector<Transition> replay;
    replay.reserve(demos.total_steps());
    for (std::size_t i = 0; i < demos.size(); ++i) {
        const double scale = demos.weights[i] / w_max;
        if (scale == 0.0) continue;
        const auto& steps = demos.trajectories[i].steps;
        for (std::size_t t = 0; t < steps.size(); ++t) {
            int next = -1;
            if (t + 1 < steps.size()) {
                next = steps[t + 1].state;
            } else if (demos.trajectories[i].next_state) {
                next = *demos.trajectories[i].next_state;
            }
            replay.push_back({steps[t].state, steps[t].action, next, scale});
        }
    }

    Rng rng(cfg.rng_seed);
    std::vector<std::size_t> order(replay.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    Vector eta(A);
    for (int epoch = 1; epoch <= cfg.iql_epochs; ++epoch) {
        if (cfg.iql_shuffle) std::shuffle(order.begin(), order.end(), rng);
        const Matrix r_start = r;
        const Matrix q_start = q;
        const Matrix sh_start = sh;
        for (std::size_t idx : order) {
            const auto& tr = replay[idx];
            const int s = tr.state;
            if (tr.next >= 0) {
                const double target = discount * q.row(tr.next).maxCoeff();
                sh(s, tr.action) += cfg.iql_lr_sh * tr.scale * (target - sh(s, tr.action));
            }
            eta = log_pi.row(s) - sh.row(s);
            const Vector target_r = solve_state_rewards(eta);
            r.row(s) += cfg.iql_lr_r * tr.scale * (target_r.transpose() - r.row(s));
            q.row(s) += cfg.iql_lr_q * tr.scale * (r.row(s) + sh.row(s) - q.row(s));
        }
        out.sweeps_used = epoch;
        out.final_delta = std::max({(r - r_start).cwiseAbs().maxCoeff(), (q - q_start).cwiseAbs().maxCoeff(),
                                    (sh - sh_start).cwiseAbs().maxCoeff()});
        if (out.final_delta < cfg.reward_tol) {
            out.converged = true;
            break;
        }
    }
    out.reward.values = std::move(r);
    out.q.values = std::move(q);
    out.shifted_q = std::move(sh);
    return out;
}

}  // namespace miirl
