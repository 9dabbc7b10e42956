#include "miirl/em.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace miirl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& v) {
    const double m = v.maxCoeff();
    if (m == kNegInf) return kNegInf;
    return m + std::log((v.array() - m).exp().sum());
}

void check_fit_args(const Demonstrations& demos, int num_intentions, const TabularMDP& mdp,
                    const EmConfig& cfg) {
    if (num_intentions < 1) throw std::invalid_argument("number of intentions must be >= 1");
    if (demos.empty()) throw std::invalid_argument("no demonstrations to fit");
    if (cfg.solver == SolverKind::iavi && !mdp.has_transitions()) {
        throw std::invalid_argument("IAVI M-steps need an MDP with a transition model");
    }
    if (cfg.max_iter < 1) throw std::invalid_argument("EM iteration cap must be >= 1");
    if (!(cfg.tol > 0.0)) throw std::invalid_argument("EM tolerance must be positive");
    cfg.solver_cfg.validate();
    demos.validate(mdp.num_states(), mdp.num_actions());
}

/// Per-intention solver state carried between M-steps.
struct Component {
    RewardTable reward;
    QTable q;
    std::optional<Matrix> shifted_q;
};

std::vector<Component> make_components(std::vector<RewardTable> rewards, std::vector<QTable> qs) {
    std::vector<Component> comps(rewards.size());
    for (std::size_t k = 0; k < comps.size(); ++k) {
        comps[k].reward = std::move(rewards[k]);
        comps[k].q = std::move(qs[k]);
    }
    return comps;
}

std::vector<QTable> q_tables(const std::vector<Component>& comps) {
    std::vector<QTable> qs;
    qs.reserve(comps.size());
    for (const auto& c : comps) qs.push_back(c.q);
    return qs;
}

/// Solves every intention's weighted IRL problem; returns max |delta r|.
double m_step_rewards(std::vector<Component>& comps, const Demonstrations& demos,
                      const Matrix& posteriors, const TabularMDP& mdp, const EmConfig& cfg) {
    double delta = 0.0;
    for (std::size_t k = 0; k < comps.size(); ++k) {
        Demonstrations weighted = demos;
        double total = 0.0;
        for (std::size_t i = 0; i < demos.size(); ++i) {
            weighted.weights[i] = demos.weights[i] * posteriors(static_cast<Eigen::Index>(i),
                                                                static_cast<Eigen::Index>(k));
            total += weighted.weights[i];
        }
        // An intention that explains no trajectory keeps its previous reward.
        if (!(total > 0.0)) continue;
        SolverInit init;
        if (cfg.warm_start) {
            init.reward = comps[k].reward;
            init.q = comps[k].q;
            init.shifted_q = comps[k].shifted_q;
        }
        auto out = run_solver(cfg.solver, mdp, weighted, cfg.solver_cfg, init);
        delta = std::max(delta, (out.reward.values - comps[k].reward.values).cwiseAbs().maxCoeff());
        comps[k].reward = std::move(out.reward);
        comps[k].q = std::move(out.q);
        if (out.shifted_q.size() > 0) comps[k].shifted_q = std::move(out.shifted_q);
    }
    return delta;
}

/// Random initial components. IAVI fits derive Q from the initial reward; IQL keeps the
/// independent random Q table.
std::vector<Component> initial_components(int K, const TabularMDP& mdp, const EmConfig& cfg,
                                          Rng& rng) {
    auto init = init_rewards(K, mdp.num_states(), mdp.num_actions(), rng, cfg.init_reward_sd,
                             cfg.init_q_sd);
    if (cfg.solver == SolverKind::iavi) {
        for (int k = 0; k < K; ++k) init.qs[k] = q_star(mdp, init.rewards[k]).q;
    }
    return make_components(std::move(init.rewards), std::move(init.qs));
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.size() == 0 || a.rows() != b.rows() || a.cols() != b.cols()) return kInf;
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

SolverOutput run_solver(SolverKind kind, const TabularMDP& mdp, const Demonstrations& demos,
                        const SolverConfig& cfg, const SolverInit& init) {
    if (kind == SolverKind::iavi) return iavi(mdp, demos, cfg, init);
    return iql(demos, mdp.num_states(), mdp.num_actions(), mdp.discount(), cfg, init);
}

Matrix trajectory_log_likelihoods(const Demonstrations& demos, const std::vector<QTable>& qs) {
    Matrix out(static_cast<Eigen::Index>(demos.size()), static_cast<Eigen::Index>(qs.size()));
    for (std::size_t k = 0; k < qs.size(); ++k) {
        const Matrix log_pi = log_boltzmann(qs[k].values);
        for (std::size_t i = 0; i < demos.size(); ++i) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                trajectory_log_likelihood_log(log_pi, demos.trajectories[i]);
        }
    }
    return out;
}

Responsibilities responsibilities_from_log_likelihoods(const Matrix& log_lik, const Vector& nu) {
    if (log_lik.cols() != nu.size()) throw std::invalid_argument("intention count mismatch");
    const Eigen::RowVectorXd log_nu = nu.array().log().matrix().transpose();
    Responsibilities out{Matrix(log_lik.rows(), log_lik.cols())};
    for (Eigen::Index i = 0; i < log_lik.rows(); ++i) {
        Eigen::RowVectorXd v = log_lik.row(i) + log_nu;
        const double m = v.maxCoeff();
        if (m == kNegInf || std::isnan(m)) {
            out.zeta.row(i) = nu.transpose();
            continue;
        }
        Eigen::RowVectorXd e = (v.array() - m).exp();
        out.zeta.row(i) = e / e.sum();
    }
    return out;
}

Responsibilities compute_responsibilities(const Demonstrations& demos,
                                          const BernoulliMixture& mixture) {
    return responsibilities_from_log_likelihoods(trajectory_log_likelihoods(demos, mixture.qs),
                                                 mixture.nu);
}

double mixture_log_likelihood(const Matrix& log_lik, const Vector& nu,
                              const std::vector<double>& weights) {
    const Eigen::RowVectorXd log_nu = nu.array().log().matrix().transpose();
    double total = 0.0;
    for (Eigen::Index i = 0; i < log_lik.rows(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)];
        if (w == 0.0) continue;
        total += w * log_sum_exp(log_lik.row(i) + log_nu);
    }
    return total;
}

std::pair<Vector, Matrix> init_markov_params(int num_intentions, Rng& rng, TransitionNoise noise,
                                             double noise_sd) {
    if (num_intentions < 1) throw std::invalid_argument("number of intentions must be >= 1");
    const int K = num_intentions;
    Vector pi0 = Vector::Constant(K, 1.0 / K);
    Matrix trans = 0.95 * Matrix::Identity(K, K);
    if (K == 1) return {pi0, Matrix::Ones(1, 1)};

    std::normal_distribution<double> gauss(0.0, noise_sd);
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < K; ++l) {
            if (noise == TransitionNoise::all_entries || k == l) trans(k, l) += gauss(rng);
        }
    }
    // Negative draws are reflected so no transition starts at exactly zero.
    trans = trans.cwiseAbs();
    for (int k = 0; k < K; ++k) {
        const double total = trans.row(k).sum();
        if (total > 0.0) {
            trans.row(k) /= total;
        } else {
            trans.row(k).setConstant(1.0 / K);
        }
    }
    return {pi0, trans};
}

InitialRewards init_rewards(int num_intentions, int num_states, int num_actions, Rng& rng,
                            double reward_sd, double q_sd) {
    InitialRewards out;
    std::normal_distribution<double> r_dist(0.0, reward_sd);
    std::normal_distribution<double> q_dist(0.0, q_sd);
    for (int k = 0; k < num_intentions; ++k) {
        Matrix r(num_states, num_actions);
        for (Eigen::Index j = 0; j < r.size(); ++j) r.data()[j] = r_dist(rng);
        Matrix q(num_states, num_actions);
        for (Eigen::Index j = 0; j < q.size(); ++j) q.data()[j] = q_dist(rng);
        out.rewards.push_back({std::move(r)});
        out.qs.push_back({std::move(q)});
    }
    return out;
}

std::vector<int> map_assignment(const Matrix& posteriors) {
    std::vector<int> labels(static_cast<std::size_t>(posteriors.rows()), 0);
    for (Eigen::Index i = 0; i < posteriors.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < posteriors.cols(); ++k) {
            if (posteriors(i, k) > posteriors(i, best)) best = k;
        }
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

LvFit lv_fit(const Demonstrations& demos, int num_intentions, const TabularMDP& mdp,
             const EmConfig& cfg, Rng& rng, const std::optional<BernoulliMixture>& start) {
    check_fit_args(demos, num_intentions, mdp, cfg);
    const int K = num_intentions;
    const auto N = static_cast<Eigen::Index>(demos.size());
    LvFit fit;

    // One intention: responsibilities are identically 1, so a single solver run is the fixed point.
    if (K == 1 && !start) {
        auto out = run_solver(cfg.solver, mdp, demos, cfg.solver_cfg);
        fit.mixture.nu = Vector::Ones(1);
        fit.mixture.rewards = {std::move(out.reward)};
        fit.mixture.qs = {std::move(out.q)};
        const Matrix ll = trajectory_log_likelihoods(demos, fit.mixture.qs);
        fit.responsibilities.zeta = Matrix::Ones(N, 1);
        fit.trace.log_likelihood = {mixture_log_likelihood(ll, fit.mixture.nu, demos.weights)};
        fit.trace.reward_delta = {out.final_delta};
        fit.trace.posterior_delta = {0.0};
        fit.trace.iterations = 1;
        fit.trace.converged = out.converged;
        return fit;
    }

    Vector nu;
    std::vector<Component> comps;
    if (start) {
        if (start->num_intentions() != K) throw std::invalid_argument("warm start has wrong K");
        nu = start->nu;
        comps = make_components(start->rewards, start->qs);
    } else {
        nu = Vector::Constant(K, 1.0 / K);
        comps = initial_components(K, mdp, cfg, rng);
    }

    const double weight_total =
        std::accumulate(demos.weights.begin(), demos.weights.end(), 0.0);
    Matrix prev_zeta;
    double reward_delta = kInf;
    for (int iter = 0;; ++iter) {
        // E-step
        const Matrix ll = trajectory_log_likelihoods(demos, q_tables(comps));
        Responsibilities resp = responsibilities_from_log_likelihoods(ll, nu);
        const double posterior_delta = max_abs_diff(resp.zeta, prev_zeta);
        fit.trace.log_likelihood.push_back(mixture_log_likelihood(ll, nu, demos.weights));
        fit.trace.reward_delta.push_back(reward_delta);
        fit.trace.posterior_delta.push_back(posterior_delta);
        prev_zeta = resp.zeta;
        fit.responsibilities = std::move(resp);
        if (posterior_delta < cfg.tol && reward_delta < cfg.tol) {
            fit.trace.converged = true;
            break;
        }
        if (iter == cfg.max_iter) break;

        // M-step
        for (int k = 0; k < K; ++k) {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < N; ++i) {
                acc += demos.weights[static_cast<std::size_t>(i)] * prev_zeta(i, k);
            }
            nu(k) = acc / weight_total;
        }
        nu /= nu.sum();
        reward_delta = m_step_rewards(comps, demos, prev_zeta, mdp, cfg);
        fit.trace.iterations = iter + 1;
    }

    fit.mixture.nu = nu;
    for (auto& c : comps) {
        fit.mixture.rewards.push_back(std::move(c.reward));
        fit.mixture.qs.push_back(std::move(c.q));
    }
    return fit;
}

std::vector<Session> group_sessions(const Demonstrations& demos) {
    std::vector<Session> sessions;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < demos.size(); ++i) {
        const auto& name = demos.trajectories[i].session;
        auto [it, inserted] = index.try_emplace(name, sessions.size());
        if (inserted) sessions.push_back({name, {}});
        sessions[it->second].members.push_back(i);
    }
    return sessions;
}

Demonstrations split_into_steps(const Demonstrations& demos) {
    Demonstrations out;
    for (std::size_t i = 0; i < demos.size(); ++i) {
        const auto& traj = demos.trajectories[i];
        for (std::size_t t = 0; t < traj.steps.size(); ++t) {
            Trajectory one;
            one.id = traj.id + "#" + std::to_string(t);
            one.session = traj.session;
            one.steps = {traj.steps[t]};
            if (t + 1 < traj.steps.size()) {
                one.next_state = traj.steps[t + 1].state;
            } else {
                one.next_state = traj.next_state;
            }
            out.add(std::move(one), demos.weights[i]);
        }
    }
    return out;
}

Matrix LmvFit::trajectory_posteriors(std::size_t num_trajectories) const {
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(num_trajectories), mixture.pi0.size());
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        for (std::size_t j = 0; j < sessions[s].members.size(); ++j) {
            out.row(static_cast<Eigen::Index>(sessions[s].members[j])) =
                posteriors[s].gamma.row(static_cast<Eigen::Index>(j));
        }
    }
    return out;
}

Matrix session_log_emissions(const Matrix& log_lik, const Session& session,
                             const std::vector<double>& weights) {
    Matrix e(static_cast<Eigen::Index>(session.members.size()), log_lik.cols());
    for (std::size_t j = 0; j < session.members.size(); ++j) {
        const auto i = session.members[j];
        const auto row = static_cast<Eigen::Index>(i);
        const double w = weights.empty() ? 1.0 : weights[i];
        if (w == 1.0) {
            e.row(static_cast<Eigen::Index>(j)) = log_lik.row(row);
        } else if (w == 0.0) {
            e.row(static_cast<Eigen::Index>(j)).setZero();
        } else {
            e.row(static_cast<Eigen::Index>(j)) = w * log_lik.row(row);
        }
    }
    return e;
}

double markov_log_likelihood(const Demonstrations& demos, const MarkovMixture& mixture) {
    const Matrix ll = trajectory_log_likelihoods(demos, mixture.qs);
    double total = 0.0;
    for (const auto& session : group_sessions(demos)) {
        total += forward_backward(session_log_emissions(ll, session, demos.weights), mixture.pi0,
                                  mixture.trans)
                     .total_ll;
    }
    return total;
}

LmvFit lmv_fit(const Demonstrations& demos, int num_intentions, const TabularMDP& mdp,
               const EmConfig& cfg, Rng& rng, const std::optional<MarkovMixture>& start) {
    check_fit_args(demos, num_intentions, mdp, cfg);
    const int K = num_intentions;
    LmvFit fit;
    fit.sessions = group_sessions(demos);

    std::vector<Component> comps;
    if (K == 1 && !start) {
        auto out = run_solver(cfg.solver, mdp, demos, cfg.solver_cfg);
        fit.mixture.pi0 = Vector::Ones(1);
        fit.mixture.trans = Matrix::Ones(1, 1);
        fit.mixture.rewards = {std::move(out.reward)};
        fit.mixture.qs = {std::move(out.q)};
        const Matrix ll = trajectory_log_likelihoods(demos, fit.mixture.qs);
        double total = 0.0;
        for (const auto& session : fit.sessions) {
            fit.posteriors.push_back(forward_backward(session_log_emissions(ll, session, demos.weights),
                                                      fit.mixture.pi0, fit.mixture.trans));
            total += fit.posteriors.back().total_ll;
        }
        fit.trace.log_likelihood = {total};
        fit.trace.reward_delta = {out.final_delta};
        fit.trace.posterior_delta = {0.0};
        fit.trace.iterations = 1;
        fit.trace.converged = out.converged;
        return fit;
    }

    Vector pi0;
    Matrix trans;
    if (start) {
        if (start->num_intentions() != K) throw std::invalid_argument("warm start has wrong K");
        pi0 = start->pi0;
        trans = start->trans;
        comps = make_components(start->rewards, start->qs);
    } else {
        std::tie(pi0, trans) =
            init_markov_params(K, rng, cfg.transition_noise, cfg.transition_noise_sd);
        comps = initial_components(K, mdp, cfg, rng);
    }

    Matrix prev_gamma;
    double reward_delta = kInf;
    for (int iter = 0;; ++iter) {
        // E-step
        const Matrix ll = trajectory_log_likelihoods(demos, q_tables(comps));
        fit.posteriors.clear();
        double total = 0.0;
        for (const auto& session : fit.sessions) {
            fit.posteriors.push_back(
                forward_backward(session_log_emissions(ll, session, demos.weights), pi0, trans));
            total += fit.posteriors.back().total_ll;
        }
        fit.mixture.pi0 = pi0;
        fit.mixture.trans = trans;
        const Matrix gamma = fit.trajectory_posteriors(demos.size());
        const double posterior_delta = max_abs_diff(gamma, prev_gamma);
        fit.trace.log_likelihood.push_back(total);
        fit.trace.reward_delta.push_back(reward_delta);
        fit.trace.posterior_delta.push_back(posterior_delta);
        prev_gamma = gamma;
        if (posterior_delta < cfg.tol && reward_delta < cfg.tol) {
            fit.trace.converged = true;
            break;
        }
        if (iter == cfg.max_iter) break;

        // M-step: pooled sufficient statistics across sessions.
        Vector pi_acc = Vector::Zero(K);
        Matrix xi_acc = Matrix::Zero(K, K);
        for (const auto& post : fit.posteriors) {
            pi_acc += post.gamma.row(0).transpose();
            for (const auto& x : post.xi) xi_acc += x;
        }
        pi0 = pi_acc / static_cast<double>(fit.posteriors.size());
        pi0 /= pi0.sum();
        for (int k = 0; k < K; ++k) {
            const double denom = xi_acc.row(k).sum();
            if (denom > 0.0) trans.row(k) = xi_acc.row(k) / denom;
        }
        reward_delta = m_step_rewards(comps, demos, gamma, mdp, cfg);
        fit.trace.iterations = iter + 1;
    }

    for (auto& c : comps) {
        fit.mixture.rewards.push_back(std::move(c.reward));
        fit.mixture.qs.push_back(std::move(c.q));
    }
    return fit;
}

}  // namespace miirl
