#include "miirl/mdp.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

namespace miirl {

Demonstrations::Demonstrations(std::vector<Trajectory> trajs, std::vector<double> w)
    : trajectories(std::move(trajs)), weights(std::move(w)) {
    if (weights.size() != trajectories.size()) {
        throw std::invalid_argument("weights length does not match trajectory count");
    }
}

std::size_t Demonstrations::total_steps() const {
    std::size_t n = 0;
    for (const auto& t : trajectories) n += t.steps.size();
    return n;
}

void Demonstrations::add(Trajectory traj, double weight) {
    trajectories.push_back(std::move(traj));
    weights.push_back(weight);
}

void Demonstrations::validate(int num_states, int num_actions) const {
    if (weights.size() != trajectories.size()) {
        throw std::invalid_argument("weights length does not match trajectory count");
    }
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
            throw std::invalid_argument("trajectory '" + trajectories[i].id +
                                        "' has a negative or non-finite weight");
        }
        for (const auto& st : trajectories[i].steps) {
            if (st.state < 0 || st.state >= num_states || st.action < 0 ||
                st.action >= num_actions) {
                throw std::invalid_argument("trajectory '" + trajectories[i].id +
                                            "' has an out-of-range state or action");
            }
        }
        if (auto nx = trajectories[i].next_state; nx && (*nx < 0 || *nx >= num_states)) {
            throw std::invalid_argument("trajectory '" + trajectories[i].id +
                                        "' has an out-of-range next state");
        }
    }
}

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw std::invalid_argument(std::string(what) + " has non-finite entries");
}

TabularMDP::TabularMDP(int num_states, int num_actions, double discount)
    : num_states_(num_states), num_actions_(num_actions), discount_(discount) {
    if (num_states <= 0 || num_actions <= 0) {
        throw std::invalid_argument("state and action counts must be positive");
    }
    if (!(discount >= 0.0 && discount < 1.0)) {
        throw std::invalid_argument("discount must lie in [0, 1)");
    }
}

TabularMDP::TabularMDP(int num_states, int num_actions, double discount, Matrix transitions)
    : TabularMDP(num_states, num_actions, discount) {
    if (transitions.rows() != static_cast<Eigen::Index>(num_states) * num_actions ||
        transitions.cols() != num_states) {
        throw std::invalid_argument("transition matrix must be (|S|*|A|) x |S|");
    }
    if ((transitions.array() < 0.0).any() || !transitions.allFinite()) {
        throw std::invalid_argument("transition probabilities must be finite and non-negative");
    }
    for (Eigen::Index r = 0; r < transitions.rows(); ++r) {
        if (std::abs(transitions.row(r).sum() - 1.0) > 1e-9) {
            throw std::invalid_argument("transition row " + std::to_string(r) +
                                        " does not sum to 1");
        }
    }
    transitions_ = std::move(transitions);
}

const Matrix& TabularMDP::transitions() const {
    if (!transitions_) throw MissingModelError("MDP has no transition model");
    return *transitions_;
}

double TabularMDP::transition(int state, int action, int next_state) const {
    return transitions()(row(state, action), next_state);
}

Matrix TabularMDP::discounted_expectation(const Vector& values) const {
    Vector flat = discount_ * (transitions() * values);
    return Eigen::Map<Matrix>(flat.data(), num_states_, num_actions_);
}

namespace {

Vector row_max(const Matrix& m) { return m.rowwise().maxCoeff(); }

}  // namespace

QStarResult q_star(const TabularMDP& mdp, const RewardTable& reward, double tol, int max_iter) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (!mdp.has_transitions()) throw MissingModelError("q_star needs a transition model");
    require_finite(reward.values, "reward");
    if (reward.values.rows() != mdp.num_states() || reward.values.cols() != mdp.num_actions()) {
        throw std::invalid_argument("reward shape does not match MDP");
    }

    QStarResult out;
    Matrix q = reward.values;
    // Stopping at |Q_{n+1} - Q_n| <= tol bounds the residual of Q_{n+1} by gamma * tol.
    for (int it = 1; it <= max_iter; ++it) {
        Matrix next = reward.values + mdp.discounted_expectation(row_max(q));
        const double delta = (next - q).cwiseAbs().maxCoeff();
        q = std::move(next);
        out.iterations = it;
        if (delta <= tol) {
            out.converged = true;
            break;
        }
    }
    out.residual =
        (q - reward.values - mdp.discounted_expectation(row_max(q))).cwiseAbs().maxCoeff();
    out.q.values = std::move(q);
    return out;
}

Matrix log_boltzmann(const Matrix& q) {
    require_finite(q, "Q");
    Matrix out(q.rows(), q.cols());
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        const double m = q.row(s).maxCoeff();
        const double lse = m + std::log((q.row(s).array() - m).exp().sum());
        out.row(s) = q.row(s).array() - lse;
    }
    return out;
}

PolicyTable boltzmann_policy(const QTable& q) {
    require_finite(q.values, "Q");
    PolicyTable p{Matrix(q.values.rows(), q.values.cols())};
    for (Eigen::Index s = 0; s < q.values.rows(); ++s) {
        auto e = (q.values.row(s).array() - q.values.row(s).maxCoeff()).exp();
        p.probs.row(s) = e / e.sum();
    }
    return p;
}

PolicyTable greedy_policy(const QTable& q) {
    require_finite(q.values, "Q");
    PolicyTable p{Matrix::Zero(q.values.rows(), q.values.cols())};
    for (Eigen::Index s = 0; s < q.values.rows(); ++s) {
        Eigen::Index best = 0;
        for (Eigen::Index a = 1; a < q.values.cols(); ++a) {
            if (q.values(s, a) > q.values(s, best)) best = a;
        }
        p.probs(s, best) = 1.0;
    }
    return p;
}

namespace {

void check_step(const Matrix& table, const Step& st) {
    if (st.state < 0 || st.state >= table.rows() || st.action < 0 || st.action >= table.cols()) {
        throw std::out_of_range("trajectory step (" + std::to_string(st.state) + ", " +
                                std::to_string(st.action) + ") is out of range");
    }
}

}  // namespace

double trajectory_log_likelihood(const PolicyTable& policy, const Trajectory& traj) {
    double ll = 0.0;
    for (const auto& st : traj.steps) {
        check_step(policy.probs, st);
        const double p = policy.probs(st.state, st.action);
        if (p <= 0.0) return -std::numeric_limits<double>::infinity();
        ll += std::log(p);
    }
    return ll;
}

double trajectory_log_likelihood_log(const Matrix& log_policy, const Trajectory& traj) {
    double ll = 0.0;
    for (const auto& st : traj.steps) {
        check_step(log_policy, st);
        ll += log_policy(st.state, st.action);
    }
    return ll;
}

Vector policy_state_values(const TabularMDP& mdp, const RewardTable& reward,
                           const PolicyTable& policy, double tol) {
    const auto& T = mdp.transitions();
    const int S = mdp.num_states();
    const int A = mdp.num_actions();
    require_finite(reward.values, "reward");

    Vector r_pi(S);
    Matrix p_pi = Matrix::Zero(S, S);
    for (int s = 0; s < S; ++s) {
        r_pi(s) = policy.probs.row(s).dot(reward.values.row(s));
        for (int a = 0; a < A; ++a) {
            const double w = policy.probs(s, a);
            if (w != 0.0) p_pi.row(s) += w * T.row(mdp.row(s, a));
        }
    }
    const double gamma = mdp.discount();
    if (gamma == 0.0) return r_pi;

    // |V_n - V*| <= gamma/(1-gamma) |V_n - V_{n-1}|, so stop once the step is small enough.
    const double step_tol = tol * (1.0 - gamma) / gamma;
    Vector v = r_pi;
    for (int it = 0; it < 1000000; ++it) {
        Vector next = r_pi + gamma * (p_pi * v);
        const double delta = (next - v).cwiseAbs().maxCoeff();
        v = std::move(next);
        if (delta <= step_tol) break;
    }
    return v;
}

int sample_index(std::span<const double> probs, Rng& rng) {
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    std::uniform_real_distribution<double> unif(0.0, total);
    const double u = unif(rng);
    double acc = 0.0;
    int last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] > 0.0) last_positive = static_cast<int>(i);
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return last_positive;
}

Trajectory simulate(const TabularMDP& mdp, const PolicyTable& policy, int start_state, int length,
                    Rng& rng) {
    const auto& T = mdp.transitions();
    if (length < 1) throw std::invalid_argument("trajectory length must be at least 1");
    if (start_state < 0 || start_state >= mdp.num_states()) {
        throw std::invalid_argument("start state out of range");
    }
    Trajectory traj;
    traj.steps.reserve(static_cast<std::size_t>(length));
    int s = start_state;
    for (int t = 0; t < length; ++t) {
        const auto prow = policy.probs.row(s);
        const int a = sample_index({prow.data(), static_cast<std::size_t>(prow.size())}, rng);
        traj.steps.push_back({s, a});
        const auto trow = T.row(mdp.row(s, a));
        s = sample_index({trow.data(), static_cast<std::size_t>(trow.size())}, rng);
    }
    traj.next_state = s;
    return traj;
}

void validate_policy(const PolicyTable& policy, double tol) {
    if ((policy.probs.array() < 0.0).any() || !policy.probs.allFinite()) {
        throw std::invalid_argument("policy has negative or non-finite entries");
    }
    for (Eigen::Index s = 0; s < policy.probs.rows(); ++s) {
        if (std::abs(policy.probs.row(s).sum() - 1.0) > tol) {
            throw std::invalid_argument("policy row " + std::to_string(s) + " does not sum to 1");
        }
    }
}

}  // namespace miirl
