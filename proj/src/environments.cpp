#include "miirl/environments.hpp"

#include <cmath>
#include <cstdio>
#include <deque>

namespace miirl {

namespace {

std::string padded(const char* prefix, int value, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, value);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Gridworld
// ---------------------------------------------------------------------------

void GridworldSpec::validate() const {
    if (side < 2) throw std::invalid_argument("gridworld side must be at least 2");
    if (!(slip_prob >= 0.0 && slip_prob < 1.0)) {
        throw std::invalid_argument("slip probability must lie in [0, 1)");
    }
    if (!(resource_density >= 0.0 && resource_density <= 1.0)) {
        throw std::invalid_argument("resource density must lie in [0, 1]");
    }
    if (!(discount >= 0.0 && discount < 1.0)) throw std::invalid_argument("discount must lie in [0, 1)");
}

Gridworld gen_gridworld(const GridworldSpec& spec) {
    spec.validate();
    const int n = spec.side;
    const int S = n * n;
    constexpr int A = 5;
    constexpr int dr[A] = {-1, 1, 0, 0, 0};
    constexpr int dc[A] = {0, 0, -1, 1, 0};

    auto move = [&](int s, int a) {
        const int r = s / n + dr[a];
        const int c = s % n + dc[a];
        if (r < 0 || r >= n || c < 0 || c >= n) return s;
        return r * n + c;
    };

    Matrix T = Matrix::Zero(static_cast<Eigen::Index>(S) * A, S);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const int row = s * A + a;
            T(row, move(s, a)) += 1.0 - spec.slip_prob;
            for (int m = 0; m < 4; ++m) T(row, move(s, m)) += spec.slip_prob / 4.0;
        }
    }

    Rng rng(spec.seed);
    std::bernoulli_distribution place(spec.resource_density);
    std::vector<bool> food(static_cast<std::size_t>(S)), water(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) {
        food[static_cast<std::size_t>(s)] = place(rng);
        water[static_cast<std::size_t>(s)] = place(rng);
    }

    Matrix hungry = Matrix::Zero(S, A);
    Matrix thirsty = Matrix::Zero(S, A);
    for (int s = 0; s < S; ++s) {
        const bool f = food[static_cast<std::size_t>(s)];
        const bool w = water[static_cast<std::size_t>(s)];
        const double h = (f ? spec.reward_on_target : 0.0) + (w ? spec.penalty_on_other : 0.0);
        const double t = (w ? spec.reward_on_target : 0.0) + (f ? spec.penalty_on_other : 0.0);
        hungry.row(s).setConstant(h);
        thirsty.row(s).setConstant(t);
    }

    return Gridworld{TabularMDP(S, A, spec.discount, std::move(T)), n, std::move(food),
                     std::move(water), RewardTable{std::move(hungry)},
                     RewardTable{std::move(thirsty)}};
}

// ---------------------------------------------------------------------------
// Maze
// ---------------------------------------------------------------------------

TabularMDP gen_tree_maze(int depth, double discount) {
    if (depth < 1) throw std::invalid_argument("maze depth must be at least 1");
    if (depth > 20) throw std::invalid_argument("maze depth is unreasonably large");
    const int S = (1 << (depth + 1)) - 1;
    const int first_leaf = (1 << depth) - 1;
    constexpr int A = 4;
    Matrix T = Matrix::Zero(static_cast<Eigen::Index>(S) * A, S);
    for (int s = 0; s < S; ++s) {
        const bool leaf = s >= first_leaf;
        T(s * A + kMazeLeft, leaf ? s : 2 * s + 1) = 1.0;
        T(s * A + kMazeRight, leaf ? s : 2 * s + 2) = 1.0;
        T(s * A + kMazeReverse, s == 0 ? 0 : (s - 1) / 2) = 1.0;
        T(s * A + kMazeStay, s) = 1.0;
    }
    return TabularMDP(S, A, discount, std::move(T));
}

int maze_water_port(int depth) {
    if (depth < 1) throw std::invalid_argument("maze depth must be at least 1");
    int node = 0;
    for (int d = 0; d < depth; ++d) node = (d % 2 == 0) ? 2 * node + 2 : 2 * node + 1;
    return node;
}

std::vector<RewardTable> maze_intention_rewards(int depth, double scale) {
    const int S = (1 << (depth + 1)) - 1;
    Matrix water = Matrix::Zero(S, 4);
    Matrix home = Matrix::Zero(S, 4);
    water.row(maze_water_port(depth)).setConstant(scale);
    home.row(0).setConstant(scale);
    return {RewardTable{std::move(water)}, RewardTable{std::move(home)}};
}

// ---------------------------------------------------------------------------
// Expert simulation
// ---------------------------------------------------------------------------

PolicyTable expert_policy(const TabularMDP& mdp, const RewardTable& reward, PolicyMode mode) {
    const auto q = q_star(mdp, reward, 1e-10);
    return mode == PolicyMode::greedy ? greedy_policy(q.q) : boltzmann_policy(q.q);
}

SimulatedData simulate_demonstrations(const TabularMDP& mdp, const IntentionProcess& process,
                                      const DemoSpec& spec, Rng& rng) {
    const auto K = static_cast<Eigen::Index>(process.rewards.size());
    if (K == 0 || process.prior.size() != K) {
        throw std::invalid_argument("intention prior must match the number of rewards");
    }
    if (std::abs(process.prior.sum() - 1.0) > 1e-9 || (process.prior.array() < 0.0).any()) {
        throw std::invalid_argument("intention prior is not a distribution");
    }
    if (process.trans) {
        if (process.trans->rows() != K || process.trans->cols() != K) {
            throw std::invalid_argument("intention transition matrix has the wrong shape");
        }
        for (Eigen::Index k = 0; k < K; ++k) {
            if (std::abs(process.trans->row(k).sum() - 1.0) > 1e-9) {
                throw std::invalid_argument("intention transition rows must sum to 1");
            }
        }
    }
    if (spec.num_trajectories < 1 || spec.length < 1 || spec.num_sessions < 1) {
        throw std::invalid_argument("trajectory count, length and session count must be positive");
    }
    if (spec.start_state >= mdp.num_states()) throw std::invalid_argument("start state out of range");

    SimulatedData out;
    out.truth.rewards = process.rewards;
    for (const auto& r : process.rewards) out.truth.policies.push_back(expert_policy(mdp, r, spec.mode));

    const int per_session =
        (spec.num_trajectories + spec.num_sessions - 1) / spec.num_sessions;
    std::uniform_int_distribution<int> start_dist(0, mdp.num_states() - 1);
    const std::span<const double> prior(process.prior.data(), static_cast<std::size_t>(K));
    int label = 0;
    for (int i = 0; i < spec.num_trajectories; ++i) {
        const int session = i / per_session;
        const bool session_start = i % per_session == 0;
        if (!process.trans || session_start) {
            label = sample_index(prior, rng);
        } else {
            const auto row = process.trans->row(label);
            label = sample_index({row.data(), static_cast<std::size_t>(K)}, rng);
        }
        const int start = spec.start_state >= 0 ? spec.start_state : start_dist(rng);
        Trajectory traj = simulate(mdp, out.truth.policies[static_cast<std::size_t>(label)], start,
                                   spec.length, rng);
        traj.id = padded("traj-", i, 5);
        traj.session = padded("session-", session, 3);
        out.demos.add(std::move(traj));
        out.truth.labels.push_back(label);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bandit
// ---------------------------------------------------------------------------

int history_state_count(int history_len) {
    if (history_len < 1 || history_len > 12) {
        throw std::invalid_argument("history length must lie in [1, 12]");
    }
    return 1 << (2 * history_len);
}

int encode_history_state(std::span<const HistoryEntry> history, int history_len) {
    history_state_count(history_len);
    if (static_cast<int>(history.size()) != history_len) {
        throw std::invalid_argument("history must contain exactly history_len entries");
    }
    int code = 0;
    int place = 1;
    for (const auto& h : history) {
        if (h.action != kSpoutLeft && h.action != kSpoutRight) {
            throw std::invalid_argument("history action must be left (0) or right (1)");
        }
        code += place * (2 * static_cast<int>(h.correct) + h.action);
        place *= 4;
    }
    return code;
}

std::vector<HistoryEntry> decode_history_state(int code, int history_len) {
    const int count = history_state_count(history_len);
    if (code < 0 || code >= count) throw std::invalid_argument("history code out of range");
    std::vector<HistoryEntry> out(static_cast<std::size_t>(history_len));
    for (auto& h : out) {
        const int digit = code % 4;
        h.correct = digit >= 2;
        h.action = digit % 2;
        code /= 4;
    }
    return out;
}

void BanditSpec::validate() const {
    history_state_count(history_len);
    if (window < 1) throw std::invalid_argument("performance window must be >= 1");
    if (!(criterion >= 0.0 && criterion <= 1.0)) throw std::invalid_argument("criterion must lie in [0, 1]");
    if (min_block < 1) throw std::invalid_argument("minimum block length must be >= 1");
    if (session_length < 1) throw std::invalid_argument("session length must be >= 1");
}

BanditAgent BanditAgent::single(PolicyTable policy) {
    BanditAgent agent;
    agent.policies.push_back(std::move(policy));
    agent.pi0 = Vector::Ones(1);
    agent.trans = Matrix::Ones(1, 1);
    return agent;
}

int BanditAgent::history_len() const {
    if (policies.empty()) throw std::invalid_argument("bandit agent has no policies");
    const auto rows = policies.front().probs.rows();
    for (int h = 1; h <= 12; ++h) {
        if (history_state_count(h) == rows) return h;
    }
    throw std::invalid_argument("agent policy rows are not a power of 4");
}

std::vector<HistoryEntry> history_before(std::span<const TrialRecord> session_trials, std::size_t t,
                                         int history_len) {
    std::vector<HistoryEntry> h(static_cast<std::size_t>(history_len), kNeutralTrial);
    for (std::size_t j = 0; j < h.size() && j < t; ++j) {
        const auto& tr = session_trials[t - 1 - j];
        h[j] = {tr.correct, tr.choice};
    }
    return h;
}

namespace {

/// Shared reversal-rule driver; `choose` returns (action, latent).
template <class Choose>
std::vector<TrialRecord> run_reversal_session(const BanditSpec& spec, int session_index, Rng& rng,
                                              int history_len, Choose&& choose) {
    spec.validate();
    std::vector<TrialRecord> trials;
    trials.reserve(static_cast<std::size_t>(spec.session_length));
    int rewarded = std::bernoulli_distribution(0.5)(rng) ? kSpoutRight : kSpoutLeft;
    int block = 0;
    int block_len = 0;
    std::deque<int> window;
    int window_correct = 0;
    for (int t = 0; t < spec.session_length; ++t) {
        const auto recent = history_before(trials, trials.size(), history_len);
        const auto [action, latent] = choose(std::span<const HistoryEntry>(recent), rewarded);
        const bool correct = action == rewarded;
        trials.push_back({session_index, t, action, correct, block, rewarded, latent});

        ++block_len;
        window.push_back(correct ? 1 : 0);
        window_correct += window.back();
        if (static_cast<int>(window.size()) > spec.window) {
            window_correct -= window.front();
            window.pop_front();
        }
        const bool window_full = static_cast<int>(window.size()) == spec.window;
        if (block_len >= spec.min_block && window_full &&
            window_correct >= spec.criterion * spec.window - 1e-12) {
            rewarded = 1 - rewarded;
            ++block;
            block_len = 0;
            window.clear();
            window_correct = 0;
        }
    }
    return trials;
}

}  // namespace

std::vector<TrialRecord> simulate_bandit_session(const BanditChooser& chooser,
                                                 const BanditSpec& spec, int session_index,
                                                 Rng& rng) {
    return run_reversal_session(spec, session_index, rng, spec.history_len,
                                [&](std::span<const HistoryEntry> recent, int rewarded) {
                                    return std::pair{chooser(recent, rewarded, rng), 0};
                                });
}

std::vector<TrialRecord> simulate_bandit_session(const BanditAgent& agent, const BanditSpec& spec,
                                                 int session_index, Rng& rng) {
    const int h = agent.history_len();
    const auto K = static_cast<Eigen::Index>(agent.policies.size());
    if (agent.pi0.size() != K || agent.trans.rows() != K || agent.trans.cols() != K) {
        throw std::invalid_argument("bandit agent chain does not match its policy count");
    }
    int latent = -1;
    return run_reversal_session(
        spec, session_index, rng, h, [&](std::span<const HistoryEntry> recent, int) {
            if (latent < 0) {
                latent = sample_index({agent.pi0.data(), static_cast<std::size_t>(K)}, rng);
            } else {
                const auto row = agent.trans.row(latent);
                latent = sample_index({row.data(), static_cast<std::size_t>(K)}, rng);
            }
            const int state = encode_history_state(recent, h);
            const auto prow = agent.policies[static_cast<std::size_t>(latent)].probs.row(state);
            const int action = sample_index({prow.data(), static_cast<std::size_t>(prow.size())}, rng);
            return std::pair{action, latent};
        });
}

Demonstrations encode_bandit_trials(std::span<const TrialRecord> trials, int history_len) {
    history_state_count(history_len);
    Demonstrations out;
    std::size_t begin = 0;
    while (begin < trials.size()) {
        std::size_t end = begin;
        while (end < trials.size() && trials[end].session == trials[begin].session) ++end;
        const auto session = trials.subspan(begin, end - begin);
        const std::string name = padded("session-", session.front().session, 3);
        for (std::size_t t = 0; t < session.size(); ++t) {
            Trajectory traj;
            traj.id = name + "-trial-" + std::to_string(session[t].trial);
            traj.session = name;
            const auto before = history_before(session, t, history_len);
            const auto after = history_before(session, t + 1, history_len);
            traj.steps = {{encode_history_state(before, history_len), session[t].choice}};
            traj.next_state = encode_history_state(after, history_len);
            out.add(std::move(traj));
        }
        begin = end;
    }
    return out;
}

PolicyTable reference_bandit_policy(int history_len, std::span<const double> lag_weights) {
    const int S = history_state_count(history_len);
    if (static_cast<int>(lag_weights.size()) != history_len) {
        throw std::invalid_argument("need one lag weight per history slot");
    }
    PolicyTable p{Matrix(S, 2)};
    for (int s = 0; s < S; ++s) {
        const auto hist = decode_history_state(s, history_len);
        double score = 0.0;
        for (std::size_t j = 0; j < hist.size(); ++j) {
            const double toward_right = hist[j].action == kSpoutRight ? 1.0 : -1.0;
            const double outcome = hist[j].correct ? 1.0 : -1.0;
            score += lag_weights[j] * toward_right * outcome;
        }
        const double p_right = 1.0 / (1.0 + std::exp(-score));
        p.probs(s, kSpoutLeft) = 1.0 - p_right;
        p.probs(s, kSpoutRight) = p_right;
    }
    return p;
}

}  // namespace miirl
