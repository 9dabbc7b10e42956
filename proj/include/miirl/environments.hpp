#pragma once

#include "miirl/mdp.hpp"

#include <functional>
#include <span>

namespace miirl {

// ---------------------------------------------------------------------------
// Gridworld foraging task
// ---------------------------------------------------------------------------

enum GridAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStay = 4 };

struct GridworldSpec {
    int side = 15;
    /// Probability that an action is replaced by a uniformly random move.
    double slip_prob = 0.3;
    /// Independent placement probability of each resource type per state.
    double resource_density = 0.15;
    double reward_on_target = 1.0;
    /// Reward on the other intention's resource (-1, or 0 for the penalty-free variant).
    double penalty_on_other = -1.0;
    double discount = 0.99;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Gridworld {
    TabularMDP mdp;
    int side = 0;
    std::vector<bool> food;
    std::vector<bool> water;
    RewardTable hungry;
    RewardTable thirsty;

    int state_of(int row, int col) const { return row * side + col; }
};

Gridworld gen_gridworld(const GridworldSpec& spec);

// ---------------------------------------------------------------------------
// Binary-tree labyrinth
// ---------------------------------------------------------------------------

enum MazeAction : int { kMazeLeft = 0, kMazeRight = 1, kMazeReverse = 2, kMazeStay = 3 };

/// Perfect binary tree, breadth-first node order, node 0 is the entrance.
TabularMDP gen_tree_maze(int depth, double discount = 0.99);

/// Designated water-port leaf: reached by alternating right/left turns from the entrance.
int maze_water_port(int depth);

/// Two intentions on the maze: reach the water port, and return to the entrance.
/// Each rewards `scale` for occupying its target node.
std::vector<RewardTable> maze_intention_rewards(int depth, double scale = 1.0);

// ---------------------------------------------------------------------------
// Multi-intention expert simulation
// ---------------------------------------------------------------------------

enum class PolicyMode { greedy, boltzmann };

/// How intentions are drawn per trajectory: i.i.d. from `prior` when `trans` is
/// absent, otherwise a Markov chain per session started from `prior`.
struct IntentionProcess {
    std::vector<RewardTable> rewards;
    Vector prior;
    std::optional<Matrix> trans;
};

struct DemoSpec {
    int num_trajectories = 512;
    int length = 64;
    /// Negative means uniform over states for every trajectory.
    int start_state = -1;
    int num_sessions = 1;
    PolicyMode mode = PolicyMode::greedy;
};

struct GroundTruth {
    std::vector<int> labels;
    std::vector<RewardTable> rewards;
    std::vector<PolicyTable> policies;
};

struct SimulatedData {
    Demonstrations demos;
    GroundTruth truth;
};

/// Optimal expert policy for `reward` in the requested mode.
PolicyTable expert_policy(const TabularMDP& mdp, const RewardTable& reward, PolicyMode mode);

SimulatedData simulate_demonstrations(const TabularMDP& mdp, const IntentionProcess& process,
                                      const DemoSpec& spec, Rng& rng);

// ---------------------------------------------------------------------------
// Two-armed bandit reversal task
// ---------------------------------------------------------------------------

enum Spout : int { kSpoutLeft = 0, kSpoutRight = 1 };

/// One past trial as seen by the history encoding.
struct HistoryEntry {
    bool correct = false;
    int action = kSpoutLeft;

    friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

/// Padding used for trials before the session start; shares code digit 0.
inline constexpr HistoryEntry kNeutralTrial{false, kSpoutLeft};

/// 4^history_len.
int history_state_count(int history_len);

/// Encodes exactly `history_len` entries, most recent first. Each trial is the
/// base-4 digit 2*correct + action; the most recent trial is the least
/// significant digit.
int encode_history_state(std::span<const HistoryEntry> history, int history_len);

std::vector<HistoryEntry> decode_history_state(int code, int history_len);

struct BanditSpec {
    /// History length used to encode emitted demonstrations.
    int history_len = 3;
    int window = 15;
    double criterion = 0.75;
    int min_block = 20;
    int session_length = 200;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrialRecord {
    int session = 0;
    int trial = 0;
    int choice = 0;
    bool correct = false;
    int block = 0;
    int rewarded_spout = 0;
    int latent = 0;

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// Chooses an action from the padded recent history (most recent first), the
/// currently rewarded spout, and the generator. May carry internal state.
using BanditChooser =
    std::function<int(std::span<const HistoryEntry> recent, int rewarded_spout, Rng& rng)>;

/// Agent driven by history-encoded policies and an optional Markov chain over them.
struct BanditAgent {
    std::vector<PolicyTable> policies;
    Vector pi0;
    Matrix trans;

    static BanditAgent single(PolicyTable policy);
    int history_len() const;
};

/// Simulates one reversal session; `latent` stays 0 for chooser-driven agents.
std::vector<TrialRecord> simulate_bandit_session(const BanditChooser& chooser,
                                                 const BanditSpec& spec, int session_index,
                                                 Rng& rng);
std::vector<TrialRecord> simulate_bandit_session(const BanditAgent& agent, const BanditSpec& spec,
                                                 int session_index, Rng& rng);

/// History (most recent first, padded) available before trial `t` of a session.
std::vector<HistoryEntry> history_before(std::span<const TrialRecord> session_trials,
                                         std::size_t t, int history_len);

/// One single-step trajectory per trial, states encoded with `history_len`.
/// Sessions are identified by TrialRecord::session.
Demonstrations encode_bandit_trials(std::span<const TrialRecord> trials, int history_len);

/// Reference ground-truth agent: a logistic win-stay/lose-switch rule whose
/// evidence decays over the last `history_len` trials.
PolicyTable reference_bandit_policy(int history_len, std::span<const double> lag_weights);

}  // namespace miirl
