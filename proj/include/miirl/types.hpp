#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace miirl {

/// Dense row-major matrix used for every |S|x|A| table.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Seeded generator used throughout; every stochastic routine takes one explicitly.
using Rng = std::mt19937_64;

/// Raised when an operation needs a transition model that the MDP does not carry.
class MissingModelError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Immediate reward r(s, a).
struct RewardTable {
    Matrix values;
};

/// Action values Q(s, a).
struct QTable {
    Matrix values;
};

/// Action probabilities pi(s, a); rows are distributions.
struct PolicyTable {
    Matrix probs;
};

struct Step {
    int state = 0;
    int action = 0;

    friend bool operator==(const Step&, const Step&) = default;
};

/// Ordered state-action sequence. `next_state` is the state reached after the
/// final step when it is known; model-free solvers use it to bootstrap the last
/// transition.
struct Trajectory {
    std::string id;
    std::string session;
    std::vector<Step> steps;
    std::optional<int> next_state;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Trajectories plus per-trajectory non-negative weights (one per trajectory).
struct Demonstrations {
    std::vector<Trajectory> trajectories;
    std::vector<double> weights;

    Demonstrations() = default;
    explicit Demonstrations(std::vector<Trajectory> trajs)
        : trajectories(std::move(trajs)), weights(trajectories.size(), 1.0) {}
    Demonstrations(std::vector<Trajectory> trajs, std::vector<double> w);

    std::size_t size() const { return trajectories.size(); }
    bool empty() const { return trajectories.empty(); }
    std::size_t total_steps() const;
    void add(Trajectory traj, double weight = 1.0);

    /// Checks weights and index ranges; throws std::invalid_argument.
    void validate(int num_states, int num_actions) const;

    friend bool operator==(const Demonstrations&, const Demonstrations&) = default;
};

void require_finite(const Matrix& m, const char* what);

}  // namespace miirl
