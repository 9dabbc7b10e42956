#pragma once

// Reference computations used only by the tests. Each one takes a different
// route from the library code it checks (dense solves, enumeration).

#include "miirl/mdp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using miirl::Matrix;
using miirl::Vector;

inline miirl::TabularMDP random_mdp(int S, int A, double gamma, miirl::Rng& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Matrix t(S * A, S);
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
        for (int s = 0; s < S; ++s) t(r, s) = u(rng);
        t.row(r) /= t.row(r).sum();
    }
    return miirl::TabularMDP(S, A, gamma, t);
}

inline Matrix random_matrix(int rows, int cols, miirl::Rng& rng, double sd = 1.0) {
    std::normal_distribution<double> n(0.0, sd);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

/// V = (I - gamma P_pi)^{-1} r_pi by a dense LU solve.
inline Vector dense_policy_values(const miirl::TabularMDP& mdp, const Matrix& reward,
                                  const Matrix& policy) {
    const int S = mdp.num_states();
    const int A = mdp.num_actions();
    const Matrix& T = mdp.transitions();
    Matrix p_pi = Matrix::Zero(S, S);
    Vector r_pi = Vector::Zero(S);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            p_pi.row(s) += policy(s, a) * T.row(s * A + a);
            r_pi(s) += policy(s, a) * reward(s, a);
        }
    }
    const Matrix lhs = Matrix::Identity(S, S) - mdp.discount() * p_pi;
    return lhs.partialPivLu().solve(r_pi);
}

/// Q^pi from V^pi via one backup.
inline Matrix dense_policy_q(const miirl::TabularMDP& mdp, const Matrix& reward,
                             const Matrix& policy) {
    const Vector v = dense_policy_values(mdp, reward, policy);
    const int S = mdp.num_states();
    const int A = mdp.num_actions();
    Matrix q(S, A);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            q(s, a) = reward(s, a) + mdp.discount() * mdp.transitions().row(s * A + a).dot(v);
        }
    }
    return q;
}

/// Plain loop value iteration, run to a fixed sweep count.
inline Matrix hand_value_iteration(const miirl::TabularMDP& mdp, const Matrix& reward, int sweeps) {
    const int S = mdp.num_states();
    const int A = mdp.num_actions();
    Matrix q = Matrix::Zero(S, A);
    for (int it = 0; it < sweeps; ++it) {
        Matrix next(S, A);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                double acc = 0.0;
                for (int s2 = 0; s2 < S; ++s2) {
                    double best = q(s2, 0);
                    for (int b = 1; b < A; ++b) best = std::max(best, q(s2, b));
                    acc += mdp.transition(s, a, s2) * best;
                }
                next(s, a) = reward(s, a) + mdp.discount() * acc;
            }
        }
        q = next;
    }
    return q;
}

inline Matrix softmax_rows(const Matrix& q) {
    Matrix p(q.rows(), q.cols());
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        double z = 0.0;
        for (Eigen::Index a = 0; a < q.cols(); ++a) z += std::exp(q(s, a));
        for (Eigen::Index a = 0; a < q.cols(); ++a) p(s, a) = std::exp(q(s, a)) / z;
    }
    return p;
}

struct Enumerated {
    double likelihood = 0.0;  ///< plain probability, not log
    Matrix gamma;
    std::vector<Matrix> xi;
};

/// Sums over all K^N latent paths of a Markov chain with given emissions.
inline Enumerated enumerate_hmm(const Matrix& emissions, const Vector& pi0, const Matrix& trans) {
    const auto N = static_cast<int>(emissions.rows());
    const auto K = static_cast<int>(emissions.cols());
    Enumerated out;
    out.gamma = Matrix::Zero(N, K);
    out.xi.assign(static_cast<std::size_t>(std::max(N - 1, 0)), Matrix::Zero(K, K));
    std::vector<int> path(static_cast<std::size_t>(N), 0);
    std::function<void(int, double)> walk = [&](int i, double p) {
        if (i == N) {
            out.likelihood += p;
            for (int t = 0; t < N; ++t) out.gamma(t, path[t]) += p;
            for (int t = 1; t < N; ++t) out.xi[t - 1](path[t - 1], path[t]) += p;
            return;
        }
        for (int k = 0; k < K; ++k) {
            path[i] = k;
            const double step = i == 0 ? pi0(k) : trans(path[i - 1], k);
            walk(i + 1, p * step * emissions(i, k));
        }
    };
    walk(0, 1.0);
    out.gamma /= out.likelihood;
    for (auto& x : out.xi) x /= out.likelihood;
    return out;
}

}  // namespace oracle
