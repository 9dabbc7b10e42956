#include "oracles.hpp"

#include "miirl/em.hpp"
#include "miirl/irl.hpp"

#include <doctest.h>

using namespace miirl;

namespace {

/// Minimum-norm least-squares solution of r(a) - r(b) = eta(a) - eta(b) over all pairs.
Vector min_norm_pairwise(const Vector& eta) {
    const auto A = eta.size();
    Matrix d = Matrix::Zero(A * (A - 1) / 2, A);
    Vector rhs(d.rows());
    Eigen::Index row = 0;
    for (Eigen::Index a = 0; a < A; ++a) {
        for (Eigen::Index b = a + 1; b < A; ++b) {
            d(row, a) = 1.0;
            d(row, b) = -1.0;
            rhs(row) = eta(a) - eta(b);
            ++row;
        }
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(d);
    return cod.solve(rhs);
}

Demonstrations demos_from(const std::vector<std::vector<Step>>& trajs) {
    Demonstrations d;
    int i = 0;
    for (const auto& steps : trajs) d.add({"t" + std::to_string(i++), "", steps, std::nullopt});
    return d;
}

}  // namespace

TEST_SUITE("irl") {

TEST_CASE("per-state reward solve is the min-norm least-squares solution") {
    Rng rng(2);
    for (int A : {2, 3, 5, 8}) {
        const Vector eta = oracle::random_matrix(A, 1, rng, 3.0);
        const Vector got = solve_state_rewards(eta);
        CHECK((got - min_norm_pairwise(eta)).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(std::abs(got.sum()) < 1e-10);
    }
    Vector bad(2);
    bad << 1.0, std::nan("");
    CHECK_THROWS_AS(solve_state_rewards(bad), std::invalid_argument);
}

TEST_CASE("expert policy estimate counts weighted visits") {
    auto d = demos_from({{{0, 1}, {0, 1}, {1, 0}}, {{0, 0}}});
    d.weights = {2.0, 1.0};
    const Matrix p = estimate_expert_policy(d, 3, 2, 0.5).probs;
    CHECK(p(0, 0) == doctest::Approx((1.0 + 0.5) / (5.0 + 1.0)));
    CHECK(p(0, 1) == doctest::Approx((4.0 + 0.5) / (5.0 + 1.0)));
    CHECK(p(1, 0) == doctest::Approx(2.5 / 3.0));
    CHECK(p(2, 0) == doctest::Approx(0.5));
    d.weights = {0.0, 0.0};
    CHECK_THROWS_AS(estimate_expert_policy(d, 3, 2, 0.5), std::invalid_argument);
}

TEST_CASE("scaling every weight leaves the estimate unchanged only without smoothing") {
    auto d = demos_from({{{0, 1}}, {{0, 0}, {0, 1}}});
    d.weights = {0.5, 0.25};
    const Matrix a = estimate_expert_policy(d, 1, 2, 0.0).probs;
    d.weights = {2.0, 1.0};
    const Matrix b = estimate_expert_policy(d, 1, 2, 0.0).probs;
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("IAVI reproduces a Boltzmann expert exactly") {
    Rng rng(4);
    for (int trial = 0; trial < 3; ++trial) {
        const auto mdp = oracle::random_mdp(5, 3, 0.9, rng);
        const RewardTable truth{oracle::random_matrix(5, 3, rng)};
        const PolicyTable expert = boltzmann_policy(q_star(mdp, truth, 1e-13).q);
        SolverConfig cfg;
        cfg.reward_tol = 1e-12;
        const auto out = iavi_from_policy(mdp, expert, cfg);
        CHECK(out.converged);
        // Independent check: value-iterate the learnt reward by hand, then soft-max.
        const Matrix q_hand = oracle::hand_value_iteration(mdp, out.reward.values, 400);
        const Matrix p_hand = oracle::softmax_rows(q_hand);
        CHECK((p_hand - expert.probs).cwiseAbs().maxCoeff() < 1e-9);
        for (int s = 0; s < 5; ++s) CHECK(std::abs(out.reward.values.row(s).sum()) < 1e-9);
        // Returned Q is the optimal Q of the learnt reward.
        CHECK((out.q.values - q_hand).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("IAVI recovers a zero-mean reward with a state-only transition structure") {
    // When transitions do not depend on the action, the future term is constant per
    // state and the learnt reward must equal the centred log-policy.
    Rng rng(6);
    const int S = 4;
    const int A = 3;
    Matrix t(S * A, S);
    for (int s = 0; s < S; ++s) {
        Vector row = oracle::random_matrix(1, S, rng).cwiseAbs().transpose();
        row /= row.sum();
        for (int a = 0; a < A; ++a) t.row(s * A + a) = row.transpose();
    }
    const TabularMDP mdp(S, A, 0.8, t);
    const PolicyTable pi{oracle::softmax_rows(oracle::random_matrix(S, A, rng))};
    const auto out = iavi_from_policy(mdp, pi, SolverConfig{});
    Matrix expect = pi.probs.array().log().matrix();
    expect.colwise() -= expect.rowwise().mean();
    CHECK((out.reward.values - expect).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("IAVI input validation") {
    const TabularMDP free(2, 2, 0.9);
    const PolicyTable pi{Matrix::Constant(2, 2, 0.5)};
    CHECK_THROWS_AS(iavi_from_policy(free, pi, SolverConfig{}), MissingModelError);
    Rng rng(1);
    const auto mdp = oracle::random_mdp(2, 2, 0.9, rng);
    PolicyTable degenerate{Matrix::Constant(2, 2, 0.5)};
    degenerate.probs.row(0) << 1.0, 0.0;
    CHECK_THROWS_AS(iavi_from_policy(mdp, degenerate, SolverConfig{}), std::invalid_argument);
    SolverConfig bad;
    bad.iql_lr_q = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("IQL with zero discount learns the centred log empirical policy") {
    const auto d = demos_from({{{0, 0}, {1, 1}, {0, 0}, {0, 1}}, {{1, 1}, {1, 0}, {0, 0}}});
    SolverConfig cfg;
    cfg.policy_smoothing = 0.1;
    cfg.reward_tol = 1e-12;
    cfg.iql_epochs = 20000;
    const auto out = iql(d, 2, 2, 0.0, cfg);
    CHECK(out.converged);
    // Counts: state 0 -> (3, 1), state 1 -> (1, 2).
    Matrix pi(2, 2);
    pi << 3.1 / 4.2, 1.1 / 4.2, 1.1 / 3.2, 2.1 / 3.2;
    Matrix expect = pi.array().log().matrix();
    expect.colwise() -= expect.rowwise().mean();
    CHECK((out.reward.values - expect).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((boltzmann_policy(out.q).probs - pi).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("IQL and IAVI agree on the policy of a discounted chain") {
    Rng rng(8);
    const auto mdp = oracle::random_mdp(4, 2, 0.7, rng);
    const PolicyTable expert = boltzmann_policy(q_star(mdp, RewardTable{oracle::random_matrix(4, 2, rng)}).q);
    Demonstrations d;
    for (int i = 0; i < 200; ++i) {
        auto t = simulate(mdp, expert, i % 4, 30, rng);
        t.id = "t" + std::to_string(i);
        d.add(std::move(t));
    }
    SolverConfig cfg;
    cfg.policy_smoothing = 1e-3;
    const auto a = iavi(mdp, d, cfg);
    const auto b = iql(d, 4, 2, 0.7, cfg);
    const Matrix pa = boltzmann_policy(a.q).probs;
    const Matrix pb = boltzmann_policy(b.q).probs;
    // Both reproduce the empirical policy.
    CHECK((pa - a.expert_policy_estimate.probs).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((pb - b.expert_policy_estimate.probs).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("IQL rejects empty data and bad discount") {
    Demonstrations empty;
    CHECK_THROWS_AS(iql(empty, 2, 2, 0.5, SolverConfig{}), std::invalid_argument);
    const auto d = demos_from({{{0, 0}}});
    CHECK_THROWS_AS(iql(d, 2, 2, 1.0, SolverConfig{}), std::invalid_argument);
}

TEST_CASE("run_solver dispatches on the solver kind") {
    Rng rng(9);
    const auto mdp = oracle::random_mdp(3, 2, 0.5, rng);
    const auto d = demos_from({{{0, 0}, {1, 1}, {2, 0}}});
    const auto a = run_solver(SolverKind::iavi, mdp, d, SolverConfig{});
    const auto b = iavi(mdp, d, SolverConfig{});
    CHECK(a.reward.values == b.reward.values);
    const TabularMDP free(3, 2, 0.5);
    CHECK_THROWS_AS(run_solver(SolverKind::iavi, free, d, SolverConfig{}), MissingModelError);
    CHECK_NOTHROW(run_solver(SolverKind::iql, free, d, SolverConfig{}));
}

}
