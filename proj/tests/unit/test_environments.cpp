#include "miirl/environments.hpp"

#include <doctest.h>

#include <map>
#include <set>

using namespace miirl;

TEST_SUITE("environments") {

TEST_CASE("gridworld transitions are stochastic and slip uniformly") {
    GridworldSpec spec;
    spec.side = 5;
    spec.seed = 3;
    const auto g = gen_gridworld(spec);
    const auto& mdp = g.mdp;
    CHECK(mdp.num_states() == 25);
    CHECK(mdp.num_actions() == 5);
    for (Eigen::Index r = 0; r < mdp.transitions().rows(); ++r) {
        CHECK(mdp.transitions().row(r).sum() == doctest::Approx(1.0));
    }
    const int centre = 12;
    CHECK(mdp.transition(centre, kUp, centre - 5) == doctest::Approx(0.7 + 0.075));
    CHECK(mdp.transition(centre, kUp, centre + 5) == doctest::Approx(0.075));
    CHECK(mdp.transition(centre, kStay, centre) == doctest::Approx(0.7));
    // Corner: two of the four slip moves bump into walls.
    CHECK(mdp.transition(0, kUp, 0) == doctest::Approx(0.7 + 0.15));
}

TEST_CASE("gridworld rewards follow resource placement") {
    GridworldSpec spec;
    spec.side = 6;
    spec.resource_density = 0.4;
    spec.seed = 9;
    const auto g = gen_gridworld(spec);
    for (int s = 0; s < 36; ++s) {
        const double h = (g.food[s] ? 1.0 : 0.0) - (g.water[s] ? 1.0 : 0.0);
        const double t = (g.water[s] ? 1.0 : 0.0) - (g.food[s] ? 1.0 : 0.0);
        CHECK(g.hungry.values(s, 2) == h);
        CHECK(g.thirsty.values(s, 4) == t);
    }
    const auto again = gen_gridworld(spec);
    CHECK(again.food == g.food);
    spec.seed = 10;
    CHECK(gen_gridworld(spec).food != g.food);
    spec.slip_prob = 1.0;
    CHECK_THROWS_AS(gen_gridworld(spec), std::invalid_argument);
}

TEST_CASE("tree maze structure") {
    const auto mdp = gen_tree_maze(3);
    CHECK(mdp.num_states() == 15);
    CHECK(mdp.transition(0, kMazeLeft, 1) == 1.0);
    CHECK(mdp.transition(0, kMazeRight, 2) == 1.0);
    CHECK(mdp.transition(0, kMazeReverse, 0) == 1.0);
    CHECK(mdp.transition(5, kMazeReverse, 2) == 1.0);
    CHECK(mdp.transition(14, kMazeLeft, 14) == 1.0);
    const int port = maze_water_port(3);
    CHECK(port >= 7);
    CHECK(port < 15);
    const auto r = maze_intention_rewards(3, 2.0);
    CHECK(r[0].values(port, 1) == 2.0);
    CHECK(r[1].values(0, 3) == 2.0);
    CHECK(r[0].values.sum() == doctest::Approx(8.0));
    // The water-seeking expert reaches the port from the root in `depth` steps.
    const auto pi = expert_policy(mdp, r[0], PolicyMode::greedy);
    Rng rng(1);
    const auto traj = simulate(mdp, pi, 0, 6, rng);
    CHECK(traj.steps[3].state == port);
}

TEST_CASE("demonstration simulation honours the intention process") {
    const auto mdp = gen_tree_maze(2);
    IntentionProcess process{maze_intention_rewards(2), Vector::Constant(2, 0.5), Matrix(2, 2)};
    *process.trans << 1.0, 0.0, 0.0, 1.0;
    DemoSpec spec;
    spec.num_trajectories = 40;
    spec.length = 5;
    spec.num_sessions = 4;
    Rng rng(2);
    const auto sim = simulate_demonstrations(mdp, process, spec, rng);
    CHECK(sim.demos.size() == 40);
    CHECK(sim.demos.total_steps() == 200);
    std::map<std::string, std::set<int>> labels_by_session;
    for (std::size_t i = 0; i < 40; ++i) {
        labels_by_session[sim.demos.trajectories[i].session].insert(sim.truth.labels[i]);
    }
    CHECK(labels_by_session.size() == 4);
    // Sticky chain: one intention per session.
    for (const auto& [name, labels] : labels_by_session) CHECK(labels.size() == 1);
    process.prior << 0.2, 0.2;
    CHECK_THROWS_AS(simulate_demonstrations(mdp, process, spec, rng), std::invalid_argument);
}

TEST_CASE("history codes round trip") {
    for (int h = 1; h <= 4; ++h) {
        CHECK(history_state_count(h) == 1 << (2 * h));
        for (int code = 0; code < history_state_count(h); ++code) {
            const auto hist = decode_history_state(code, h);
            CHECK(encode_history_state(hist, h) == code);
        }
    }
    const std::vector<HistoryEntry> hist{{true, kSpoutRight}, {false, kSpoutLeft}};
    CHECK(encode_history_state(hist, 2) == 3);
    const std::vector<HistoryEntry> older{{false, kSpoutLeft}, {true, kSpoutLeft}};
    CHECK(encode_history_state(older, 2) == 8);
}

TEST_CASE("reversal sessions switch blocks after the criterion") {
    BanditSpec spec;
    spec.session_length = 120;
    Rng rng(4);
    // Perfect agent: always picks the rewarded spout.
    const auto trials = simulate_bandit_session(
        [](std::span<const HistoryEntry>, int rewarded, Rng&) { return rewarded; }, spec, 0, rng);
    REQUIRE(trials.size() == 120);
    for (const auto& t : trials) CHECK(t.correct);
    CHECK(trials[19].block == 0);
    CHECK(trials[20].block == 1);
    CHECK(trials[20].rewarded_spout != trials[19].rewarded_spout);
    CHECK(trials.back().block == 5);
}

TEST_CASE("bandit encoding produces one step per trial with the previous history") {
    BanditSpec spec;
    spec.session_length = 30;
    Rng rng(5);
    const auto agent = BanditAgent::single(reference_bandit_policy(2, std::vector<double>{1.0, 0.5}));
    auto trials = simulate_bandit_session(agent, spec, 0, rng);
    auto second = simulate_bandit_session(agent, spec, 1, rng);
    trials.insert(trials.end(), second.begin(), second.end());
    const auto d = encode_bandit_trials(trials, 2);
    CHECK(d.size() == 60);
    CHECK(d.trajectories[0].steps[0].state == 0);
    CHECK(d.trajectories[30].steps[0].state == 0);
    CHECK(d.trajectories[0].session != d.trajectories[30].session);
    for (std::size_t t = 1; t < 30; ++t) {
        CHECK(d.trajectories[t].steps[0].state == *d.trajectories[t - 1].next_state);
        const auto& prev = trials[t - 1];
        CHECK(d.trajectories[t].steps[0].state % 4 == 2 * (prev.correct ? 1 : 0) + prev.choice);
    }
}

TEST_CASE("reference bandit policy is win-stay lose-switch") {
    const auto p = reference_bandit_policy(1, std::vector<double>{2.0}).probs;
    const double stay = 1.0 / (1.0 + std::exp(-2.0));
    // Rewarded right -> stay right; unrewarded right -> switch left.
    CHECK(p(encode_history_state(std::vector<HistoryEntry>{{true, kSpoutRight}}, 1), kSpoutRight) ==
          doctest::Approx(stay));
    CHECK(p(encode_history_state(std::vector<HistoryEntry>{{false, kSpoutRight}}, 1), kSpoutLeft) ==
          doctest::Approx(stay));
    CHECK_THROWS_AS(reference_bandit_policy(2, std::vector<double>{1.0}), std::invalid_argument);
}

}
