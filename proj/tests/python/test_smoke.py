import json

import numpy as np
import pytest

import miirl


def random_mdp(rng, s=4, a=2, gamma=0.9):
    p = rng.random((s * a, s)) + 0.05
    p /= p.sum(axis=1, keepdims=True)
    return miirl.TabularMDP(s, a, gamma, p)


def test_version_and_mdp():
    assert miirl.__version__ == "0.1.0"
    mdp = random_mdp(np.random.default_rng(0))
    assert mdp.num_states == 4 and mdp.num_actions == 2
    assert mdp.has_transitions
    assert np.allclose(mdp.transitions.sum(axis=1), 1.0)


def test_iavi_recovers_policy():
    rng = np.random.default_rng(1)
    mdp = random_mdp(rng)
    logits = rng.normal(size=(4, 2))
    policy = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
    out = miirl.iavi_from_policy(mdp, policy)
    assert np.allclose(miirl.boltzmann_policy(out["q"]), policy, atol=1e-6)
    assert np.allclose(miirl.boltzmann_policy(miirl.q_star(mdp, out["reward"])), policy, atol=1e-6)


def test_forward_backward_single_step():
    log_e = np.log(np.array([[0.2, 0.8]]))
    gamma, _, ll = miirl.forward_backward(log_e, np.array([0.5, 0.5]), np.eye(2))
    assert ll == pytest.approx(np.log(0.5))
    assert np.allclose(gamma, [[0.2, 0.8]])


def test_metrics():
    assert miirl.bic(-100.0, 10, 1000) == pytest.approx(10 * np.log(1000) + 200)
    assert miirl.count_parameters("lmv-iavi", 3, 10, 4) == 128
    perm, acc = miirl.cluster_alignment([0, 0, 1, 1], [1, 1, 0, 0], 2)
    assert perm == [1, 0] and acc == 1.0
    rng = np.random.default_rng(2)
    mdp = random_mdp(rng)
    r = rng.normal(size=(4, 2))
    pi = miirl.boltzmann_policy(miirl.q_star(mdp, r))
    assert miirl.evd(mdp, r, pi, r) < 1e-12


def test_maze_fit_end_to_end():
    mdp = miirl.tree_maze(depth=3)
    rewards = miirl.maze_rewards(depth=3)
    demos, labels, _ = miirl.simulate(mdp, rewards, np.array([0.5, 0.5]), np.array([[0.9, 0.1], [0.1, 0.9]]),
                                      num_trajectories=200, length=8, num_sessions=10, seed=3)
    assert len(demos) == 200 and len(labels) == 200
    model = miirl.fit(demos, mdp, "lmv-iavi", k=2, restarts=2, seed=5)
    assert model.num_intentions == 2
    assert model.posteriors.shape == (200, 2)
    assert miirl.log_likelihood(model, demos) == pytest.approx(model.train_ll)
    predicted = model.posteriors.argmax(axis=1).tolist()
    _, acc = miirl.cluster_alignment(predicted, labels, 2)
    assert acc > 0.9
    rows = miirl.cross_validate(demos, mdp, "iavi", k=1, folds=2, restarts=1, seed=1)
    assert len(rows) == 2 and all(np.isfinite(r["test_ll"]) for r in rows)


def test_gridworld_and_trajectory_objects():
    g = miirl.gridworld(seed=4, side=5)
    assert g["mdp"].num_states == 25
    assert g["hungry"].shape == (25, 5)
    t = miirl.Trajectory([(0, 1), (2, 0)], id="x", session="s")
    d = miirl.Demonstrations([t], [2.0])
    assert d.total_steps() == 2 and d.trajectories[0].steps == [(0, 1), (2, 0)]


def test_cli_round_trip(tmp_path):
    code, _, err = miirl.run_cli(["generate", "maze", "--depth", "2", "--n-traj", "30", "--len", "5",
                                  "--sessions", "3", "--seed", "2", "--out", str(tmp_path)])
    assert code == 0, err
    demos, s, a, labels = miirl.load_demonstrations(tmp_path / "demos.jsonl")
    assert (s, a, len(demos)) == (7, 4, 30)
    out = tmp_path / "m.json"
    code, _, err = miirl.run_cli(["fit", "--algo", "lv-iavi", "--k", "2", "--restarts", "2", "--in",
                                  str(tmp_path / "demos.jsonl"), "--env", str(tmp_path / "env.json"),
                                  "--out", str(out)])
    assert code == 0, err
    assert "bic" in json.loads(out.read_text())["metrics"]
    assert miirl.load_result_model(out).num_intentions == 2
    assert miirl.run_cli(["fit", "--in", "nowhere.jsonl"])[0] == 1
