import hashlib

import numpy as np
import pytest

from mbbo_bench.agents import (
    ACTIONS,
    CheckpointError,
    CheckpointKindError,
    PolicyNet,
    PPOAgent,
    QAgent,
    ReinforceAgent,
    discretize,
    epsilon_greedy,
    load_checkpoint,
    make_agent,
    policy_forward,
    q_update,
    reinforce_update,
    save_checkpoint,
)
from mbbo_bench.agents.checkpoint import dumps, loads
from mbbo_bench.agents.policy import ppo_gradient, ppo_surrogate, reinforce_gradient, returns_to_go
from mbbo_bench.env import MetaEnv
from mbbo_bench.metrics import best_checkpoint_step
from mbbo_bench.testsuite import make_instance

# -- Q-learning ---------------------------------------------------------------------


def test_epsilon_greedy_examples():
    rng = np.random.default_rng(0)
    assert epsilon_greedy(np.array([0.1, 0.9, 0.3]), 0.0, rng) == 1
    assert epsilon_greedy(np.zeros(5), 0.0, rng) == 0
    picks = [epsilon_greedy(np.array([0.0, 10.0, 0.0]), 1.0, rng) for _ in range(3000)]
    counts = np.bincount(picks, minlength=3)
    assert np.all(np.abs(counts / 3000 - 1 / 3) < 0.05)


def test_q_update_examples():
    q = q_update({}, 0, 0, 1.0, 1, alpha=0.5, gamma=0.9, n_actions=2)
    assert q[0][0] == 0.5
    # target equals current value -> unchanged
    q = {0: np.array([0.9, 0.0]), 1: np.array([1.0, 0.0])}
    q_update(q, 0, 0, 0.0, 1, alpha=0.5, gamma=0.9, n_actions=2)
    assert q[0][0] == pytest.approx(0.9)


def test_q_update_geometric_fixed_point():
    q = {}
    for _ in range(5000):
        q_update(q, 3, 0, 1.0, 3, alpha=0.5, gamma=0.9, n_actions=2)
    assert q[3][0] == pytest.approx(1.0 / (1 - 0.9), rel=1e-9)


def test_terminal_backup_ignores_next_state():
    q = {1: np.array([100.0, 0.0])}
    q_update(q, 0, 1, 1.0, 1, alpha=1.0, gamma=0.9, terminal=True, n_actions=2)
    assert q[0][1] == 1.0


def test_discretize_positional():
    s = np.zeros(9)
    assert discretize(s) == 0
    s[0] = 0.5
    assert discretize(s) == 1
    s[1] = 0.9
    assert discretize(s) == 1 + 2 * 3
    assert discretize(np.ones(9)) == 3**9 - 1
    assert len(ACTIONS) == 18


# -- policy network -----------------------------------------------------------------


def test_param_count():
    net = PolicyNet(9, 16, 3)
    assert net.n_params == 9 * 16 + 16 + 16 * 3 + 3


def test_zero_weights_uniform_categorical():
    net = PolicyNet(9, 8, 4, head="categorical")
    assert np.allclose(policy_forward(net, np.ones(9)), 0.25)


def test_probabilities_sum_to_one():
    rng = np.random.default_rng(0)
    net = PolicyNet(9, 8, 5, head="categorical")
    for _ in range(1000):
        net.theta = rng.normal(0, 3, net.n_params)
        assert abs(policy_forward(net, rng.random(9)).sum() - 1.0) <= 1e-9


def test_gaussian_means_in_legal_ranges():
    rng = np.random.default_rng(1)
    net = PolicyNet(9, 8, 3, rng=rng, scale=3.0)
    for _ in range(100):
        out = policy_forward(net, rng.random(9))
        assert 0 <= out[0] <= 1 and np.all((out[1:] >= 0) & (out[1:] <= 2))


def test_non_finite_parameters_raise():
    net = PolicyNet()
    net.theta[0] = np.nan
    with pytest.raises(RuntimeError):
        policy_forward(net, np.zeros(9))


def _fd_grad(net, s, a, h=1e-5):
    g = np.zeros(net.n_params)
    for i in range(net.n_params):
        tp, tm = net.theta.copy(), net.theta.copy()
        tp[i] += h
        tm[i] -= h
        g[i] = (net.log_prob(s, a, tp) - net.log_prob(s, a, tm)) / (2 * h)
    return g


@pytest.mark.parametrize("head", ["categorical", "gaussian"])
def test_log_prob_gradient_matches_finite_differences(head):
    rng = np.random.default_rng(3)
    net = PolicyNet(9, 6, 3, head=head, rng=rng, scale=0.5)
    for _ in range(10):
        s = rng.random(9)
        a = int(rng.integers(3)) if head == "categorical" else net.sample(s, rng)
        ga, gf = net.grad_log_prob(s, a), _fd_grad(net, s, a)
        assert np.linalg.norm(ga - gf) <= 1e-4 * max(1.0, np.linalg.norm(gf))


def test_returns_to_go_and_gamma_zero():
    r = [1.0, 2.0, 3.0]
    assert np.allclose(returns_to_go(r, 0.0), r)
    assert np.allclose(returns_to_go(r, 1.0), [6.0, 5.0, 3.0])


def test_zero_rewards_leave_parameters():
    rng = np.random.default_rng(0)
    net = PolicyNet(9, 4, 3, rng=rng)
    before = net.theta.copy()
    traj = [(rng.random(9), net.sample(rng.random(9), rng), 0.0) for _ in range(5)]
    reinforce_update(net, traj, 0.1, 0.99)
    assert np.array_equal(net.theta, before)
    reinforce_update(net, [], 0.1, 0.99)
    assert np.array_equal(net.theta, before)


def test_bandit_gradient_equals_expected_return_derivative():
    rng = np.random.default_rng(2)
    net = PolicyNet(9, 4, 2, head="categorical", rng=rng, scale=0.5)
    s = rng.random(9)
    rewards = (0.0, 1.0)

    def J(theta):
        return float(net.distribution(s, theta) @ np.array(rewards))

    p = net.distribution(s)
    analytic = sum(p[a] * reinforce_gradient(net, [(s, a, rewards[a])], 0.99) for a in range(2))
    h = 1e-5
    fd = np.array([(J(net.theta + h * e) - J(net.theta - h * e)) / (2 * h) for e in np.eye(net.n_params)])
    assert np.max(np.abs(analytic - fd)) <= 1e-3


def test_reinforce_solves_two_armed_bandit():
    passed = 0
    s = np.ones(9)
    for seed in range(10):
        rng = np.random.default_rng(seed)
        net = PolicyNet(9, 4, 2, head="categorical", rng=rng)
        for _ in range(2000):
            a = net.sample(s, rng)
            reinforce_update(net, [(s, a, float(a))], 0.1, 0.99)
        passed += net.distribution(s)[1] > 0.95
    assert passed >= 9


def test_ppo_surrogate_gradient():
    rng = np.random.default_rng(4)
    net = PolicyNet(9, 5, 3, head="gaussian", rng=rng, scale=0.5)
    batch = []
    for _ in range(6):
        s = rng.random(9)
        a = net.sample(s, rng)
        batch.append((s, a, net.log_prob(s, a) - 0.05, float(rng.normal())))
    g = ppo_gradient(net, batch, 0.2)
    h = 1e-6
    fd = np.array([(ppo_surrogate(net, batch, 0.2, net.theta + h * e)
                    - ppo_surrogate(net, batch, 0.2, net.theta - h * e)) / (2 * h) for e in np.eye(net.n_params)])
    assert np.linalg.norm(g - fd) <= 1e-4 * max(1.0, np.linalg.norm(fd))


# -- template loops -----------------------------------------------------------------


def _env(agent, no=2, max_fes=1000):
    return MetaEnv(agent.make_backbone(), make_instance("synthetic", no, 5), max_fes=max_fes)


@pytest.mark.parametrize("cls", [QAgent, ReinforceAgent, PPOAgent])
def test_train_episode_contract(cls):
    agent = cls(seed=0, pop_size=20)
    env = _env(agent)
    env.reset(0)
    ret = agent.train_episode(env)
    assert 0.0 <= ret <= 1.0 + 1e-12
    assert agent.learning_step == len(env.trajectory)
    assert np.all(np.isfinite(agent.net.theta)) if hasattr(agent, "net") else True


def _param_hash(agent):
    return hashlib.sha256(dumps(agent).encode()).hexdigest()


@pytest.mark.parametrize("cls", [QAgent, ReinforceAgent])
def test_rollout_is_pure_and_deterministic(cls):
    agent = cls(seed=1, pop_size=20)
    env = _env(agent)
    env.reset(3)
    agent.train_episode(env)
    h = _param_hash(agent)
    r1 = agent.rollout_episode(_env(agent), seed=9)
    r2 = agent.rollout_episode(_env(agent), seed=9)
    assert _param_hash(agent) == h
    assert (r1.v_obj_raw, r1.v_fes_raw, r1.trace) == (r2.v_obj_raw, r2.v_fes_raw, r2.trace)
    assert r1.v_fes_raw <= 1000 + 20
    assert agent.run_greedy(_env(agent), 4) == agent.run_greedy(_env(agent), 4)


# -- checkpoints --------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["qlearning", "reinforce", "ppo"])
def test_checkpoint_round_trip_is_byte_identical(kind, tmp_path):
    agent = make_agent(kind, seed=5, pop_size=20)
    env = _env(agent)
    env.reset(0)
    agent.train_episode(env)
    agent.history = [(10, 0.25), (20, 0.5)]
    a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(agent, a)
    back = load_checkpoint(a)
    save_checkpoint(back, b)
    assert a.read_bytes() == b.read_bytes()
    assert back.learning_step == agent.learning_step and back.history == agent.history
    assert back.rng.random() == agent.rng.random()


def test_best_index_from_history():
    assert best_checkpoint_step([(1, 0.2), (2, 0.9), (3, 0.5)]) == 2


def test_wrong_kind_and_corrupt_fields(tmp_path):
    text = dumps(QAgent(seed=0))
    with pytest.raises(CheckpointKindError):
        loads(text, expected_kind="reinforce")
    with pytest.raises(CheckpointError, match="learning_step"):
        loads(text.replace("learning_step = 0", "learning_step = x"))
    with pytest.raises(CheckpointError, match="rng"):
        loads("\n".join(line for line in text.splitlines() if not line.startswith("rng")))
    bad = dumps(ReinforceAgent(seed=0)).replace("param.theta = v:", "param.theta = v:oops ")
    with pytest.raises(CheckpointError, match="param.theta"):
        loads(bad)
    with pytest.raises(CheckpointError, match="param.head"):
        loads("\n".join(line for line in dumps(ReinforceAgent()).splitlines() if "param.head" not in line))
