"""Small tanh MLP policies and the policy-gradient agents built on them.

The network maps a state of length ``n_in`` through one tanh hidden layer
to ``n_out`` logits. A ``categorical`` head applies a softmax; a ``gaussian``
head squashes each logit with a sigmoid to obtain the mean of a unit-box
Gaussian with fixed standard deviation. Gradients are computed analytically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..env import N_FEATURES
from ..optimizers import PSOAction
from .base import Agent

GAUSSIAN_SIGMA = 0.1
COEF_SCALE = 2.0  # unit-box action -> acceleration coefficient
MAX_GRAD_NORM = 1e3


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _softmax(x):
    e = np.exp(x - np.max(x))
    return e / e.sum()


class PolicyNet:
    def __init__(self, n_in: int = N_FEATURES, hidden: int = 16, n_out: int = 3, head: str = "gaussian",
                 rng: np.random.Generator | None = None, scale: float = 0.1):
        if head not in ("categorical", "gaussian"):
            raise ValueError(f"unknown head {head!r}")
        self.n_in, self.hidden, self.n_out, self.head = n_in, hidden, n_out, head
        size = n_in * hidden + hidden + hidden * n_out + n_out
        self.theta = np.zeros(size) if rng is None else scale * rng.standard_normal(size)

    @property
    def n_params(self) -> int:
        return self.theta.shape[0]

    def unpack(self, theta=None):
        t = self.theta if theta is None else theta
        i, h, o = self.n_in, self.hidden, self.n_out
        a = 0
        W1 = t[a:a + h * i].reshape(h, i); a += h * i
        b1 = t[a:a + h]; a += h
        W2 = t[a:a + o * h].reshape(o, h); a += o * h
        b2 = t[a:a + o]
        return W1, b1, W2, b2

    def _check(self, theta):
        if not np.all(np.isfinite(theta)):
            raise RuntimeError("policy parameters are not finite")

    def logits(self, state, theta=None):
        t = self.theta if theta is None else theta
        self._check(t)
        W1, b1, W2, b2 = self.unpack(t)
        h = np.tanh(W1 @ np.asarray(state, dtype=float) + b1)
        return W2 @ h + b2, h

    def distribution(self, state, theta=None) -> np.ndarray:
        """Probabilities (categorical) or unit-box means (gaussian)."""
        out, _ = self.logits(state, theta)
        return _softmax(out) if self.head == "categorical" else _sigmoid(out)

    def log_prob(self, state, action, theta=None) -> float:
        out, _ = self.logits(state, theta)
        if self.head == "categorical":
            z = out - np.max(out)
            return float(z[int(action)] - math.log(np.sum(np.exp(z))))
        mu = _sigmoid(out)
        a = np.asarray(action, dtype=float)
        s2 = GAUSSIAN_SIGMA**2
        return float(np.sum(-((a - mu) ** 2) / (2 * s2) - math.log(GAUSSIAN_SIGMA * math.sqrt(2 * math.pi))))

    def grad_log_prob(self, state, action, theta=None) -> np.ndarray:
        """Analytic gradient of ``log_prob`` with respect to the flat parameters."""
        t = self.theta if theta is None else theta
        s = np.asarray(state, dtype=float)
        out, h = self.logits(s, t)
        if self.head == "categorical":
            d_out = -_softmax(out)
            d_out[int(action)] += 1.0
        else:
            mu = _sigmoid(out)
            d_out = (np.asarray(action, dtype=float) - mu) / GAUSSIAN_SIGMA**2 * mu * (1 - mu)
        _, _, W2, _ = self.unpack(t)
        d_pre = (W2.T @ d_out) * (1 - h * h)
        return np.concatenate([np.outer(d_pre, s).ravel(), d_pre, np.outer(d_out, h).ravel(), d_out])

    def sample(self, state, rng: np.random.Generator):
        dist = self.distribution(state)
        if self.head == "categorical":
            return int(rng.choice(self.n_out, p=dist))
        return dist + GAUSSIAN_SIGMA * rng.standard_normal(self.n_out)

    def mode(self, state):
        dist = self.distribution(state)
        return int(np.argmax(dist)) if self.head == "categorical" else dist


def policy_forward(net: PolicyNet, state) -> np.ndarray:
    """Action distribution; gaussian means are mapped onto PSO coefficient ranges."""
    dist = net.distribution(state)
    if net.head == "gaussian" and net.n_out == 3:
        return dist * np.array([1.0, COEF_SCALE, COEF_SCALE])
    return dist


def returns_to_go(rewards, gamma: float) -> np.ndarray:
    out = np.zeros(len(rewards))
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + gamma * acc
        out[t] = acc
    return out


def reinforce_gradient(net: PolicyNet, trajectory, gamma: float, baseline: float = 0.0) -> np.ndarray:
    """``sum_t grad log pi(a_t|s_t) * (G_t - baseline)`` for ``(state, action, reward)`` tuples."""
    g = np.zeros(net.n_params)
    if not trajectory:
        return g
    G = returns_to_go([r for _, _, r in trajectory], gamma)
    for (s, a, _), gt in zip(trajectory, G):
        adv = gt - baseline
        if adv != 0.0:
            g += net.grad_log_prob(s, a) * adv
    return g


def _clip_norm(g, max_norm=MAX_GRAD_NORM):
    n = float(np.linalg.norm(g))
    return g * (max_norm / n) if n > max_norm else g


def reinforce_update(net: PolicyNet, trajectory, learning_rate: float, gamma: float, baseline: float = 0.0) -> PolicyNet:
    if trajectory:
        net.theta = net.theta + learning_rate * _clip_norm(reinforce_gradient(net, trajectory, gamma, baseline))
    return net


def ppo_surrogate(net: PolicyNet, batch, clip: float, theta=None) -> float:
    """Mean clipped surrogate over ``(state, action, old_log_prob, advantage)`` tuples."""
    total = 0.0
    for s, a, old_lp, adv in batch:
        ratio = math.exp(net.log_prob(s, a, theta) - old_lp)
        total += min(ratio * adv, float(np.clip(ratio, 1 - clip, 1 + clip)) * adv)
    return total / len(batch)


def ppo_gradient(net: PolicyNet, batch, clip: float, theta=None) -> np.ndarray:
    g = np.zeros(net.n_params)
    for s, a, old_lp, adv in batch:
        ratio = math.exp(net.log_prob(s, a, theta) - old_lp)
        if (adv > 0 and ratio > 1 + clip) or (adv < 0 and ratio < 1 - clip):
            continue
        g += ratio * adv * net.grad_log_prob(s, a, theta)
    return g / len(batch)


@dataclass
class _Step:
    state: np.ndarray
    action: object
    reward: float
    log_prob: float


class ReinforceAgent(Agent):
    """REINFORCE over PSO's ``(w, c1, c2)`` with a running-mean return baseline."""

    kind = "reinforce"
    backbone_name = "pso"

    def __init__(self, seed: int = 0, pop_size: int = 50, hidden: int = 16, learning_rate: float = 1e-3,
                 gamma: float = 0.99, n_out: int = 3, head: str = "gaussian", baseline_decay: float = 0.9):
        super().__init__(seed, pop_size)
        self.learning_rate = learning_rate
        self.gamma = gamma
        self.baseline = 0.0
        self.baseline_decay = baseline_decay
        self.net = PolicyNet(N_FEATURES, hidden, n_out, head, rng=np.random.default_rng([seed, 1]))
        self._episode: list[_Step] = []

    def act(self, state, explore):
        action = self.net.sample(state, self.rng) if explore else self.net.mode(state)
        return action, None

    def to_action(self, action) -> PSOAction:
        a = np.asarray(action, dtype=float)
        return PSOAction(float(a[0]), COEF_SCALE * float(a[1]), COEF_SCALE * float(a[2]))

    def store(self, state, action, memo, reward, next_state, done):
        self._episode.append(_Step(np.array(state), action, reward, self.net.log_prob(state, action)))

    def finish_episode(self):
        traj = [(st.state, st.action, st.reward) for st in self._episode]
        self._episode = []
        if not traj:
            return
        reinforce_update(self.net, traj, self.learning_rate, self.gamma, self.baseline)
        G = returns_to_go([r for _, _, r in traj], self.gamma)
        self.baseline = self.baseline_decay * self.baseline + (1 - self.baseline_decay) * float(np.mean(G))

    def get_params(self):
        return {
            "hidden": self.net.hidden,
            "n_out": self.net.n_out,
            "head": self.net.head,
            "learning_rate": self.learning_rate,
            "gamma": self.gamma,
            "baseline": self.baseline,
            "baseline_decay": self.baseline_decay,
            "theta": self.net.theta.copy(),
        }

    def set_params(self, params):
        self.learning_rate = float(params["learning_rate"])
        self.gamma = float(params["gamma"])
        self.baseline = float(params["baseline"])
        self.baseline_decay = float(params["baseline_decay"])
        self.net = PolicyNet(N_FEATURES, int(params["hidden"]), int(params["n_out"]), str(params["head"]))
        theta = np.array(params["theta"], dtype=float)
        if theta.shape != self.net.theta.shape:
            raise ValueError(f"theta has {theta.shape[0]} entries, expected {self.net.n_params}")
        self.net.theta = theta


class PPOAgent(ReinforceAgent):
    """Clipped-surrogate variant; one episode per batch, several epochs over it."""

    kind = "ppo"

    def __init__(self, *args, clip: float = 0.2, epochs: int = 3, **kwargs):
        super().__init__(*args, **kwargs)
        self.clip = clip
        self.epochs = epochs

    def finish_episode(self):
        steps, self._episode = self._episode, []
        if not steps:
            return
        G = returns_to_go([st.reward for st in steps], self.gamma)
        batch = [(st.state, st.action, st.log_prob, float(g - self.baseline)) for st, g in zip(steps, G)]
        for _ in range(self.epochs):
            self.net.theta = self.net.theta + self.learning_rate * _clip_norm(ppo_gradient(self.net, batch, self.clip))
        self.baseline = self.baseline_decay * self.baseline + (1 - self.baseline_decay) * float(np.mean(G))

    def get_params(self):
        p = super().get_params()
        p.update(clip=self.clip, epochs=self.epochs)
        return p

    def set_params(self, params):
        super().set_params(params)
        self.clip = float(params["clip"])
        self.epochs = int(params["epochs"])
