"""Tabular Q-learning with epsilon-greedy exploration."""

import math

import numpy as np

from . import kernels
from .errors import InvalidIndexError, NumericError, ParameterError
from .rng import UniformStream


def new_qtable(n_states, n_actions):
    return np.zeros((n_states, n_actions))


def _argmax_low(row):
    best = 0
    for b in range(1, len(row)):
        if row[b] > row[best]:
            best = b
    return best


def epsilon_greedy(q, s, epsilon, rng):
    """Greedy action w.p. ``1 - epsilon`` (ties to the lowest index), else uniform."""
    if not 0.0 <= epsilon <= 1.0:
        raise ParameterError(f"epsilon must lie in [0, 1], got {epsilon}")
    if not 0 <= s < q.shape[0]:
        raise InvalidIndexError(f"state {s} out of range")
    n_actions = q.shape[1]
    if rng.random() < epsilon:
        return min(int(rng.random() * n_actions), n_actions - 1)
    return _argmax_low(q[s])


def q_update(q, s, a, r, s_next, alpha, gamma, terminal_next):
    """One Q-learning backup, in place; returns ``q``."""
    if not math.isfinite(r):
        raise NumericError(f"reward must be finite, got {r}")
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    target = r if terminal_next else r + gamma * q[s_next].max()
    q[s, a] = q[s, a] + alpha * (target - q[s, a])
    return q


def greedy_policy(q):
    return np.argmax(q, axis=1)


def train_q(mdp, episodes, alpha=0.1, epsilon=0.1, seed=0, gamma=None, step_cap=None,
            q=None, on_episode=None):
    """Run Q-learning for ``episodes`` episodes and return the Q-table.

    ``gamma`` defaults to the MDP's discount and ``step_cap`` to
    ``10 * n_states``. ``on_episode(index, ret, length, td_abs_mean)`` is
    called after each episode.
    """
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    if not 0.0 <= epsilon <= 1.0:
        raise ParameterError(f"epsilon must lie in [0, 1], got {epsilon}")
    gamma = mdp.gamma if gamma is None else gamma
    if not 0.0 <= gamma < 1.0:
        raise ParameterError(f"gamma must lie in [0, 1), got {gamma}")
    cap = 10 * mdp.n_states if step_cap is None else step_cap
    q = new_qtable(mdp.n_states, mdp.n_actions) if q is None else q
    stream = UniformStream(seed)
    for ep in range(episodes):
        s = mdp.sample_start(stream)
        buf = stream.ensure(3 * cap)
        _, n, stream.pos, ret, _, td_abs = kernels.q_run(
            q, mdp.cum, mdp.reward, mdp.terminal_mask, s, alpha, gamma, epsilon,
            cap, buf, stream.pos)
        if on_episode is not None:
            on_episode(ep, ret, n, td_abs / n if n else 0.0)
    return q
