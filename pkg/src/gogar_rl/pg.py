"""REINFORCE and one-step actor-critic.

:func:`run_segment` is the shared driver around the compiled kernel; A3C and
GOGAR-A3C call it with different choices of read and update arrays.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .approx import FeatureMap, LinearValueFn, SoftmaxPolicy, log_policy_grad, value, value_grad
from .errors import InputError, NumericError, ParameterError
from .mdp import Episode, all_returns
from .rng import UniformStream


@dataclass(frozen=True)
class AcHyper:
    """Actor step ``alpha``, critic step ``beta``, discount ``gamma``, episode step cap."""

    alpha: float = 0.1
    beta: float = 0.2
    gamma: float = 0.9
    t_cap: int = 100

    def __post_init__(self):
        for name in ("alpha", "beta"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ParameterError(f"{name} must be positive and finite, got {val}")
        if not 0.0 <= self.gamma < 1.0:
            raise ParameterError(f"gamma must lie in [0, 1), got {self.gamma}")
        if int(self.t_cap) != self.t_cap or self.t_cap < 1:
            raise ParameterError(f"t_cap must be a positive integer, got {self.t_cap}")


def td_error(r, gamma, v, fm, s, s_next, terminal_next):
    if not (math.isfinite(r) and math.isfinite(gamma)):
        raise NumericError("reward and gamma must be finite")
    boot = 0.0 if terminal_next else value(v, fm, s_next)
    delta = r + gamma * boot - value(v, fm, s)
    if not math.isfinite(delta):
        raise NumericError("non-finite TD error")
    return delta


def actor_critic_step(p, v, fm, s, a, r, s_next, I, hyper, terminal_next):
    """One actor-critic update, in place; returns ``(p, v, I)``.

    The TD error uses the critic before its update, and the actor gradient is
    taken at the policy that chose ``a``.
    """
    if not I > 0:
        raise ParameterError(f"I must be positive, got {I}")
    delta = td_error(r, hyper.gamma, v, fm, s, s_next, terminal_next)
    grad_logp = log_policy_grad(p, fm, s, a)
    v.w += hyper.beta * delta * value_grad(v, fm, s)
    p.theta += hyper.alpha * I * delta * grad_logp
    return p, v, hyper.gamma * I


def reinforce_update(p, fm, episode, alpha, gamma):
    """Apply one REINFORCE pass over ``episode``, in place; returns ``p``.

    Returns and log-policy gradients are all taken from the episode as
    generated, i.e. at the pre-update ``theta``, so the total increment is
    linear in the rewards.
    """
    if not len(episode):
        raise InputError("episode is empty")
    states = np.array(episode.states)
    actions = np.array(episode.actions)
    G = all_returns(episode.rewards, gamma)
    coef = alpha * gamma ** np.arange(len(G)) * G
    X = fm.matrix[states]
    scores = X @ p.theta.T
    P = np.exp(scores - scores.max(axis=1, keepdims=True))
    P /= P.sum(axis=1, keepdims=True)
    E = -P
    E[np.arange(len(actions)), actions] += 1.0
    p.theta += (coef[:, None] * E).T @ X
    return p


@dataclass
class Segment:
    """Outcome of :func:`run_segment`: end state, step logs and the decayed ``I``."""

    state: int
    done: bool
    I: float
    states: np.ndarray
    actions: np.ndarray
    next_states: np.ndarray
    rewards: np.ndarray
    deltas: np.ndarray

    def __len__(self):
        return len(self.states)

    def episode(self):
        steps = [(int(s), int(a), float(r)) for s, a, r in zip(self.states, self.actions, self.rewards)]
        return Episode(steps, int(self.state))


def run_segment(theta, w, d_theta, d_w, fm, mdp, s, I, hyper, max_steps, stream, learn=True):
    """Run up to ``max_steps`` steps of actor-critic from ``s``.

    The actor is ``theta`` and the critic ``w``; increments go to ``d_theta``
    and ``d_w`` (pass the same arrays for in-place learning).
    """
    buf = stream.ensure(2 * max_steps)
    log_s = np.empty(max_steps, np.int64)
    log_a = np.empty(max_steps, np.int64)
    log_sn = np.empty(max_steps, np.int64)
    log_r = np.empty(max_steps)
    log_d = np.empty(max_steps)
    s, n, stream.pos, I, done = kernels.ac_run(
        theta, w, d_theta, d_w, fm.matrix, mdp.cum, mdp.reward, mdp.terminal_mask,
        s, I, hyper.alpha, hyper.beta, hyper.gamma, max_steps, learn, buf, stream.pos,
        log_s, log_a, log_sn, log_r, log_d)
    return Segment(s, bool(done), I, log_s[:n], log_a[:n], log_sn[:n], log_r[:n], log_d[:n])


def train_actor_critic(mdp, hyper, episodes, seed=0, fm=None, policy=None, value_fn=None,
                       on_episode=None):
    """Run the one-step actor-critic for ``episodes`` episodes.

    ``I`` restarts at 1 every episode and each episode stops at the terminal
    state or after ``hyper.t_cap`` steps. Returns ``(policy, value_fn)``.
    """
    fm = FeatureMap.for_mdp(mdp) if fm is None else fm
    p = SoftmaxPolicy.zeros(mdp.n_actions, fm.dim) if policy is None else policy
    v = LinearValueFn.zeros(fm.dim) if value_fn is None else value_fn
    stream = UniformStream(seed)
    for ep in range(episodes):
        s = mdp.sample_start(stream)
        seg = run_segment(p.theta, v.w, p.theta, v.w, fm, mdp, s, 1.0, hyper, hyper.t_cap, stream)
        if on_episode is not None:
            on_episode(ep, seg)
    return p, v


def train_reinforce(mdp, alpha, episodes, seed=0, gamma=None, t_cap=100, fm=None, policy=None,
                    on_episode=None):
    """Monte-Carlo policy gradient; returns the trained :class:`SoftmaxPolicy`."""
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    gamma = mdp.gamma if gamma is None else gamma
    hyper = AcHyper(alpha=alpha, beta=1.0, gamma=gamma, t_cap=t_cap)
    fm = FeatureMap.for_mdp(mdp) if fm is None else fm
    p = SoftmaxPolicy.zeros(mdp.n_actions, fm.dim) if policy is None else policy
    w = np.zeros(fm.dim)
    stream = UniformStream(seed)
    for ep in range(episodes):
        s = mdp.sample_start(stream)
        seg = run_segment(p.theta, w, p.theta, w, fm, mdp, s, 1.0, hyper, t_cap, stream, learn=False)
        if len(seg):
            reinforce_update(p, fm, seg.episode(), alpha, gamma)
        if on_episode is not None:
            on_episode(ep, seg)
    return p
