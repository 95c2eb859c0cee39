"""Finite MDPs: model, simulation and the value-iteration oracle."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidIndexError, ParameterError, TerminalStateError, ValidationError

ROW_TOL = 1e-9


def _frozen(arr, dtype=float):
    arr = np.array(arr, dtype=dtype, copy=True, order="C")
    arr.setflags(write=False)
    return arr


class Mdp:
    """A finite MDP with transitions ``T(s'|s,a)`` and rewards ``R(s,a,s')``.

    Arrays are copied and frozen on construction, so an ``Mdp`` can be shared
    freely between threads. Terminal states absorb with reward 0; a terminal
    row given as all zeros is filled with the self-loop.

    Parameters
    ----------
    transition : array_like, shape (n_states, n_actions, n_states)
    reward : array_like, same shape as ``transition``
    gamma : float in [0, 1)
    terminals : iterable of int
    start_dist : array_like, optional
        Defaults to uniform over non-terminal states.
    name : str
        Identifier used as the provenance tag of derived structures.
    """

    def __init__(self, transition, reward, gamma, terminals=(), start_dist=None, name="mdp"):
        T = np.array(transition, dtype=float)
        R = np.array(reward, dtype=float)
        if T.ndim != 3 or T.shape[0] != T.shape[2]:
            raise ValidationError(f"transition must have shape (S, A, S), got {T.shape}")
        if R.shape != T.shape:
            raise ValidationError(f"reward shape {R.shape} does not match transition {T.shape}")
        n_states, n_actions, _ = T.shape
        if n_states < 1 or n_actions < 1:
            raise ValidationError("need at least one state and one action")
        if not 0.0 <= gamma < 1.0:
            raise ValidationError(f"gamma must lie in [0, 1), got {gamma}")
        terminals = frozenset(int(s) for s in terminals)
        for s in terminals:
            if not 0 <= s < n_states:
                raise ValidationError(f"terminal state {s} out of range")
            if not T[s].any():
                T[s, :, s] = 1.0
            if not np.all(T[s, :, s] == 1.0) or np.count_nonzero(T[s]) != n_actions:
                raise ValidationError(f"terminal self-loop: state {s} must self-loop with probability 1")
            if np.any(R[s] != 0.0):
                raise ValidationError(f"terminal reward: state {s} must have zero reward")
        if not np.all(np.isfinite(T)) or np.any(T < 0):
            raise ValidationError("row sum: transition probabilities must be finite and non-negative")
        sums = T.sum(axis=2)
        bad = np.argwhere(np.abs(sums - 1.0) > ROW_TOL)
        if len(bad):
            s, a = bad[0]
            raise ValidationError(f"row sum: T(.|{s},{a}) sums to {sums[s, a]!r}")
        if not np.all(np.isfinite(R)):
            raise ValidationError("rewards must be finite")
        if start_dist is None:
            start = np.array([0.0 if s in terminals else 1.0 for s in range(n_states)])
            if start.sum() == 0:
                start[:] = 1.0
            start /= start.sum()
        else:
            start = np.array(start_dist, dtype=float)
            if start.shape != (n_states,):
                raise ValidationError(f"start_dist must have length {n_states}")
            if np.any(start < 0) or abs(start.sum() - 1.0) > ROW_TOL:
                raise ValidationError("start sum: start_dist must be a probability vector")

        self.transition = _frozen(T)
        self.reward = _frozen(R)
        self.gamma = float(gamma)
        self.terminals = terminals
        self.start_dist = _frozen(start)
        self.name = str(name)
        self.terminal_mask = _frozen([s in terminals for s in range(n_states)], np.uint8)
        self.cum = _frozen(_sampling_table(T))
        self.start_cum = _frozen(_sampling_table(start[None, None, :])[0, 0])

    @property
    def n_states(self):
        return self.transition.shape[0]

    @property
    def n_actions(self):
        return self.transition.shape[1]

    def is_terminal(self, s):
        return s in self.terminals

    def check_state(self, s):
        if not (isinstance(s, (int, np.integer)) and 0 <= s < self.n_states):
            raise InvalidIndexError(f"state {s!r} out of range [0, {self.n_states})")

    def check_action(self, a):
        if not (isinstance(a, (int, np.integer)) and 0 <= a < self.n_actions):
            raise InvalidIndexError(f"action {a!r} out of range [0, {self.n_actions})")

    def sample_start(self, rng):
        return _draw(self.start_cum, rng.random())

    def __eq__(self, other):
        if not isinstance(other, Mdp):
            return NotImplemented
        return (
            self.name == other.name
            and self.gamma == other.gamma
            and self.terminals == other.terminals
            and np.array_equal(self.transition, other.transition)
            and np.array_equal(self.reward, other.reward)
            and np.array_equal(self.start_dist, other.start_dist)
        )

    __hash__ = None

    def __repr__(self):
        return f"Mdp(name={self.name!r}, n_states={self.n_states}, n_actions={self.n_actions}, gamma={self.gamma})"


def _sampling_table(T):
    # Cumulative rows, pinned to exactly 1.0 from the last positive entry on,
    # so a U[0,1) draw always lands on a state with positive probability.
    cum = np.cumsum(T, axis=-1)
    n = T.shape[-1]
    last = n - 1 - np.argmax(T[..., ::-1] > 0, axis=-1)
    cum[np.arange(n) >= last[..., None]] = 1.0
    return cum


def _draw(cum_row, u):
    return min(int(np.searchsorted(cum_row, u, side="right")), len(cum_row) - 1)


@dataclass
class Episode:
    """Trajectory ``S_0, A_0, R_1, ...``; ``steps[t] = (S_t, A_t, R_{t+1})``."""

    steps: list = field(default_factory=list)
    final_state: int = 0

    def __len__(self):
        return len(self.steps)

    @property
    def states(self):
        return [s for s, _, _ in self.steps]

    @property
    def actions(self):
        return [a for _, a, _ in self.steps]

    @property
    def rewards(self):
        return [r for _, _, r in self.steps]


def step(mdp, s, a, rng):
    """Sample one transition; returns ``(s_next, reward)``."""
    mdp.check_state(s)
    mdp.check_action(a)
    if mdp.is_terminal(s):
        raise TerminalStateError(f"state {s} is terminal")
    sn = _draw(mdp.cum[s, a], rng.random())
    return sn, float(mdp.reward[s, a, sn])


def generate_episode(mdp, policy, rng, max_len, start=None):
    """Roll out ``policy(s, rng) -> a`` until a terminal state or ``max_len`` steps."""
    if max_len < 1:
        raise ParameterError("max_len must be >= 1")
    s = mdp.sample_start(rng) if start is None else start
    mdp.check_state(s)
    steps = []
    while not mdp.is_terminal(s) and len(steps) < max_len:
        a = policy(s, rng)
        sn, r = step(mdp, s, a, rng)
        steps.append((s, a, r))
        s = sn
    return Episode(steps, s)


def discounted_return(rewards, gamma, t=0):
    """``sum_k gamma**k * rewards[t + k]``."""
    if not 0 <= t < len(rewards):
        raise InvalidIndexError(f"t={t} out of range for {len(rewards)} rewards")
    g = 0.0
    for r in reversed(rewards[t:]):
        g = r + gamma * g
    return g


def all_returns(rewards, gamma):
    """Returns from every step; ``out[t] == discounted_return(rewards, gamma, t)``."""
    out = np.empty(len(rewards))
    g = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        g = rewards[t] + gamma * g
        out[t] = g
    return out


def q_from_values(mdp, V):
    """One-step lookahead ``Q(s,a) = sum_s' T (R + gamma V(s'))``."""
    return (mdp.transition * (mdp.reward + mdp.gamma * V[None, None, :])).sum(axis=2)


def value_iteration(mdp, tol=1e-10, max_iter=100_000):
    """Optimal values and the greedy policy (ties to the lowest action).

    Stops once successive iterates differ by less than ``tol`` in sup-norm,
    which bounds the Bellman residual of the returned values by ``gamma*tol``.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    V = np.zeros(mdp.n_states)
    for _ in range(max_iter):
        V_new = q_from_values(mdp, V).max(axis=1)
        V_new[mdp.terminal_mask.astype(bool)] = 0.0
        diff = np.max(np.abs(V_new - V))
        V = V_new
        if diff < tol:
            break
    pi = np.argmax(q_from_values(mdp, V), axis=1)
    return V, pi


def optimal_action_sets(mdp, V, tol=1e-8):
    """Per state, the actions whose one-step value is within ``tol`` of the best."""
    Q = q_from_values(mdp, V)
    best = Q.max(axis=1, keepdims=True)
    return [frozenset(np.flatnonzero(row >= b - tol).tolist()) for row, b in zip(Q, best)]


def unique_optimal_states(mdp, V, tol=1e-8):
    """Map of non-terminal states with a single optimal action to that action."""
    return {
        s: next(iter(acts))
        for s, acts in enumerate(optimal_action_sets(mdp, V, tol))
        if len(acts) == 1 and not mdp.is_terminal(s)
    }


def policy_evaluation(mdp, pi):
    """Exact ``V^pi`` by a linear solve.

    ``pi`` is either an action per state or an ``(n_states, n_actions)``
    matrix of action probabilities.
    """
    n = mdp.n_states
    pi = np.asarray(pi)
    if pi.ndim == 1:
        probs = np.zeros((n, mdp.n_actions))
        probs[np.arange(n), pi] = 1.0
    else:
        probs = pi
    P = np.einsum("sa,sat->st", probs, mdp.transition)
    r = np.einsum("sa,sat,sat->s", probs, mdp.transition, mdp.reward)
    term = mdp.terminal_mask.astype(bool)
    P[term] = 0.0
    r[term] = 0.0
    return np.linalg.solve(np.eye(n) - mdp.gamma * P, r)
