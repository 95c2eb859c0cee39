"""Linear value functions, linear-softmax policies and their gradients."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidIndexError, NumericError, ParameterError


class FeatureMap:
    """State features as rows of a fixed ``(n_states, dim)`` matrix.

    Terminal states (if given) keep their feature rows but are valued at 0
    by :func:`value`.
    """

    def __init__(self, matrix, terminals=()):
        m = np.array(matrix, dtype=float, order="C")
        if m.ndim != 2:
            raise ParameterError("feature matrix must be 2-D")
        m.setflags(write=False)
        self.matrix = m
        self.terminals = frozenset(int(s) for s in terminals)

    @classmethod
    def one_hot(cls, n_states, terminals=()):
        return cls(np.eye(n_states), terminals)

    @classmethod
    def for_mdp(cls, mdp, matrix=None):
        if matrix is None:
            return cls.one_hot(mdp.n_states, mdp.terminals)
        return cls(matrix, mdp.terminals)

    @classmethod
    def from_function(cls, encode, n_states, terminals=()):
        return cls([np.asarray(encode(s), dtype=float) for s in range(n_states)], terminals)

    @property
    def dim(self):
        return self.matrix.shape[1]

    @property
    def n_states(self):
        return self.matrix.shape[0]

    def encode(self, s):
        if not 0 <= s < self.n_states:
            raise InvalidIndexError(f"state {s} out of range [0, {self.n_states})")
        return self.matrix[s]


@dataclass
class LinearValueFn:
    w: np.ndarray

    @classmethod
    def zeros(cls, dim):
        return cls(np.zeros(dim))

    def copy(self):
        return LinearValueFn(self.w.copy())


@dataclass
class SoftmaxPolicy:
    """Action probabilities ``softmax(theta @ phi(s))``; ``theta`` is ``(n_actions, dim)``."""

    theta: np.ndarray

    @classmethod
    def zeros(cls, n_actions, dim):
        return cls(np.zeros((n_actions, dim)))

    @property
    def n_actions(self):
        return self.theta.shape[0]

    def copy(self):
        return SoftmaxPolicy(self.theta.copy())


def value(v, fm, s):
    x = fm.encode(s)
    if s in fm.terminals:
        return 0.0
    return float(np.dot(v.w, x))


def value_grad(v, fm, s):
    x = fm.encode(s)
    if s in fm.terminals:
        return np.zeros_like(x)
    return x.copy()


def softmax(scores):
    z = np.exp(scores - np.max(scores))
    return z / z.sum()


def policy_probs(p, fm, s):
    return softmax(p.theta @ fm.encode(s))


def log_policy_grad(p, fm, s, a):
    """Gradient of ``log pi(a|s)`` w.r.t. ``theta``: row b is ``(1[b=a] - pi_b) phi(s)``."""
    probs = policy_probs(p, fm, s)
    if not 0 <= a < p.n_actions:
        raise InvalidIndexError(f"action {a} out of range [0, {p.n_actions})")
    coef = -probs
    coef[a] += 1.0
    return np.outer(coef, fm.encode(s))


def log_policy(p, fm, s, a):
    scores = p.theta @ fm.encode(s)
    m = np.max(scores)
    return float(scores[a] - m - np.log(np.exp(scores - m).sum()))


def greedy_actions(theta, fm):
    """Most probable action per state (ties to the lowest index)."""
    return np.argmax(np.asarray(fm.matrix) @ np.asarray(theta).T, axis=1)


def finite_diff_check(f, grad, x, h=1e-5):
    """Relative error between ``grad`` and central differences of ``f`` at ``x``.

    The error is normwise, ``|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)``
    in the 2-norm, so near-zero components do not turn rounding noise in the
    difference quotient into a large ratio.
    """
    if h <= 0:
        raise ParameterError("h must be positive")
    x = np.array(x, dtype=float)
    grad = np.asarray(grad, dtype=float).reshape(-1)
    flat = x.reshape(-1)
    if grad.size != flat.size:
        raise ParameterError("gradient and parameter sizes differ")
    numeric = np.empty(flat.size)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm_ = f(x)
        flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm_)):
            raise NumericError(f"non-finite function value at coordinate {i}")
        numeric[i] = (fp - fm_) / (2 * h)
    denom = max(np.linalg.norm(grad), np.linalg.norm(numeric), 1e-8)
    return float(np.linalg.norm(grad - numeric) / denom)
