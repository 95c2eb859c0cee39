"""Asynchronous advantage actor-critic over a shared parameter store.

Each worker snapshots the global parameters, runs up to ``t_max`` steps of
its own episode against that snapshot while accumulating increments, then
adds the accumulated increments to the store in one locked operation.
Gradients computed on stale snapshots are applied unmodified.
"""

import logging
import threading
import warnings
from dataclasses import dataclass, field

import numpy as np

from .approx import FeatureMap
from .errors import ParameterError, ShapeError
from .pg import run_segment
from .rng import UniformStream, derive_seed

log = logging.getLogger(__name__)


class EmptyAccumulatorWarning(UserWarning):
    pass


@dataclass
class GradientAccumulator:
    d_theta: np.ndarray
    d_w: np.ndarray
    n_steps: int = 0

    @classmethod
    def zeros(cls, n_actions, dim):
        return cls(np.zeros((n_actions, dim)), np.zeros(dim))

    def reset(self):
        self.d_theta[...] = 0.0
        self.d_w[...] = 0.0
        self.n_steps = 0


def accumulate(acc, delta, v_grad, lp_grad, I, alpha, beta):
    """Add one step's critic and actor increments; returns ``acc``."""
    v_grad = np.asarray(v_grad)
    lp_grad = np.asarray(lp_grad)
    if v_grad.shape != acc.d_w.shape or lp_grad.shape != acc.d_theta.shape:
        raise ShapeError(
            f"gradient shapes {v_grad.shape}, {lp_grad.shape} do not match "
            f"accumulator {acc.d_w.shape}, {acc.d_theta.shape}")
    acc.d_w += beta * delta * v_grad
    acc.d_theta += alpha * I * delta * lp_grad
    acc.n_steps += 1
    return acc


@dataclass
class LedgerEntry:
    d_theta: np.ndarray
    d_w: np.ndarray
    snapshot_count: int
    apply_count: int


class GlobalParams:
    """Shared ``(theta, w)`` store.

    Snapshots and applies are serialized by one lock, so every snapshot sees
    a state between two whole applications. ``budget`` caps how many
    segments workers may claim; ``keep_ledger`` records every applied delta.
    """

    def __init__(self, theta, w, budget=None, keep_ledger=False):
        self.theta = np.array(theta, dtype=float)
        self.w = np.array(w, dtype=float)
        self.initial_theta = self.theta.copy()
        self.initial_w = self.w.copy()
        self.update_count = 0
        self.budget = budget
        self.claimed = 0
        self.ledger = [] if keep_ledger else None
        self._lock = threading.Lock()

    @classmethod
    def zeros(cls, n_actions, dim, **kw):
        return cls(np.zeros((n_actions, dim)), np.zeros(dim), **kw)

    def claim(self):
        """Reserve one segment of the budget; False once it is exhausted."""
        with self._lock:
            if self.budget is not None and self.claimed >= self.budget:
                return False
            self.claimed += 1
            return True

    def snapshot(self):
        with self._lock:
            return self.theta.copy(), self.w.copy(), self.update_count

    def apply(self, acc, snapshot_count=None):
        if acc.n_steps < 1:
            warnings.warn("empty accumulator; nothing applied", EmptyAccumulatorWarning, stacklevel=2)
            return False
        with self._lock:
            self.theta += acc.d_theta
            self.w += acc.d_w
            if self.ledger is not None:
                count = self.update_count if snapshot_count is None else snapshot_count
                self.ledger.append(LedgerEntry(acc.d_theta.copy(), acc.d_w.copy(), count, self.update_count))
            self.update_count += 1
        acc.reset()
        return True


def async_apply(store, acc, snapshot_count=None):
    return store.apply(acc, snapshot_count)


@dataclass
class WorkerState:
    """Episode position carried by a worker between segments."""

    state: int = None
    I: float = 1.0
    episode_len: int = 0
    segments: int = 0
    returns: list = field(default_factory=list)


def worker_loop(store, mdp, hyper, t_max, seed, stop, fm=None, on_segment=None, worker_id=0):
    """Body of one A3C worker; returns its :class:`WorkerState` when stopped.

    Stops when ``stop`` is set or the store's segment budget runs out. An
    episode spans as many segments as it needs; ``I`` carries across them and
    resets with the episode.
    """
    if t_max < 1:
        raise ParameterError(f"t_max must be >= 1, got {t_max}")
    fm = FeatureMap.for_mdp(mdp) if fm is None else fm
    stream = UniformStream(seed)
    acc = GradientAccumulator.zeros(mdp.n_actions, fm.dim)
    ws = WorkerState()
    while not stop.is_set() and store.claim():
        theta, w, count = store.snapshot()
        if ws.state is None:
            ws.state = mdp.sample_start(stream)
            ws.I = 1.0
            ws.episode_len = 0
        n = min(t_max, hyper.t_cap - ws.episode_len)
        seg = run_segment(theta, w, acc.d_theta, acc.d_w, fm, mdp, ws.state, ws.I, hyper, n, stream)
        acc.n_steps += len(seg)
        ws.episode_len += len(seg)
        ws.I = seg.I
        ws.state = seg.state
        if seg.done or ws.episode_len >= hyper.t_cap:
            ws.state = None
        ws.segments += 1
        if acc.n_steps:
            store.apply(acc, count)
        if on_segment is not None:
            on_segment(worker_id, seg, store.update_count)
    return ws


def train_a3c(mdp, n_threads, hyper, t_max, total_segments, seed=0, fm=None, keep_ledger=False,
              on_segment=None, stop=None):
    """Train with ``n_threads`` workers until ``total_segments`` segments are applied.

    With one thread the worker uses ``seed`` directly and the run is
    deterministic; otherwise worker ``i`` gets ``derive_seed(seed, i)``.
    """
    if n_threads < 1:
        raise ParameterError(f"n_threads must be >= 1, got {n_threads}")
    fm = FeatureMap.for_mdp(mdp) if fm is None else fm
    store = GlobalParams.zeros(mdp.n_actions, fm.dim, budget=total_segments, keep_ledger=keep_ledger)
    stop = threading.Event() if stop is None else stop
    seeds = [seed] if n_threads == 1 else [derive_seed(seed, i) for i in range(n_threads)]
    if n_threads == 1:
        worker_loop(store, mdp, hyper, t_max, seeds[0], stop, fm, on_segment, 0)
        return store
    errors = []

    def target(i):
        try:
            worker_loop(store, mdp, hyper, t_max, seeds[i], stop, fm, on_segment, i)
        except BaseException as exc:  # surfaced after join
            errors.append(exc)
            stop.set()

    threads = [threading.Thread(target=target, args=(i,), name=f"a3c-worker-{i}") for i in range(n_threads)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    log.debug("a3c finished: %d updates", store.update_count)
    return store
