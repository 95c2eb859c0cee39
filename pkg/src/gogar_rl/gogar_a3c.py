"""GOGAR-A3C: a population of participant units trading actor and critic roles.

Each round samples a number of interactions, each pairing an actor unit with
a different critic unit. An interaction runs up to ``t_max`` actor-critic
steps in which the actor's policy chooses actions and the critic's value
function scores them; both units' own parameters are updated in place.
Interactions of one round may run concurrently and a unit may take part in
several of them; each interaction holds the locks of its two units (taken in
id order) while it updates them.

Optionally each interaction is mirrored as a scorekeeping game: the actor
commits to and claims entitlement for every state-action counter it plays,
and the critic challenges the claim whenever the TD error is negative.
"""

import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import ExitStack
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .approx import FeatureMap, greedy_actions
from .bridge import build_token_graph, counter_id, to_gogar_universe
from .errors import PopulationError, RoleError
from .gogar import GameState
from .pg import run_segment
from .rng import UniformStream, make_generator


@dataclass(eq=False)
class ParticipantUnit:
    id: str
    theta: np.ndarray
    w: np.ndarray
    interaction_count: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def params(self):
        return self.theta.copy(), self.w.copy()


def make_population(size, n_actions, dim):
    if size < 2:
        raise PopulationError(f"population must have at least 2 units, got {size}")
    return [ParticipantUnit(f"pu{i}", np.zeros((n_actions, dim)), np.zeros(dim)) for i in range(size)]


@dataclass
class InteractionPlan:
    pairs: list
    t_max: int

    def __post_init__(self):
        for actor, critic in self.pairs:
            if actor == critic:
                raise RoleError(f"unit {actor!r} cannot be its own critic")


def sample_interactions(population, rng, t_max):
    """Draw ``n ~ U{0..C(|P|,2)}`` ordered (actor, critic) pairs with actor != critic."""
    size = len(population)
    if size < 2:
        raise PopulationError(f"population must have at least 2 units, got {size}")
    n = int(rng.integers(0, comb(size, 2) + 1))
    pairs = []
    for _ in range(n):
        actor = int(rng.integers(size))
        critic = int(rng.integers(size - 1))
        if critic >= actor:
            critic += 1
        pairs.append((population[actor].id, population[critic].id))
    return InteractionPlan(pairs, t_max)


@dataclass
class Trace:
    label: str
    game: GameState
    meta: list


def scorekeeping_trace(events, universe, actor_id, critic_id, meta_prefix=(), label=""):
    """Mirror one interaction as a game between ``actor_id`` and ``critic_id``.

    ``events`` are ``(s, a, delta)`` triples. Counters missing from
    ``universe`` (actions off the policy the universe was built from) are
    registered on the fly, which leaves a ``register`` move in the log.
    """
    g = GameState(universe)
    g.join(actor_id)
    g.join(critic_id)
    meta = []
    for step, (s, a, delta) in enumerate(events):
        meta.append((len(g.move_log) + 1, (*meta_prefix, step, "%.17g" % delta)))
        c = counter_id((s, a))
        if c not in g.universe.counters:
            g.register(actor_id, c)
        g.commit(actor_id, c)
        g.entitle(actor_id, c)
        if delta < 0:
            g.challenge(critic_id, actor_id, c)
    return Trace(label, g, meta)


@dataclass
class InteractionResult:
    actor: ParticipantUnit
    critic: ParticipantUnit
    segment: object
    trace: Trace = None


def interaction_thread(actor, critic, mdp, hyper, t_max, seed, trace=False, fm=None,
                       accumulate=False, universe=None, meta_prefix=()):
    """Run one actor/critic interaction of up to ``t_max`` steps.

    ``seed`` may be an int or a :class:`UniformStream` (shared streams let
    successive interactions continue one random sequence). With
    ``accumulate=True`` increments are collected against a snapshot and added
    at the end instead of being applied every step.
    """
    if actor is critic or actor.id == critic.id:
        raise RoleError(f"unit {actor.id!r} cannot be its own critic")
    fm = FeatureMap.for_mdp(mdp) if fm is None else fm
    stream = seed if isinstance(seed, UniformStream) else UniformStream(seed)
    ordered = sorted((actor, critic), key=lambda u: u.id)
    if trace and universe is None:
        with ExitStack() as stack:
            for u in ordered:
                stack.enter_context(u.lock)
            pi = greedy_actions(actor.theta, fm)
        universe = to_gogar_universe(build_token_graph(mdp, pi))
    s = mdp.sample_start(stream)
    if accumulate:
        with ExitStack() as stack:
            for u in ordered:
                stack.enter_context(u.lock)
            theta, w = actor.theta.copy(), critic.w.copy()
        d_theta, d_w = np.zeros_like(theta), np.zeros_like(w)
        seg = run_segment(theta, w, d_theta, d_w, fm, mdp, s, 1.0, hyper, t_max, stream)
        with ExitStack() as stack:
            for u in ordered:
                stack.enter_context(u.lock)
            actor.theta += d_theta
            critic.w += d_w
            actor.interaction_count += 1
            critic.interaction_count += 1
    else:
        with ExitStack() as stack:
            for u in ordered:
                stack.enter_context(u.lock)
            seg = run_segment(actor.theta, critic.w, actor.theta, critic.w, fm, mdp, s, 1.0, hyper,
                              t_max, stream)
            actor.interaction_count += 1
            critic.interaction_count += 1
    tr = None
    if trace:
        events = list(zip(seg.states.tolist(), seg.actions.tolist(), seg.deltas.tolist()))
        label = " ".join(str(x) for x in (*meta_prefix, actor.id, critic.id))
        tr = scorekeeping_trace(events, universe, actor.id, critic.id, meta_prefix, label)
    return InteractionResult(actor, critic, seg, tr)


def run_round(population, plan, mdp, hyper, round_idx, seed, fm=None, trace=False,
              accumulate=False, executor=None):
    """Execute every pair of ``plan``; returns results in plan order.

    Interaction ``k`` of round ``r`` draws from ``UniformStream(seed, 1, r, k)``.
    With an ``executor`` the pairs run concurrently and this call returns
    once all of them have finished.
    """
    by_id = {u.id: u for u in population}
    fm = FeatureMap.for_mdp(mdp) if fm is None else fm

    def one(k):
        actor, critic = plan.pairs[k]
        return interaction_thread(by_id[actor], by_id[critic], mdp, hyper, plan.t_max,
                                  UniformStream(seed, 1, round_idx, k), trace, fm, accumulate,
                                  meta_prefix=(round_idx, k))

    if executor is None or len(plan.pairs) < 2:
        return [one(k) for k in range(len(plan.pairs))]
    return list(executor.map(one, range(len(plan.pairs))))


def train_gogar_a3c(population_size, mdp, hyper, t_max, rounds, seed=0, trace_enabled=False,
                    n_threads=1, accumulate=False, fm=None, on_interaction=None):
    """Train a population for ``rounds`` rounds; returns ``(population, traces)``.

    ``n_threads=1`` is the deterministic mode (pairs run sequentially).
    ``on_interaction(round_idx, pair_idx, result)`` sees every interaction.
    """
    if population_size < 2:
        raise PopulationError(f"population must have at least 2 units, got {population_size}")
    fm = FeatureMap.for_mdp(mdp) if fm is None else fm
    population = make_population(population_size, mdp.n_actions, fm.dim)
    plan_rng = make_generator(seed, 0)
    traces = []
    executor = ThreadPoolExecutor(n_threads) if n_threads > 1 else None
    try:
        for r in range(rounds):
            plan = sample_interactions(population, plan_rng, t_max)
            results = run_round(population, plan, mdp, hyper, r, seed, fm, trace_enabled,
                                accumulate, executor)
            for k, res in enumerate(results):
                if res.trace is not None:
                    traces.append(res.trace)
                if on_interaction is not None:
                    on_interaction(r, k, res)
    finally:
        if executor is not None:
            executor.shutdown()
    return population, traces
