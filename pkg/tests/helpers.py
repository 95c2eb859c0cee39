"""Random generators shared by the property tests and the acceptance suite."""

import numpy as np

from gogar_rl.gogar import CounterUniverse, GameState
from gogar_rl.mdp import Mdp

MOVE_KINDS = ("commit", "entitle", "challenge", "assert", "register")


def random_universe(rng, max_counters=50, edge_p=None, cyclic=True):
    n = int(rng.integers(1, max_counters + 1))
    names = [f"c{i}" for i in range(n)]
    p = edge_p if edge_p is not None else min(0.5, 2.0 / n)
    cc = {}
    for i in range(n):
        for j in range(n):
            if i != j and (cyclic or j > i) and rng.random() < p:
                cc.setdefault(names[i], set()).add(names[j])
    return CounterUniverse(names, cc)


def snapshot(g):
    return {pid: (frozenset(ps.commitment_box), frozenset(ps.entitlement_box), frozenset(ps.defend_pledges))
            for pid, ps in g.participants.items()}


def play_random_game(rng, universe, n_moves, n_players=3, transitive=True, check=None):
    """Apply ``n_moves`` random legal moves; ``check(g, before, move)`` runs after each one."""
    g = GameState(universe, transitive)
    players = [f"p{i}" for i in range(n_players)]
    for pid in players:
        g.join(pid)
    fresh = 0
    for _ in range(n_moves):
        before = snapshot(g)
        kind = MOVE_KINDS[int(rng.integers(len(MOVE_KINDS)))]
        actor = players[int(rng.integers(n_players))]
        counters = sorted(g.universe.counters)
        if kind == "register":
            g.register(actor, f"lazy{fresh}")
            fresh += 1
        elif kind == "commit":
            g.commit(actor, counters[int(rng.integers(len(counters)))])
        elif kind == "entitle":
            box = sorted(g.participants[actor].commitment_box)
            if not box:
                continue
            g.entitle(actor, box[int(rng.integers(len(box)))])
        elif kind == "challenge":
            others = [p for p in players if p != actor]
            target = others[int(rng.integers(len(others)))]
            ent = sorted(g.participants[target].entitlement_box)
            if not ent:
                continue
            g.challenge(actor, target, ent[int(rng.integers(len(ent)))])
        else:
            target = players[int(rng.integers(n_players))]
            g.assess(actor, target, counters[int(rng.integers(len(counters)))])
        if check is not None:
            check(g, before, g.move_log[-1])
    return g


def random_mdp_small(rng, max_states=10, max_actions=4):
    """Random MDP with sparse rows; some states terminal."""
    n = int(rng.integers(1, max_states + 1))
    k = int(rng.integers(1, max_actions + 1))
    n_term = int(rng.integers(0, n))
    terminals = rng.choice(n, size=n_term, replace=False).tolist()
    T = np.zeros((n, k, n))
    for s in range(n):
        if s in terminals:
            continue
        for a in range(k):
            support = rng.random(n) < rng.uniform(0.1, 0.7)
            support[rng.integers(n)] = True
            row = rng.random(n) * support
            T[s, a] = row / row.sum()
    R = rng.normal(size=T.shape) * (T > 0)
    return Mdp(T, R, 0.9, terminals, name=f"rand{n}x{k}")


def random_policy(rng, mdp):
    return [None if mdp.is_terminal(s) else int(rng.integers(mdp.n_actions)) for s in range(mdp.n_states)]
