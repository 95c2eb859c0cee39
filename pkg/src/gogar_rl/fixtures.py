"""Canonical environments and random MDP generators.

The three canonical environments are also shipped as ``.mdp`` files under
``gogar_rl/data`` (see :func:`fixture_path`).
"""

from importlib import resources

import numpy as np

from .mdp import Mdp

FIXTURES = ("chain3", "randomwalk5", "grid4x4")


def chain(gamma=0.9):
    """Three states ``0 -> 1 -> 2``; action 0 advances, action 1 falls back.

    Reward 1 is paid only on entering the terminal state 2, so the optimal
    values are ``V(1) = 1`` and ``V(0) = gamma``.
    """
    T = np.zeros((3, 2, 3))
    R = np.zeros((3, 2, 3))
    T[0, 0, 1] = 1.0
    T[0, 1, 0] = 1.0
    T[1, 0, 2] = 1.0
    T[1, 1, 0] = 1.0
    R[1, 0, 2] = 1.0
    start = [1.0, 0.0, 0.0]
    return Mdp(T, R, gamma, terminals=[2], start_dist=start, name="chain3")


def random_walk(gamma=0.9, slip=0.2):
    """Five states in a line with terminals at both ends.

    Actions are left (0) and right (1); the opposite move happens with
    probability ``slip``. Entering the right end pays 1. Starts in the middle.
    """
    n = 5
    T = np.zeros((n, 2, n))
    R = np.zeros((n, 2, n))
    for s in range(1, n - 1):
        for a, (main, other) in enumerate(((s - 1, s + 1), (s + 1, s - 1))):
            T[s, a, main] += 1.0 - slip
            T[s, a, other] += slip
        if s == n - 2:
            R[s, :, n - 1] = 1.0
    start = np.zeros(n)
    start[2] = 1.0
    return Mdp(T, R, gamma, terminals=[0, n - 1], start_dist=start, name="randomwalk5")


GRID_MOVES = ((-1, 0), (0, 1), (1, 0), (0, -1))  # up, right, down, left


def gridworld(size=4, gamma=0.9, step_reward=-1.0):
    """``size x size`` grid, goal in the bottom-right corner.

    Every move costs ``step_reward`` (entering the goal included); moving into
    a wall leaves the agent in place. Start is uniform over non-goal cells.
    """
    n = size * size
    goal = n - 1
    T = np.zeros((n, 4, n))
    R = np.zeros((n, 4, n))
    for s in range(n):
        if s == goal:
            continue
        r, c = divmod(s, size)
        for a, (dr, dc) in enumerate(GRID_MOVES):
            nr, nc = r + dr, c + dc
            if not (0 <= nr < size and 0 <= nc < size):
                nr, nc = r, c
            sn = nr * size + nc
            T[s, a, sn] = 1.0
            R[s, a, sn] = step_reward
    return Mdp(T, R, gamma, terminals=[goal], name=f"grid{size}x{size}")


def random_mdp(rng, n_states, n_actions, gamma=0.9, n_terminals=None, sparsity=0.5, name="random"):
    """Random MDP with sparse transition rows and normal rewards."""
    if n_terminals is None:
        n_terminals = int(rng.integers(0, max(1, n_states // 3) + 1))
    n_terminals = min(n_terminals, n_states - 1)
    terminals = rng.choice(n_states, size=n_terminals, replace=False).tolist()
    T = np.zeros((n_states, n_actions, n_states))
    R = np.zeros_like(T)
    for s in range(n_states):
        if s in terminals:
            continue
        for a in range(n_actions):
            mask = rng.random(n_states) >= sparsity
            mask[rng.integers(n_states)] = True
            w = rng.random(n_states) * mask
            T[s, a] = w / w.sum()
            R[s, a] = rng.normal(size=n_states) * mask
    return Mdp(T, R, gamma, terminals=terminals, name=name)


def fixture_path(name):
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {FIXTURES}")
    return resources.files("gogar_rl") / "data" / f"{name}.mdp"


def builtin(name):
    return {"chain3": chain, "randomwalk5": random_walk, "grid4x4": gridworld}[name]()
