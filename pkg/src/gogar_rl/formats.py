"""Line-oriented text formats for MDPs and learned parameters.

MDP files::

    name chain3
    states 3
    actions 2
    gamma 0.9
    terminal 2
    start 0 1.0
    t 0 0 1 1.0
    r 1 0 2 1.0

Unlisted transitions have probability 0 and unlisted rewards are 0. ``#``
starts a comment. :func:`dump_mdp` writes the canonical form (fixed line
order, shortest round-trip floats), which :func:`parse_mdp` reads back
byte-exactly.

Checkpoints store floats as ``%.17g`` so every double round-trips.
"""

from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .mdp import Mdp


def _tokens(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _num(tok, kind, lineno, source):
    try:
        return kind(tok)
    except ValueError:
        raise ParseError(f"expected {kind.__name__}, got {tok!r}", lineno, source) from None


def parse_mdp(text, source=None, default_name="mdp"):
    header = {}
    terminals = []
    start = []
    trans = {}
    rewards = {}
    for lineno, toks in _tokens(text):
        key, args = toks[0], toks[1:]

        def need(n):
            if len(args) != n:
                raise ParseError(f"{key!r} takes {n} fields, got {len(args)}", lineno, source)

        if key in ("states", "actions"):
            need(1)
            header[key] = _num(args[0], int, lineno, source)
        elif key == "gamma":
            need(1)
            header[key] = _num(args[0], float, lineno, source)
        elif key == "name":
            need(1)
            header[key] = args[0]
        elif key == "terminal":
            terminals.extend(_num(x, int, lineno, source) for x in args)
        elif key == "start":
            if not args or len(args) % 2:
                raise ParseError("'start' takes state/probability pairs", lineno, source)
            for i in range(0, len(args), 2):
                start.append((_num(args[i], int, lineno, source), _num(args[i + 1], float, lineno, source)))
        elif key in ("t", "r"):
            need(4)
            idx = tuple(_num(x, int, lineno, source) for x in args[:3])
            table = trans if key == "t" else rewards
            if idx in table:
                raise ParseError(f"duplicate {key!r} entry for {idx}", lineno, source)
            table[idx] = (_num(args[3], float, lineno, source), lineno)
        else:
            raise ParseError(f"unknown directive {key!r}", lineno, source)

    for key in ("states", "actions", "gamma"):
        if key not in header:
            raise ParseError(f"missing {key!r} line", None, source)
    n_states, n_actions = header["states"], header["actions"]
    if n_states < 1 or n_actions < 1:
        raise ValidationError("states and actions must be positive")
    T = np.zeros((n_states, n_actions, n_states))
    R = np.zeros_like(T)
    for table, arr in ((trans, T), (rewards, R)):
        for (s, a, sn), (val, lineno) in table.items():
            if not (0 <= s < n_states and 0 <= a < n_actions and 0 <= sn < n_states):
                raise ParseError(f"index out of range in ({s}, {a}, {sn})", lineno, source)
            arr[s, a, sn] = val
    start_dist = None
    if start:
        start_dist = np.zeros(n_states)
        for s, p in start:
            if not 0 <= s < n_states:
                raise ParseError(f"start state {s} out of range", None, source)
            start_dist[s] += p
    return Mdp(T, R, header["gamma"], terminals, start_dist, name=header.get("name", default_name))


def load_mdp(path):
    path = Path(path)
    return parse_mdp(path.read_text(), source=str(path), default_name=path.stem)


def dump_mdp(mdp):
    lines = [
        f"name {mdp.name}",
        f"states {mdp.n_states}",
        f"actions {mdp.n_actions}",
        f"gamma {mdp.gamma!r}",
    ]
    if mdp.terminals:
        lines.append("terminal " + " ".join(str(s) for s in sorted(mdp.terminals)))
    pairs = [f"{s} {float(p)!r}" for s, p in enumerate(mdp.start_dist) if p != 0.0]
    lines.append("start " + " ".join(pairs))
    for s, a, sn in zip(*np.nonzero(mdp.transition)):
        if s not in mdp.terminals:
            lines.append(f"t {s} {a} {sn} {float(mdp.transition[s, a, sn])!r}")
    for s, a, sn in zip(*np.nonzero(mdp.reward)):
        lines.append(f"r {s} {a} {sn} {float(mdp.reward[s, a, sn])!r}")
    return "\n".join(lines) + "\n"


def save_mdp(mdp, path):
    Path(path).write_text(dump_mdp(mdp))


def _fmt(x):
    return "%.17g" % x


def dump_qtable(q):
    q = np.asarray(q)
    lines = [f"qtable {q.shape[0]} {q.shape[1]}"]
    lines += [" ".join(_fmt(x) for x in row) for row in q]
    return "\n".join(lines) + "\n"


def dump_population(units):
    """Serialize ``(id, theta, w, interaction_count)`` records.

    Layout: ``population <size> <n_actions> <dim>`` then, per unit, a
    ``unit <id> <interaction_count>`` line, one ``theta`` line per action and
    one ``w`` line.
    """
    units = list(units)
    n_actions, dim = np.asarray(units[0][1]).shape if units else (0, 0)
    lines = [f"population {len(units)} {n_actions} {dim}"]
    for uid, theta, w, count in units:
        lines.append(f"unit {uid} {count}")
        lines += ["theta " + " ".join(_fmt(x) for x in row) for row in np.asarray(theta)]
        lines.append("w " + " ".join(_fmt(x) for x in np.asarray(w)))
    return "\n".join(lines) + "\n"


def parse_checkpoint(text, source=None):
    """Parse a checkpoint; returns ``("qtable", array)`` or ``("population", records)``."""
    toks = list(_tokens(text))
    if not toks:
        raise ParseError("empty checkpoint", None, source)
    lineno, head = toks[0]
    if head[0] == "qtable":
        n_s, n_a = (_num(x, int, lineno, source) for x in head[1:3])
        rows = [[_num(x, float, ln, source) for x in t] for ln, t in toks[1:]]
        q = np.array(rows, dtype=float)
        if q.shape != (n_s, n_a):
            raise ParseError(f"qtable shape {q.shape} != ({n_s}, {n_a})", lineno, source)
        return "qtable", q
    if head[0] != "population":
        raise ParseError(f"unknown checkpoint kind {head[0]!r}", lineno, source)
    size, n_a, dim = (_num(x, int, lineno, source) for x in head[1:4])
    records = []
    i = 1
    for _ in range(size):
        ln, t = toks[i]
        if t[0] != "unit" or len(t) != 3:
            raise ParseError("expected 'unit <id> <count>'", ln, source)
        uid, count = t[1], _num(t[2], int, ln, source)
        theta = []
        for ln, t in toks[i + 1:i + 1 + n_a]:
            if t[0] != "theta" or len(t) != dim + 1:
                raise ParseError("malformed theta row", ln, source)
            theta.append([_num(x, float, ln, source) for x in t[1:]])
        ln, t = toks[i + 1 + n_a]
        if t[0] != "w" or len(t) != dim + 1:
            raise ParseError("malformed w row", ln, source)
        w = [_num(x, float, ln, source) for x in t[1:]]
        records.append((uid, np.array(theta, dtype=float).reshape(n_a, dim), np.array(w), count))
        i += n_a + 2
    return "population", records


def load_checkpoint(path):
    path = Path(path)
    return parse_checkpoint(path.read_text(), source=str(path))
