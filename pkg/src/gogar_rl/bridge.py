"""Deterministic MDP policies as committive-consequence structures.

A policy becomes a set of state-action tokens ``(s, pi(s))``, one per
non-terminal state. Token ``(s, a)`` points to every token whose state is
reachable in one step with positive probability under ``a``. The resulting
graph, tagged with the MDP it came from, maps one-to-one onto a
:class:`~gogar_rl.gogar.CounterUniverse`.

Text format::

    provenance <tag>
    tok <s> <a>
    edge <s> <a> <s'> <a'>
    exit <s> <a> <s'>

``exit`` lines record positive-probability successors that carry no token
(terminal states, or states dropped by reachability filtering).
"""

from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidIndexError, MembershipError, ParseError, PartialPolicyError, ValidationError
from .gogar import CounterUniverse, check_token


class Token(NamedTuple):
    s: int
    a: int


def counter_id(tok):
    return f"x_{tok[0]}_{tok[1]}"


def parse_counter_id(cid):
    parts = cid.split("_")
    if len(parts) != 3 or parts[0] != "x":
        raise ValueError(f"not a token counter id: {cid!r}")
    return Token(int(parts[1]), int(parts[2]))


@dataclass(frozen=True)
class TokenGraph:
    tokens: frozenset
    edges: frozenset
    provenance: str
    exits: frozenset = frozenset()

    def __post_init__(self):
        if not self.provenance:
            raise ValidationError("token graph needs a provenance tag (the transition model it came from)")
        check_token(self.provenance, "provenance")
        for src, dst in self.edges:
            if src not in self.tokens or dst not in self.tokens:
                raise MembershipError(f"edge {src}->{dst} has an endpoint outside the token set")

    def out_edges(self, tok):
        return {dst for src, dst in self.edges if src == tok}


def tokens_from_policy(mdp, pi):
    """One token ``(s, pi[s])`` per non-terminal state.

    ``pi`` is anything indexable by state (list, array, dict); missing or
    ``None`` entries at non-terminal states are a partial policy.
    """
    tokens = set()
    for s in range(mdp.n_states):
        if mdp.is_terminal(s):
            continue
        try:
            a = pi[s]
        except (KeyError, IndexError):
            a = None
        if a is None:
            raise PartialPolicyError(f"policy undefined at non-terminal state {s}")
        a = int(a)
        if not 0 <= a < mdp.n_actions:
            raise InvalidIndexError(f"policy picks action {a} at state {s}; valid range [0, {mdp.n_actions})")
        tokens.add(Token(s, a))
    return frozenset(tokens)


def _successors(mdp, tokens):
    by_state = {}
    for tok in tokens:
        s, a = tok
        if not (0 <= s < mdp.n_states and 0 <= a < mdp.n_actions):
            raise MembershipError(f"token {tuple(tok)} is not a state-action pair of {mdp.name!r}")
        by_state.setdefault(s, []).append(Token(s, a))
    edges, exits = set(), set()
    for tok in tokens:
        src = Token(*tok)
        for m in np.flatnonzero(mdp.transition[src.s, src.a] > 0).tolist():
            targets = by_state.get(m)
            if targets:
                edges.update((src, dst) for dst in targets)
            else:
                exits.add((src, m))
    return frozenset(edges), frozenset(exits)


def token_edges(mdp, tokens):
    """Edges ``x -> y`` with ``T(y.s | x.s, x.a) > 0`` and both tokens present."""
    return _successors(mdp, tokens)[0]


def reachable_tokens(mdp, tokens, edges):
    """Tokens reachable along ``edges`` from states in the start distribution's support."""
    starts = {tok for tok in tokens if mdp.start_dist[tok[0]] > 0}
    seen = set(starts)
    queue = deque(starts)
    adj = {}
    for src, dst in edges:
        adj.setdefault(src, []).append(dst)
    while queue:
        for nxt in adj.get(queue.popleft(), ()):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return frozenset(seen)


def build_token_graph(mdp, pi, reachable_only=False):
    tokens = tokens_from_policy(mdp, pi)
    edges, exits = _successors(mdp, tokens)
    if reachable_only:
        tokens = reachable_tokens(mdp, tokens, edges)
        edges, exits = _successors(mdp, tokens)
    return TokenGraph(tokens, edges, mdp.name, exits)


def to_gogar_universe(g):
    ids = {tok: counter_id(tok) for tok in g.tokens}
    cc = {}
    for src, dst in g.edges:
        cc.setdefault(ids[src], set()).add(ids[dst])
    return CounterUniverse(ids.values(), cc, provenance=g.provenance)


def check_structural_equivalence(g, u):
    """True iff tokens map one-to-one onto ``u``'s counters and edges onto its cc pairs."""
    ids = {tok: counter_id(tok) for tok in g.tokens}
    if len(set(ids.values())) != len(ids) or set(ids.values()) != u.counters:
        return False
    mapped = {(ids[src], ids[dst]) for src, dst in g.edges}
    cc_pairs = {(c, t) for c, targets in u.cc.items() for t in targets}
    return mapped == cc_pairs


def dump_token_graph(g):
    lines = [f"provenance {g.provenance}"]
    lines += [f"tok {s} {a}" for s, a in sorted(g.tokens)]
    lines += [f"edge {x.s} {x.a} {y.s} {y.a}" for x, y in sorted(g.edges)]
    lines += [f"exit {x.s} {x.a} {m}" for x, m in sorted(g.exits)]
    return "\n".join(lines) + "\n"


def parse_token_graph(text, source=None):
    provenance, tokens, edges, exits = None, set(), set(), set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *args = line.split()
        try:
            if key == "provenance" and len(args) == 1:
                provenance = args[0]
            elif key == "tok" and len(args) == 2:
                tokens.add(Token(*map(int, args)))
            elif key == "edge" and len(args) == 4:
                v = list(map(int, args))
                edges.add((Token(v[0], v[1]), Token(v[2], v[3])))
            elif key == "exit" and len(args) == 3:
                v = list(map(int, args))
                exits.add((Token(v[0], v[1]), v[2]))
            else:
                raise ParseError(f"bad token-graph line {line!r}", lineno, source)
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"non-integer index in {line!r}", lineno, source) from None
    return TokenGraph(frozenset(tokens), frozenset(edges), provenance, frozenset(exits))
