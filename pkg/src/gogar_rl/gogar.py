"""Deontic scorekeeping: counters, commitment and entitlement boxes, challenges.

Committing to a counter also commits to its committive consequences
(transitively by default). Entitlements are copies of committed counters that
the player pledges to defend. A challenge is defended when some other counter
in the player's commitment box has the challenged counter among its
consequences; otherwise the entitlement is retracted.

Every successful move is appended to ``GameState.move_log``. The log has a
line format (:func:`format_log` / :func:`parse_log`)::

    <seq> join <actor> ok
    <seq> register|commit|entitle <actor> <counter> ok
    <seq> challenge|assert <actor> <target> <counter> <outcome>

and :func:`replay` rebuilds the game from it.
"""

import re
from collections import deque
from dataclasses import dataclass, field

from .errors import (
    ChallengeTargetError,
    EntitlementError,
    LogCorruptionError,
    MembershipError,
    ParseError,
    RoleError,
)

_TOKEN = re.compile(r"[!-~]+\Z")

DEFENDED = "defended"
RETRACTED = "retracted"
OK = "ok"


def check_token(tok, what="id"):
    if not isinstance(tok, str) or not _TOKEN.match(tok):
        raise ValueError(f"{what} must be a non-empty printable ASCII token without spaces, got {tok!r}")
    return tok


class CounterUniverse:
    """Counters, their direct committive consequences and an (inert) incompatibility relation."""

    def __init__(self, counters=(), cc=None, incompatible=(), provenance=None):
        self.counters = set()
        for c in counters:
            self.counters.add(check_token(c, "counter id"))
        self.cc = {}
        for src, targets in (cc or {}).items():
            targets = frozenset(targets)
            for c in (src, *targets):
                if c not in self.counters:
                    raise MembershipError(f"cc mentions unknown counter {c!r}")
            if targets:
                self.cc[src] = targets
        self.incompatible = set()
        for a, b in incompatible:
            if a == b:
                raise ValueError(f"counter {a!r} cannot be incompatible with itself")
            for c in (a, b):
                if c not in self.counters:
                    raise MembershipError(f"incompatibility mentions unknown counter {c!r}")
            self.incompatible.add(frozenset((a, b)))
        self.provenance = provenance
        self._closures = {}

    def add_counter(self, c):
        """Register a fresh counter with no consequences (idempotent)."""
        self.counters.add(check_token(c, "counter id"))

    def consequences(self, c):
        return self.cc.get(c, frozenset())

    def closure(self, c, transitive=True):
        if c not in self.counters:
            raise MembershipError(f"unknown counter {c!r}")
        if not transitive:
            return frozenset({c}) | self.consequences(c)
        cached = self._closures.get(c)
        if cached is not None:
            return cached
        seen = {c}
        queue = deque([c])
        while queue:
            for nxt in self.cc.get(queue.popleft(), ()):
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        result = frozenset(seen)
        self._closures[c] = result
        return result

    def n_edges(self):
        return sum(len(t) for t in self.cc.values())

    def copy(self):
        u = CounterUniverse.__new__(CounterUniverse)
        u.counters = set(self.counters)
        u.cc = dict(self.cc)
        u.incompatible = set(self.incompatible)
        u.provenance = self.provenance
        u._closures = dict(self._closures)
        return u

    def __eq__(self, other):
        if not isinstance(other, CounterUniverse):
            return NotImplemented
        return (self.counters == other.counters and self.cc == other.cc
                and self.incompatible == other.incompatible and self.provenance == other.provenance)

    __hash__ = None

    def __repr__(self):
        return (f"CounterUniverse({len(self.counters)} counters, {self.n_edges()} cc edges, "
                f"provenance={self.provenance!r})")


def cc_closure(u, c, transitive=True):
    return u.closure(c, transitive)


@dataclass
class ParticipantState:
    id: str
    commitment_box: set = field(default_factory=set)
    entitlement_box: set = field(default_factory=set)
    defend_pledges: set = field(default_factory=set)


@dataclass(frozen=True)
class Move:
    seq: int
    kind: str
    actor: str
    target: str = None
    counter: str = None
    outcome: str = OK

    def format(self):
        fields = [str(self.seq), self.kind, self.actor]
        if self.target is not None:
            fields.append(self.target)
        if self.counter is not None:
            fields.append(self.counter)
        fields.append(self.outcome)
        return " ".join(fields)


_ARITY = {"join": 4, "register": 5, "commit": 5, "entitle": 5, "challenge": 6, "assert": 6}
_OUTCOMES = {"challenge": (DEFENDED, RETRACTED), "assert": ("true", "false")}


class GameState:
    """A game among participants over one counter universe.

    The universe is copied, so lazily registered counters never leak into the
    caller's universe. ``transitive=False`` makes commitment (and defence)
    follow direct consequences only.
    """

    def __init__(self, universe, transitive=True):
        self.base_universe = universe.copy()
        self.universe = universe.copy()
        self.transitive = transitive
        self.participants = {}
        self.move_log = []

    def _record(self, kind, actor, target=None, counter=None, outcome=OK):
        self.move_log.append(Move(len(self.move_log) + 1, kind, actor, target, counter, outcome))

    def _player(self, pid):
        try:
            return self.participants[pid]
        except KeyError:
            raise MembershipError(f"unknown participant {pid!r}") from None

    def _counter(self, c):
        if c not in self.universe.counters:
            raise MembershipError(f"unknown counter {c!r}")
        return c

    def join(self, pid):
        check_token(pid, "participant id")
        if pid in self.participants:
            raise MembershipError(f"participant {pid!r} already joined")
        self.participants[pid] = ParticipantState(pid)
        self._record("join", pid)
        return self

    def register(self, actor, c):
        """Lazily add counter ``c`` (no consequences) on behalf of ``actor``."""
        self._player(actor)
        self.universe.add_counter(c)
        self._record("register", actor, counter=c)
        return self

    def commit(self, player, c):
        ps = self._player(player)
        self._counter(c)
        ps.commitment_box |= self.universe.closure(c, self.transitive)
        self._record("commit", player, counter=c)
        return self

    def entitle(self, player, c):
        ps = self._player(player)
        self._counter(c)
        if c not in ps.commitment_box:
            raise EntitlementError(f"{player!r} is not committed to {c!r}")
        ps.entitlement_box.add(c)
        ps.defend_pledges.add(c)
        self._record("entitle", player, counter=c)
        return self

    def find_witness(self, player, c):
        """A committed counter other than ``c`` whose consequences include ``c``, or None."""
        ps = self._player(player)
        for other in sorted(ps.commitment_box):
            if other != c and c in self.universe.closure(other, self.transitive):
                return other
        return None

    def challenge(self, scorekeeper, player, c):
        """Scorekeeper challenges ``player``'s entitlement to ``c``; returns the outcome."""
        self._player(scorekeeper)
        ps = self._player(player)
        if scorekeeper == player:
            raise RoleError(f"{player!r} cannot challenge itself")
        if c not in ps.entitlement_box:
            raise ChallengeTargetError(f"{player!r} is not entitled to {c!r}")
        if self.find_witness(player, c) is not None:
            outcome = DEFENDED
        else:
            outcome = RETRACTED
            ps.entitlement_box.discard(c)
            ps.defend_pledges.discard(c)
        self._record("challenge", scorekeeper, player, c, outcome)
        return outcome

    def is_assertion(self, player, c):
        ps = self._player(player)
        return c in ps.entitlement_box and c in ps.defend_pledges

    def assess(self, scorekeeper, player, c):
        """Scorekeeper's logged judgement of whether ``player`` asserts ``c``."""
        self._player(scorekeeper)
        result = self.is_assertion(player, c)
        self._record("assert", scorekeeper, player, c, "true" if result else "false")
        return result

    def invariant_violations(self):
        problems = []
        for pid, ps in self.participants.items():
            for name in ("commitment_box", "entitlement_box", "defend_pledges"):
                stray = getattr(ps, name) - self.universe.counters
                if stray:
                    problems.append(f"{pid}: {name} holds unknown counters {sorted(stray)}")
            if not ps.entitlement_box <= ps.commitment_box:
                problems.append(f"{pid}: entitlements not committed {sorted(ps.entitlement_box - ps.commitment_box)}")
            if not ps.defend_pledges <= ps.entitlement_box:
                problems.append(f"{pid}: pledges not entitled {sorted(ps.defend_pledges - ps.entitlement_box)}")
        return problems

    def apply(self, move):
        """Re-apply a logged move, checking its recorded outcome."""
        k = move.kind
        if k == "join":
            self.join(move.actor)
        elif k == "register":
            self.register(move.actor, move.counter)
        elif k == "commit":
            self.commit(move.actor, move.counter)
        elif k == "entitle":
            self.entitle(move.actor, move.counter)
        elif k == "challenge":
            got = self.challenge(move.actor, move.target, move.counter)
            if got != move.outcome:
                raise LogCorruptionError(f"move {move.seq}: challenge outcome {got} != logged {move.outcome}")
        elif k == "assert":
            got = "true" if self.assess(move.actor, move.target, move.counter) else "false"
            if got != move.outcome:
                raise LogCorruptionError(f"move {move.seq}: assertion {got} != logged {move.outcome}")
        else:
            raise LogCorruptionError(f"move {move.seq}: unknown kind {k!r}")

    def boxes(self):
        """Sorted snapshot of every participant's boxes."""
        return {
            pid: {
                "commitment": sorted(ps.commitment_box),
                "entitlement": sorted(ps.entitlement_box),
                "pledges": sorted(ps.defend_pledges),
            }
            for pid, ps in sorted(self.participants.items())
        }

    def __eq__(self, other):
        if not isinstance(other, GameState):
            return NotImplemented
        return (self.universe == other.universe and self.transitive == other.transitive
                and self.participants == other.participants and self.move_log == other.move_log)

    __hash__ = None


def replay(moves, universe, transitive=True):
    """Rebuild a game by re-applying ``moves`` to a fresh game over ``universe``."""
    g = GameState(universe, transitive)
    for i, move in enumerate(moves, start=1):
        if move.seq != i:
            raise LogCorruptionError(f"move {i}: sequence number {move.seq} out of order")
        try:
            g.apply(move)
        except LogCorruptionError:
            raise
        except (MembershipError, EntitlementError, RoleError, ChallengeTargetError, ValueError) as exc:
            raise LogCorruptionError(f"move {move.seq}: {exc}") from exc
    return g


def format_log(moves):
    return "".join(m.format() + "\n" for m in moves)


def parse_move(line, lineno=None):
    toks = line.split()
    if len(toks) < 2:
        raise LogCorruptionError(f"line {lineno}: truncated move")
    kind = toks[1]
    if kind not in _ARITY:
        raise LogCorruptionError(f"line {lineno}: unknown move kind {kind!r}")
    if len(toks) != _ARITY[kind]:
        raise LogCorruptionError(f"line {lineno}: {kind} takes {_ARITY[kind]} fields, got {len(toks)}")
    try:
        seq = int(toks[0])
    except ValueError:
        raise LogCorruptionError(f"line {lineno}: bad sequence number {toks[0]!r}") from None
    if str(seq) != toks[0]:
        raise LogCorruptionError(f"line {lineno}: non-canonical sequence number {toks[0]!r}")
    outcome = toks[-1]
    allowed = _OUTCOMES.get(kind, (OK,))
    if outcome not in allowed:
        raise LogCorruptionError(f"line {lineno}: outcome {outcome!r} not one of {allowed}")
    if kind == "join":
        return Move(seq, kind, toks[2], outcome=outcome)
    if len(toks) == 5:
        return Move(seq, kind, toks[2], counter=toks[3], outcome=outcome)
    return Move(seq, kind, toks[2], toks[3], toks[4], outcome)


def parse_log(text):
    """Parse move-log text; ``#`` lines and blank lines are skipped."""
    moves = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        moves.append(parse_move(line, lineno))
    return moves


def dump_universe(u, prefix=""):
    lines = []
    if u.provenance is not None:
        lines.append(f"{prefix}provenance {u.provenance}")
    if u.counters:
        lines.append(f"{prefix}counters " + " ".join(sorted(u.counters)))
    for src in sorted(u.cc):
        lines.append(f"{prefix}cc {src} " + " ".join(sorted(u.cc[src])))
    for pair in sorted(tuple(sorted(p)) for p in u.incompatible):
        lines.append(f"{prefix}incompatible {pair[0]} {pair[1]}")
    return "".join(line + "\n" for line in lines)


def parse_universe(text, source=None):
    """Parse ``provenance``/``counters``/``counter``/``cc``/``incompatible`` lines.

    Counters named in ``cc`` or ``incompatible`` lines are declared implicitly.
    """
    counters, cc, incompatible, provenance = [], {}, [], None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *args = line.split()
        if key == "provenance" and len(args) == 1:
            provenance = args[0]
        elif key in ("counter", "counters") and args:
            counters.extend(args)
        elif key == "cc" and args:
            cc.setdefault(args[0], set()).update(args[1:])
            counters.extend(args)
        elif key == "incompatible" and len(args) == 2:
            incompatible.append(tuple(args))
            counters.extend(args)
        else:
            raise ParseError(f"bad universe line {line!r}", lineno, source)
    try:
        return CounterUniverse(counters, cc, incompatible, provenance)
    except ValueError as exc:
        raise ParseError(str(exc), None, source) from exc


@dataclass
class TraceBlock:
    label: str
    universe: CounterUniverse
    transitive: bool
    moves: list
    meta: list


def dump_trace_block(g, label, meta=()):
    """Serialize one game: header comments, then moves with ``# meta`` lines interleaved.

    ``meta`` holds ``(before_seq, fields)`` pairs; each meta line is written
    just before the move numbered ``before_seq`` (or at the end).
    """
    out = [f"# game {label}\n", f"# closure {'transitive' if g.transitive else 'direct'}\n"]
    out.append(dump_universe(g.base_universe, prefix="# universe "))
    pending = sorted(meta, key=lambda m: m[0])
    i = 0
    for move in g.move_log:
        while i < len(pending) and pending[i][0] <= move.seq:
            out.append("# meta " + " ".join(str(x) for x in pending[i][1]) + "\n")
            i += 1
        out.append(move.format() + "\n")
    for _, fields in pending[i:]:
        out.append("# meta " + " ".join(str(x) for x in fields) + "\n")
    return "".join(out)


def parse_trace(text):
    """Split a trace file into :class:`TraceBlock` records."""
    blocks = []
    cur = None
    uni_lines = []

    def close():
        if cur is not None:
            cur.universe = parse_universe("".join(uni_lines))
            blocks.append(cur)

    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("# game"):
            close()
            cur = TraceBlock(s[len("# game"):].strip(), None, True, [], [])
            uni_lines = []
            continue
        if cur is None:
            cur = TraceBlock("", None, True, [], [])
        if s.startswith("# universe "):
            uni_lines.append(s[len("# universe "):] + "\n")
        elif s.startswith("# closure "):
            cur.transitive = s.split()[2] == "transitive"
        elif s.startswith("# meta"):
            cur.meta.append((len(cur.moves) + 1, s.split()[2:]))
        elif s.startswith("#"):
            continue
        else:
            cur.moves.append(parse_move(s, lineno))
    close()
    return blocks
