"""Experiment configuration, orchestration and metrics.

A config file is a list of ``key value`` lines::

    algorithm actor_critic
    mdp fixture:chain3
    episodes 5000
    alpha 0.1
    seed 7
    output_dir runs/ac

``mdp`` is a path (relative paths resolve against the config file) or
``fixture:<name>`` for a shipped environment. Runs write ``manifest.txt``
(itself a valid config), ``metrics.csv``, ``checkpoint.txt`` and, for
GOGAR-A3C with ``trace true``, ``trace.log``.
"""

import csv
import logging
import platform
import threading
import time
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, formats, kernels
from .approx import FeatureMap, greedy_actions
from .bridge import build_token_graph, check_structural_equivalence, dump_token_graph, to_gogar_universe
from .errors import ParseError, PolicyKindError, ValidationError
from .fixtures import FIXTURES, fixture_path
from .rng import SEED_SCHEME

log = logging.getLogger("gogar_rl.harness")

ALGORITHMS = ("q_learning", "reinforce", "actor_critic", "a3c", "gogar_a3c")
ALGORITHM_MODULE = {
    "q_learning": "tabular_q",
    "reinforce": "pg_algos",
    "actor_critic": "pg_algos",
    "a3c": "async_train",
    "gogar_a3c": "gogar_a3c",
}

METRIC_FIELDS = ("run_id", "wall_clock", "iteration", "episode_return", "episode_length",
                 "td_error_mean_abs", "update_count")


@dataclass
class ExperimentConfig:
    algorithm: str = ""
    mdp: str = ""
    alpha: float = 0.1
    beta: float = 0.2
    gamma: float = None
    epsilon: float = 0.1
    t_max: int = 5
    t_cap: int = 100
    step_cap: int = None
    n_threads: int = 1
    population_size: int = 2
    episodes: int = 1000
    rounds: int = 1000
    segments: int = 1000
    seed: int = 0
    output_dir: str = "run"
    trace: bool = False
    accumulate: bool = False

    def lines(self):
        out = []
        for f in fields(self):
            val = getattr(self, f.name)
            if val is None:
                continue
            if isinstance(val, bool):
                val = "true" if val else "false"
            elif isinstance(val, float):
                val = repr(val)
            out.append(f"{f.name} {val}")
        return out


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_INTS = {"t_max", "t_cap", "step_cap", "n_threads", "population_size", "episodes", "rounds", "segments", "seed"}
_FLOATS = {"alpha", "beta", "gamma", "epsilon"}
_BOOLS = {"trace", "accumulate"}


def _parse_bool(tok):
    low = tok.lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(tok)


def parse_config(text, source=None, base_dir=None):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise ParseError(f"expected 'key value', got {line!r}", lineno, source)
        key, val = parts[0], parts[1].strip()
        if key not in _TYPES:
            raise ValidationError(f"unknown config key {key!r} (line {lineno})")
        if key in values:
            raise ValidationError(f"duplicate config key {key!r} (line {lineno})")
        try:
            if key in _INTS:
                values[key] = int(val)
            elif key in _FLOATS:
                values[key] = float(val)
            elif key in _BOOLS:
                values[key] = _parse_bool(val)
            else:
                values[key] = val
        except ValueError:
            raise ParseError(f"bad value {val!r} for {key!r}", lineno, source) from None
    cfg = ExperimentConfig(**values)
    if base_dir is not None and cfg.mdp and not cfg.mdp.startswith("fixture:"):
        p = Path(cfg.mdp)
        if not p.is_absolute():
            cfg.mdp = str(Path(base_dir) / p)
    validate_config(cfg)
    return cfg


def load_config(path):
    path = Path(path)
    return parse_config(path.read_text(), source=str(path), base_dir=path.parent)


def validate_config(cfg):
    def bad(module, msg):
        raise ValidationError(f"{module}: {msg}")

    if cfg.algorithm not in ALGORITHMS:
        bad("harness", f"algorithm must be one of {ALGORITHMS}, got {cfg.algorithm!r}")
    if not cfg.mdp:
        bad("harness", "mdp is required")
    mod = ALGORITHM_MODULE[cfg.algorithm]
    if not cfg.alpha > 0 or (cfg.algorithm == "q_learning" and cfg.alpha > 1):
        bad(mod, f"alpha out of range: {cfg.alpha}")
    if not cfg.beta > 0:
        bad(mod, f"beta must be positive: {cfg.beta}")
    if cfg.gamma is not None and not 0.0 <= cfg.gamma < 1.0:
        bad(mod, f"gamma must lie in [0, 1): {cfg.gamma}")
    if not 0.0 <= cfg.epsilon <= 1.0:
        bad(mod, f"epsilon must lie in [0, 1]: {cfg.epsilon}")
    for key in ("t_max", "t_cap", "n_threads"):
        if getattr(cfg, key) < 1:
            bad(mod, f"{key} must be >= 1")
    if cfg.step_cap is not None and cfg.step_cap < 1:
        bad(mod, "step_cap must be >= 1")
    for key in ("episodes", "rounds", "segments"):
        if getattr(cfg, key) < 0:
            bad(mod, f"{key} must be >= 0")
    if cfg.algorithm == "gogar_a3c" and cfg.population_size < 2:
        bad("gogar_a3c", f"population error: population_size must be >= 2, got {cfg.population_size}")
    if not 0 <= cfg.seed < 2 ** 64:
        bad("harness", "seed must be a 64-bit unsigned integer")
    if cfg.trace and cfg.algorithm != "gogar_a3c":
        bad("harness", "trace is only produced by gogar_a3c")
    if cfg.accumulate and cfg.algorithm != "gogar_a3c":
        bad("harness", "accumulate only applies to gogar_a3c")


def resolve_mdp(ref):
    if ref.startswith("fixture:"):
        name = ref.split(":", 1)[1]
        if name not in FIXTURES:
            raise ValidationError(f"harness: unknown fixture {name!r}; choose from {FIXTURES}")
        with resources.as_file(fixture_path(name)) as p:
            return formats.load_mdp(p)
    return formats.load_mdp(ref)


class MetricsSink:
    """Single writer for metric rows; safe to call from worker threads."""

    def __init__(self, run_id):
        self.run_id = run_id
        self.rows = []
        self._lock = threading.Lock()

    def record(self, episode_return, episode_length, td_abs_mean=None, update_count=None):
        with self._lock:
            it = len(self.rows)
            self.rows.append((self.run_id, "%.6f" % time.time(), it, "%.17g" % episode_return,
                              episode_length, "" if td_abs_mean is None else "%.17g" % td_abs_mean,
                              "" if update_count is None else update_count))
            if it % 1000 == 0:
                log.info("%s iter=%d return=%.4g length=%d", self.run_id, it, episode_return, episode_length)

    def write(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(METRIC_FIELDS)
            writer.writerows(self.rows)


@dataclass
class RunResult:
    output_dir: Path
    checkpoint: str
    metrics_rows: int
    extra: dict


def _seg_td(seg):
    return float(np.abs(seg.deltas).mean()) if len(seg) else 0.0


def run(cfg, output_dir=None):
    """Execute ``cfg``; returns a :class:`RunResult`. Nothing is written unless validation passes."""
    from .a3c import train_a3c
    from .gogar import dump_trace_block
    from .gogar_a3c import train_gogar_a3c
    from .pg import AcHyper, train_actor_critic, train_reinforce
    from .tabular import train_q

    validate_config(cfg)
    mdp = resolve_mdp(cfg.mdp)
    gamma = mdp.gamma if cfg.gamma is None else cfg.gamma
    hyper = AcHyper(cfg.alpha, cfg.beta, gamma, cfg.t_cap)
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    run_id = f"{cfg.algorithm}-{cfg.seed}"
    sink = MetricsSink(run_id)
    extra = {}
    fm = FeatureMap.for_mdp(mdp)

    if cfg.algorithm == "q_learning":
        q = train_q(mdp, cfg.episodes, cfg.alpha, cfg.epsilon, cfg.seed, gamma, cfg.step_cap,
                    on_episode=lambda i, ret, n, td: sink.record(ret, n, td))
        checkpoint = formats.dump_qtable(q)
    elif cfg.algorithm == "reinforce":
        p = train_reinforce(mdp, cfg.alpha, cfg.episodes, cfg.seed, gamma, cfg.t_cap,
                            on_episode=lambda i, seg: sink.record(float(seg.rewards.sum()), len(seg)))
        checkpoint = formats.dump_population([("global", p.theta, np.zeros(fm.dim), 0)])
    elif cfg.algorithm == "actor_critic":
        p, v = train_actor_critic(
            mdp, hyper, cfg.episodes, cfg.seed,
            on_episode=lambda i, seg: sink.record(float(seg.rewards.sum()), len(seg), _seg_td(seg)))
        checkpoint = formats.dump_population([("global", p.theta, v.w, 0)])
    elif cfg.algorithm == "a3c":
        store = train_a3c(
            mdp, cfg.n_threads, hyper, cfg.t_max, cfg.segments, cfg.seed,
            on_segment=lambda wid, seg, count: sink.record(float(seg.rewards.sum()), len(seg),
                                                           _seg_td(seg), count))
        checkpoint = formats.dump_population([("global", store.theta, store.w, store.update_count)])
        extra["update_count"] = store.update_count
    else:
        done = [0]

        def on_interaction(r, k, res):
            done[0] += 1
            sink.record(float(res.segment.rewards.sum()), len(res.segment), _seg_td(res.segment), done[0])

        population, traces = train_gogar_a3c(
            cfg.population_size, mdp, hyper, cfg.t_max, cfg.rounds, cfg.seed, cfg.trace,
            cfg.n_threads, cfg.accumulate, on_interaction=on_interaction)
        checkpoint = formats.dump_population(
            [(u.id, u.theta, u.w, u.interaction_count) for u in population])
        if cfg.trace:
            extra["trace"] = "".join(dump_trace_block(t.game, t.label, t.meta) for t in traces)

    out.mkdir(parents=True, exist_ok=True)
    (out / "checkpoint.txt").write_text(checkpoint)
    sink.write(out / "metrics.csv")
    if "trace" in extra:
        (out / "trace.log").write_text(extra.pop("trace"))
    (out / "manifest.txt").write_text(manifest_text(cfg, out))
    return RunResult(out, checkpoint, len(sink.rows), extra)


def manifest_text(cfg, out):
    header = [
        f"# gogar_rl {__version__} kernels={kernels.BACKEND}",
        f"# python {platform.python_version()} numpy {np.__version__}",
        f"# seed_scheme {SEED_SCHEME}",
    ]
    body = []
    for line in cfg.lines():
        key = line.split(" ", 1)[0]
        if key == "output_dir":
            line = f"output_dir {Path(out).resolve()}"
        elif key == "mdp" and not cfg.mdp.startswith("fixture:"):
            line = f"mdp {Path(cfg.mdp).resolve()}"
        body.append(line)
    return "\n".join(header + body) + "\n"


def parse_policy_list(text, n_states):
    """Parse ``"0,1,-"`` style policies; ``-`` marks an undefined (terminal) state."""
    items = [x.strip() for x in text.split(",")]
    pi = []
    for i, x in enumerate(items):
        if x in ("", "-"):
            pi.append(None)
            continue
        try:
            pi.append(int(x))
        except ValueError:
            raise ParseError(f"policy entry {i} is not an action index: {x!r}") from None
    if len(pi) > n_states:
        raise ValidationError(f"policy lists {len(pi)} states but the MDP has {n_states}")
    return pi


def policy_from_source(mdp, source, greedy=False, unit=None):
    """Deterministic policy from a checkpoint path or an explicit comma list."""
    path = Path(source)
    if not path.is_file():
        return parse_policy_list(source, mdp.n_states)
    kind, data = formats.load_checkpoint(path)
    if kind == "qtable":
        if data.shape != (mdp.n_states, mdp.n_actions):
            raise ValidationError(f"Q-table shape {data.shape} does not fit the MDP")
        return np.argmax(data, axis=1).tolist()
    if not greedy:
        raise PolicyKindError(
            "deterministic policy required: checkpoint holds a softmax policy (use --greedy to extract one)")
    records = {r[0]: r for r in data}
    if unit is None:
        rec = data[0]
    elif unit in records:
        rec = records[unit]
    else:
        raise ValidationError(f"no unit {unit!r} in checkpoint; have {sorted(records)}")
    fm = FeatureMap.for_mdp(mdp)
    if rec[1].shape != (mdp.n_actions, fm.dim):
        raise ValidationError(f"policy shape {rec[1].shape} does not fit the MDP")
    return greedy_actions(rec[1], fm).tolist()


@dataclass
class BridgeReport:
    graph_text: str
    n_tokens: int
    n_edges: int
    n_counters: int
    n_cc_edges: int
    provenance: str
    equivalent: bool

    def summary_lines(self):
        return [
            f"provenance {self.provenance}",
            f"tokens {self.n_tokens} edges {self.n_edges}",
            f"counters {self.n_counters} cc_edges {self.n_cc_edges}",
            f"structural_equivalence {'true' if self.equivalent else 'false'}",
        ]


def bridge_cmd(mdp_path, policy_source, greedy=False, unit=None, reachable_only=False):
    mdp = resolve_mdp(mdp_path)
    pi = policy_from_source(mdp, policy_source, greedy, unit)
    pi = list(pi) + [None] * (mdp.n_states - len(pi))
    g = build_token_graph(mdp, pi, reachable_only)
    u = to_gogar_universe(g)
    return BridgeReport(dump_token_graph(g), len(g.tokens), len(g.edges), len(u.counters),
                        u.n_edges(), g.provenance, check_structural_equivalence(g, u))
