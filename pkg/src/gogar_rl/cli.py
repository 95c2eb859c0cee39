"""Command-line interface: ``gogar-rl {run,oracle,bridge,gogar-sim,replay}``."""

import argparse
import logging
import os
import sys
import traceback
from pathlib import Path


from . import __version__, harness, kernels
from .bridge import parse_token_graph, to_gogar_universe
from .errors import GogarRLError, LogCorruptionError, ParseError
from .gogar import GameState, format_log, parse_trace, parse_universe, replay
from .mdp import optimal_action_sets, value_iteration

_MODULE_NAMES = {
    "mdp": "mdp_core", "fixtures": "mdp_core", "tabular": "tabular_q", "approx": "func_approx",
    "pg": "pg_algos", "a3c": "async_train", "gogar": "gogar_engine", "bridge": "bridge",
    "gogar_a3c": "gogar_a3c", "harness": "harness", "formats": "harness", "cli": "harness",
}


def _module_of(exc):
    name = "harness"
    tb = exc.__traceback__
    pkg = Path(__file__).parent
    while tb is not None:
        path = Path(tb.tb_frame.f_code.co_filename)
        if path.parent == pkg and path.stem in _MODULE_NAMES:
            name = _MODULE_NAMES[path.stem]
        tb = tb.tb_next
    return name


def _use_color(stream):
    return "NO_COLOR" not in os.environ and hasattr(stream, "isatty") and stream.isatty()


def _verdict(ok):
    word = "true" if ok else "false"
    if _use_color(sys.stdout):
        return f"\033[{32 if ok else 31}m{word}\033[0m"
    return word


def cmd_run(args):
    cfg = harness.load_config(args.config)
    result = harness.run(cfg, args.output_dir)
    print(f"run {cfg.algorithm} seed={cfg.seed} -> {result.output_dir}")
    print(f"metrics_rows {result.metrics_rows}")
    for key, val in result.extra.items():
        print(f"{key} {val}")
    return 0


def cmd_oracle(args):
    mdp = harness.resolve_mdp(args.mdp)
    V, pi = value_iteration(mdp, args.tol)
    sets = optimal_action_sets(mdp, V)
    print(f"# {mdp.name}: {mdp.n_states} states, {mdp.n_actions} actions, gamma {mdp.gamma!r}")
    print("state value action optimal_actions")
    for s in range(mdp.n_states):
        act = "-" if mdp.is_terminal(s) else str(pi[s])
        opts = "-" if mdp.is_terminal(s) else ",".join(str(a) for a in sorted(sets[s]))
        print(f"{s} {V[s]:.12g} {act} {opts}")
    return 0


def cmd_bridge(args):
    report = harness.bridge_cmd(args.mdp, args.policy, args.greedy, args.unit, args.reachable)
    if args.output:
        Path(args.output).write_text(report.graph_text)
    else:
        sys.stdout.write(report.graph_text)
    for line in report.summary_lines()[:-1]:
        print(f"# {line}")
    print(f"# structural_equivalence {_verdict(report.equivalent)}")
    return 0 if report.equivalent else 1


def _load_universe(path):
    text = Path(path).read_text()
    first = {ln.split()[0] for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")}
    if first & {"tok", "edge", "exit"}:
        return to_gogar_universe(parse_token_graph(text, source=str(path)))
    return parse_universe(text, source=str(path))


_SCRIPT_ARITY = {"join": 1, "register": 2, "commit": 2, "entitle": 2, "challenge": 3, "assert": 3}


def _print_boxes(g, indent=""):
    for pid, boxes in g.boxes().items():
        print(f"{indent}participant {pid}")
        for name in ("commitment", "entitlement", "pledges"):
            print(f"{indent}  {name}: {' '.join(boxes[name]) or '-'}")


def cmd_gogar_sim(args):
    g = GameState(_load_universe(args.universe), transitive=not args.direct)
    script = Path(args.script)
    for lineno, raw in enumerate(script.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        op, *rest = line.split()
        if op not in _SCRIPT_ARITY or len(rest) != _SCRIPT_ARITY[op]:
            raise ParseError(f"bad script line {line!r}", lineno, str(script))
        try:
            if op == "join":
                g.join(*rest)
            elif op == "register":
                g.register(*rest)
            elif op == "commit":
                g.commit(*rest)
            elif op == "entitle":
                g.entitle(*rest)
            elif op == "challenge":
                print(f"{lineno}: challenge {' '.join(rest)} -> {g.challenge(*rest)}")
            else:
                print(f"{lineno}: assert {' '.join(rest)} -> {'true' if g.assess(*rest) else 'false'}")
        except (GogarRLError, ValueError) as exc:
            exc.args = (f"{script}:{lineno}: {exc}",)
            raise
    _print_boxes(g)
    print(f"moves {len(g.move_log)}")
    if args.log:
        Path(args.log).write_text(format_log(g.move_log))
    return 0


def cmd_replay(args):
    blocks = parse_trace(Path(args.trace).read_text())
    fallback = _load_universe(args.universe) if args.universe else None
    status = 0
    for block in blocks:
        universe = block.universe
        if not universe.counters and fallback is not None:
            universe = fallback
        transitive = block.transitive and not args.direct
        g = replay(block.moves, universe, transitive)
        problems = g.invariant_violations()
        label = block.label or "(unlabelled)"
        print(f"game {label}: moves {len(block.moves)} replay ok invariants {_verdict(not problems)}")
        for p in problems:
            print(f"  violation: {p}")
            status = 1
        if args.verbose or len(blocks) == 1:
            _print_boxes(g, "  ")
    print(f"games {len(blocks)}")
    return status


def build_parser():
    ap = argparse.ArgumentParser(prog="gogar-rl", description=__doc__)
    ap.add_argument("--version", action="version",
                    version=f"gogar-rl {__version__} (kernels: {kernels.BACKEND})")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment from a config file")
    p.add_argument("config")
    p.add_argument("--output-dir", help="override the config's output_dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("oracle", help="value iteration: optimal values and greedy policy")
    p.add_argument("mdp", help="MDP file or fixture:<name>")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bridge", help="token graph of a deterministic policy")
    p.add_argument("mdp", help="MDP file or fixture:<name>")
    p.add_argument("policy", help="checkpoint file or comma list such as 0,0,-")
    p.add_argument("--greedy", action="store_true", help="extract the greedy policy from a softmax checkpoint")
    p.add_argument("--unit", help="unit id within a population checkpoint")
    p.add_argument("--reachable", action="store_true", help="keep only tokens reachable from the start states")
    p.add_argument("-o", "--output", help="write the token graph here instead of stdout")
    p.set_defaults(func=cmd_bridge)

    p = sub.add_parser("gogar-sim", help="apply a scripted move sequence and print the boxes")
    p.add_argument("universe", help="universe file or token-graph file")
    p.add_argument("script")
    p.add_argument("--direct", action="store_true", help="commit direct consequences only")
    p.add_argument("--log", help="write the move log here")
    p.set_defaults(func=cmd_gogar_sim)

    p = sub.add_parser("replay", help="replay a move log or trace and check invariants")
    p.add_argument("trace")
    p.add_argument("--universe", help="universe for logs that do not embed one")
    p.add_argument("--direct", action="store_true")
    p.set_defaults(func=cmd_replay)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (GogarRLError, OSError, ValueError) as exc:
        module = _module_of(exc)
        msg = str(exc)
        if not any(msg.startswith(f"{m}:") for m in _MODULE_NAMES.values()):
            msg = f"{module}: {msg}"
        print(f"gogar-rl: error: {msg}", file=sys.stderr)
        if args.verbose:
            traceback.print_exception(exc)
        return 2 if isinstance(exc, LogCorruptionError) else 1


if __name__ == "__main__":
    sys.exit(main())
