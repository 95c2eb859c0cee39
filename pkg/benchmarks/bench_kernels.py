"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]

Each workload runs once per available backend with the same seed, so the
results are bit-identical and only the wall time differs.
"""

import argparse
import time

import numpy as np

from gogar_rl import kernels
from gogar_rl.a3c import train_a3c
from gogar_rl.fixtures import chain, gridworld
from gogar_rl.pg import AcHyper, train_actor_critic, train_reinforce
from gogar_rl.tabular import train_q

HYPER = AcHyper(0.1, 0.2, 0.9, 100)


def workloads(scale):
    n = lambda k: max(1, int(k * scale))
    return {
        "q-learning gridworld": lambda: train_q(gridworld(), n(20_000), 0.1, 0.1, seed=0),
        "actor-critic gridworld": lambda: train_actor_critic(gridworld(), HYPER, n(5_000), seed=0)[0].theta,
        "reinforce chain": lambda: train_reinforce(chain(), 0.05, n(5_000), seed=0).theta,
        "a3c gridworld (1 worker)": lambda: train_a3c(gridworld(), 1, HYPER, 5, n(5_000), seed=0).theta,
        "a3c gridworld (4 workers)": lambda: train_a3c(gridworld(), 4, HYPER, 5, n(5_000), seed=0).theta,
    }


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0, help="multiply episode/segment counts")
    args = ap.parse_args(argv)

    backends = kernels.available()
    previous = kernels.BACKEND
    print(f"{'workload':28s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    try:
        for name, fn in workloads(args.scale).items():
            row, outs = [], []
            for b in backends:
                kernels.use(b)
                t, out = best_of(fn, args.repeat)
                row.append(t)
                outs.append(out)
            line = f"{name:28s}" + "".join(f"{t:11.3f}s" for t in row)
            if len(row) > 1:
                line += f"{row[-1] / row[0]:11.1f}x"
                # multi-worker A3C interleaving is scheduler dependent, so only compare deterministic runs
                if "4 workers" not in name and not all(np.array_equal(outs[0], o) for o in outs[1:]):
                    line += "  (results differ!)"
            print(line, flush=True)
    finally:
        kernels.use(previous)


if __name__ == "__main__":
    main()
