import os
import subprocess
import sys

import numpy as np
import pytest

from gogar_rl import kernels
from gogar_rl.fixtures import random_mdp
from gogar_rl.rng import UniformStream, derive_seed, make_generator


class TestUniformStream:
    @pytest.mark.parametrize("block", [1, 7, 4096])
    def test_chunking_is_sequence_equivalent(self, block):
        ref = make_generator(5).random(500)
        s = UniformStream(5, block=block)
        got = []
        sizes = np.random.default_rng(0).integers(1, 40, size=100)
        for n in sizes:
            buf = s.ensure(int(n))
            take = min(int(n), 500 - len(got))
            got.extend(buf[s.pos:s.pos + take])
            s.pos += take
            if len(got) >= 500:
                break
        assert np.array_equal(got, ref[:len(got)])

    def test_keys_split(self):
        assert UniformStream(1, 2).random() != UniformStream(1, 3).random()
        assert derive_seed(1, 0) != derive_seed(1, 1)
        assert 0 <= derive_seed(2**64 - 1, 9) < 2**63


def run_both(fn):
    out = {}
    previous = kernels.BACKEND
    try:
        for name in kernels.available():
            kernels.use(name)
            out[name] = fn()
    finally:
        kernels.use(previous)
    return out


def test_fallback_always_available():
    assert "python" in kernels.available()


def test_env_forces_fallback():
    env = dict(os.environ, GOGAR_RL_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from gogar_rl import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("seed", range(5))
def test_q_run_backends_agree(seed):
    m = random_mdp(np.random.default_rng(seed), 9, 3)
    u = make_generator(seed).random(3 * 50)

    def go():
        q = np.random.default_rng(seed).normal(size=(9, 3))
        s = next(s for s in range(9) if not m.is_terminal(s))
        res = kernels.q_run(q, m.cum, m.reward, m.terminal_mask, s, 0.3, 0.9, 0.4, 50, u, 0)
        return q, res

    results = list(run_both(go).values())
    for q, res in results[1:]:
        assert np.array_equal(q, results[0][0])
        assert res == results[0][1]


@pytest.mark.parametrize("shared", [True, False])
def test_ac_run_backends_agree(shared):
    rng = np.random.default_rng(3)
    m = random_mdp(rng, 8, 3)
    phi = rng.normal(size=(8, 5)) * (rng.random((8, 5)) < 0.6)
    theta0, w0 = rng.normal(size=(3, 5)), rng.normal(size=5)
    u = make_generator(3).random(2 * 40)

    def go():
        theta, w = theta0.copy(), w0.copy()
        dth, dw = (theta, w) if shared else (np.zeros_like(theta), np.zeros_like(w))
        logs = [np.empty(40, np.int64) for _ in range(3)] + [np.empty(40), np.empty(40)]
        s = next(s for s in range(8) if not m.is_terminal(s))
        res = kernels.ac_run(theta, w, dth, dw, phi, m.cum, m.reward, m.terminal_mask, s, 1.0, 0.2, 0.3, 0.9,
                             40, True, u, 0, *logs)
        n = res[1]
        return theta, w, dth, dw, res, [x[:n] for x in logs]

    results = list(run_both(go).values())
    ref = results[0]
    for got in results[1:]:
        for a, b in zip(got[:4], ref[:4]):
            assert np.array_equal(a, b)
        assert got[4] == ref[4]
        for a, b in zip(got[5], ref[5]):
            assert np.array_equal(a, b)


def test_sample_cum_pinned():
    cum = np.array([0.2, 0.2, 1.0, 1.0])
    for name in kernels.available():
        previous = kernels.use(name)
        try:
            assert kernels.sample_cum(cum, 0.0) == 0
            assert kernels.sample_cum(cum, 0.2) == 2
            assert kernels.sample_cum(cum, 0.999999) == 2
        finally:
            kernels.use(previous)
