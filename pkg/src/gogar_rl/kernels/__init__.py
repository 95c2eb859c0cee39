"""Hot-loop kernels with a compiled core and a pure-Python fallback.

The compiled extension is used when it imports; set ``GOGAR_RL_PURE_PYTHON=1``
to force the fallback. :func:`use` switches backends at runtime (the test
suite runs both). Callers must look kernels up through this module at call
time (``kernels.ac_run(...)``) so that switching takes effect.
"""

import importlib
import logging
import os

log = logging.getLogger(__name__)

_MODULES = {"cython": "gogar_rl.kernels._core", "python": "gogar_rl.kernels._fallback"}

BACKEND = None
ac_run = q_run = sample_cum = None


def available():
    """Names of the backends that can be imported, compiled first."""
    names = []
    for name, modname in _MODULES.items():
        try:
            importlib.import_module(modname)
        except ImportError:
            continue
        names.append(name)
    return names


def use(name):
    """Select the backend by name; returns the previously active name."""
    global BACKEND, ac_run, q_run, sample_cum
    mod = importlib.import_module(_MODULES[name])
    previous = BACKEND
    ac_run, q_run, sample_cum = mod.ac_run, mod.q_run, mod.sample_cum
    BACKEND = name
    return previous


def _select():
    if os.environ.get("GOGAR_RL_PURE_PYTHON", "").strip() not in ("", "0"):
        use("python")
        return
    try:
        use("cython")
    except ImportError:
        log.info("compiled kernels unavailable; using pure-Python fallback")
        use("python")


_select()
