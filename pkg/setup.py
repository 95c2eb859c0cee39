import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("GOGAR_RL_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "gogar_rl.kernels._core",
                    ["src/gogar_rl/kernels/_core.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O2"],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
