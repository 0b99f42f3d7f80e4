"""Build script for the optional compiled kernels.

The package works without the extension (a pure-Python twin is selected at
import time); building it just makes the spectral diagnostics fast.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "tadlora.kernels._jacobi",
                ["src/tadlora/kernels/_jacobi.pyx"],
                include_dirs=[np.get_include()],
                # -ffp-contract=off keeps the compiled kernel bit-compatible
                # with the pure-Python twin (no FMA contraction).
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
