import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # fallback backend only
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("GCLBENCH_NO_EXT"):
    common = dict(include_dirs=[np.get_include()],
                  define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])
    ext_modules = cythonize(
        [
            # walk + SGNS loops tolerate reassociation, so allow vectorized reductions
            Extension("gclbench._core._walks", ["src/gclbench/_core/_walks.pyx"],
                      extra_compile_args=["-O3", "-ffast-math", "-march=native"], **common),
            # callers pass finite log-kernels, so fast-math is safe and lets exp vectorize
            Extension("gclbench._core._pairs", ["src/gclbench/_core/_pairs.pyx"],
                      extra_compile_args=["-O3", "-ffast-math", "-march=native"],
                      extra_link_args=["-lmvec", "-lm"], **common),
            Extension("gclbench._core._graph", ["src/gclbench/_core/_graph.pyx"],
                      extra_compile_args=["-O3"], **common),
        ],
        compiler_directives={"language_level": 3, "boundscheck": False,
                             "wraparound": False, "cdivision": True},
    )

setup(ext_modules=ext_modules)
