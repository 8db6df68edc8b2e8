"""Build script: compiles the optional LF cycle kernel.

The package works without the extension (a pure numpy fallback is selected
at import time), so any build failure here is non-fatal by design: build
with ``GLOTFIT_SKIP_EXT=1`` to skip the extension entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("GLOTFIT_SKIP_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "glotfit._lfcore",
                    ["src/glotfit/_lfcore.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "language_level": 3,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
