"""Build script for the optional compiled kernel.

The package is fully functional without the extension (a pure-Python
twin is selected at import time), so a failed compile only costs speed.
Set AGGC_SKIP_EXT=1 to skip the extension build entirely.
"""

import os

from setuptools import Extension, setup


def extensions():
    if os.environ.get("AGGC_SKIP_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "aggc._kernel._speedups",
        sources=["src/aggc/_kernel/_speedups.pyx"],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
        },
    )


setup(ext_modules=extensions())
