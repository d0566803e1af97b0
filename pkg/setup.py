"""Build script: compiles the optional speedup extension when Cython and a C
compiler are available.  The package is fully functional without it (the pure
Python kernels in dbmfsim._kernels_py are selected at import time), so any
build failure here degrades to a source-only install instead of aborting.

Set DBMFSIM_SKIP_EXT=1 to force a pure-Python install.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("DBMFSIM_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("dbmfsim._speedups", ["src/dbmfsim/_speedups.pyx"])],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
