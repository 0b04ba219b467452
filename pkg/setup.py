"""Build the optional Cython scoring kernel.

If Cython or a C compiler is unavailable the install still succeeds; the
ranker falls back to the numpy kernel at import time.
"""
from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    import numpy

    ext_modules = cythonize(
        [
            "src/finqa/_score_kernel.pyx",
        ],
        language_level="3",
    )
    include_dirs = [numpy.get_include()]
except Exception:
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
