"""Build script for the optional compiled element kernels.

The package is fully functional without the extension (a vectorized numpy
fallback is selected at import time); the extension only accelerates the
per-element assembly loop.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("PORETOPO_SKIP_EXT", "") not in ("1", "true", "yes"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext = Extension(
            "poretopo._kernels._core",
            sources=["src/poretopo/_kernels/_core.pyx"],
            include_dirs=[numpy.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            optional=True,
        )
        ext_modules = cythonize(
            [ext],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
