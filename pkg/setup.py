"""Build script: compiles the optional Cython round-stepping core.

The package works without the extension (a pure-Python twin is selected at
import time), so compilation failures are downgraded to a warning.
"""

import warnings

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize # noqa: F401

    ext_modules = cythonize(
        ["src/liarspoker/_fast/_core.pyx"],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    warnings.warn(f"Cython core not built, falling back to pure Python: {exc}")

setup(ext_modules=ext_modules)
