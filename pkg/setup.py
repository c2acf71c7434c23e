"""Build script: compiles the native alignment kernel when a toolchain is available.

The package works without the extension (a pure-Python kernel is selected at
import time), so extension build failures are non-fatal.
"""

import sys

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = cythonize(
        [
            Extension(
                "emgvoice._native.dtw",
                ["src/emgvoice/_native/dtw.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError as exc:  # pragma: no cover - build environment dependent
    print(f"emgvoice: skipping native kernel build ({exc})", file=sys.stderr)
    extensions = []

setup(ext_modules=extensions)
