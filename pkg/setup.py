"""Build script for the optional compiled kernels.

The package is fully functional without the extension: lgi_echo._kernels
falls back to vectorized numpy implementations when the compiled module
is absent.  Building is therefore best-effort; a missing compiler or
Cython must not break installation.
"""

import warnings

from setuptools import setup

try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    extensions = cythonize(
        [
            Extension(
                "lgi_echo._kernels._core",
                ["src/lgi_echo/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - depends on build host
    warnings.warn(f"compiled kernels skipped ({exc}); using numpy fallback")
    extensions = []

setup(ext_modules=extensions)
