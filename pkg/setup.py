"""Build script for the optional compiled kernels.

The package is fully functional without the extension: ``dyconfid.kernels``
falls back to a NumPy implementation when the compiled module is missing
(or when DYCONFID_PURE_PYTHON=1 is set).
"""

import warnings

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "dyconfid.kernels._speedups",
                ["src/dyconfid/kernels/_speedups.pyx"],
                extra_compile_args=["-O3"],
                include_dirs=[np.get_include()],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    warnings.warn("Cython not available; building without compiled kernels.")
    ext_modules = []

setup(ext_modules=ext_modules)
