"""Build script for the optional compiled core.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile only costs speed. Build in place with:

    python setup.py build_ext --inplace
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "kdclass._core",
        ["src/kdclass/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": 3},
    )
)
