"""Builds the optional compiled scatter kernels.

The package installs and runs without the extension (a numpy fallback is
selected at import time), so the extension is marked optional.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "simgrace._scatter",
                ["src/simgrace/_scatter.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ]
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
