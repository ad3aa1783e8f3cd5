"""Build script for the optional compiled kernel extension.

The package works without the extension (numpy fallback kernels are selected
at import time); building it just makes the rasterizer, reprojection, conv,
and kNN-fill hot loops much faster.  Compile with:

    python setup.py build_ext --inplace

or simply `pip install .` with Cython and a C compiler available.

Float determinism: the extension must produce bit-identical results to the
numpy fallback, so no -ffast-math and FP contraction is disabled.
"""
import os

from setuptools import Extension, setup

_PYX = os.path.join("src", "stylebake", "_kernels", "_ext.pyx")

ext_modules = []
try:
    if not os.path.exists(_PYX):
        raise ImportError("pyx source missing")
    import numpy as np
    from Cython.Build import cythonize

    ext = Extension(
        "stylebake._kernels._ext",
        sources=[_PYX],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off", "-fno-fast-math"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})
except ImportError:
    # No Cython: install as pure python, kernels fall back to numpy.
    ext_modules = []

setup(ext_modules=ext_modules)
