"""Build hook for the optional compiled kernels.

The package works without the extension; ``gaugelab.kernels`` falls back
to a numpy/scipy implementation when the compiled module is missing.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("GAUGELAB_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "gaugelab._kernels",
                    ["src/gaugelab/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:  # no Cython available: pure-Python fallback only
        ext_modules = []

setup(ext_modules=ext_modules)
