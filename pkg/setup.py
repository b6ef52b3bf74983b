"""Build script for the optional compiled kernels.

The package works without them; ``cogra.kernels`` falls back to numpy when
``cogra._ckernels`` cannot be imported.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("COGRA_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "cogra._ckernels",
                    ["src/cogra/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
