import os

from setuptools import Extension, setup

### The compiled kernels are an optional speedup: if cython or a C compiler
### is unavailable the package installs anyway and falls back to the pure
### python implementations in agelab.kernels._pyref.

ext_modules = []
if os.environ.get("AGELAB_SKIP_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "agelab.kernels._core",
                    ["src/agelab/kernels/_core.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
