"""Build the optional compiled Monte Carlo kernel.

The package is fully usable without it: ``fsdet._backend`` falls back to the
numpy implementation when the extension cannot be imported.
"""
import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("FSDET_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        print("Cython/numpy unavailable; building pure-Python fsdet", file=sys.stderr)
    else:
        npy_random_lib = os.path.join(os.path.dirname(np.__file__), "random", "lib")
        ext_modules = cythonize(
            [
                Extension(
                    "fsdet._kernels",
                    ["src/fsdet/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    library_dirs=[npy_random_lib],
                    libraries=["npyrandom"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
