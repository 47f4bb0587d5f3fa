"""Build the optional compiled kernels.

The package works without the extension: fampca._kernels falls back to the
pure-numpy reference implementations when the compiled module is absent.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "fampca._kernels._fast",
                ["src/fampca/_kernels/_fast.pyx"],
                include_dirs=[np.get_include()],
                # -ffp-contract=off keeps results bitwise identical to the
                # numpy reference path (no fused multiply-add surprises).
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
