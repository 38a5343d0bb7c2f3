"""Build script: compiles the optional Cython fast path for the blip integrator.

The package works without the extension (a pure-Python kernel is selected at
import time), so a failed compile only costs speed.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "airtwin.kernels._fast",
                ["src/airtwin/kernels/_fast.pyx"],
                include_dirs=[numpy.get_include()],
                # fp-contract off keeps the C arithmetic bit-compatible with
                # the pure-Python kernel (no FMA fusing).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
