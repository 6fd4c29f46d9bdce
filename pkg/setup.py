"""Build script: compiles the optional split-step kernel.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile only costs speed, never functionality.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("QSTEER_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext = Extension(
            "qsteer._kernel",
            ["src/qsteer/_kernel.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
        )
        ext_modules = cythonize(
            [ext], compiler_directives={"language_level": "3"}
        )
    except Exception as exc:  # no cython / no compiler: pure-python install
        print(f"qsteer: skipping compiled kernel ({exc!r})")
        ext_modules = []

setup(ext_modules=ext_modules)
