import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; the kernel falls back at import
    cythonize = None

ext_modules = []
if cythonize is not None and os.environ.get("BCT_NO_EXT") != "1":
    ext_modules = cythonize(
        [Extension(
            "bctables._kernels",
            ["src/bctables/_kernels.pyx"],
            # keep a*b+c unfused so results match the pure-Python path bit for bit
            extra_compile_args=["-O2", "-ffp-contract=off"],
        )],
        language_level=3,
    )

setup(ext_modules=ext_modules)
