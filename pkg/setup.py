import os

from setuptools import Extension, setup

# The compiled kernels are optional: without Cython or a C compiler the
# package falls back to the numpy implementations at import time.
# -ffp-contract=off keeps the C float arithmetic bit-identical to the
# fallback (no FMA contraction).
ext_modules = []
if not os.environ.get("XSHARK_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "xshark._kernels._native",
                    sources=["src/xshark/_kernels/_native.pyx"],
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
