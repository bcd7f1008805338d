import numpy
from setuptools import Extension, setup

# The compiled kernels are optional: if the extension cannot be built the
# package falls back to the pure-numpy implementations in pspin.kernels._ref.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "pspin.kernels._core",
                ["src/pspin/kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
