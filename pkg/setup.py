import numpy
from setuptools import setup

# The compiled transport kernel is optional: if Cython (or a C compiler) is
# unavailable the package falls back to the pure-Python twin at import time.
ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "isomon._kernel_cy",
                ["src/isomon/_kernel_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover
    print(f"isomon: building without compiled kernel ({exc})")

setup(ext_modules=ext_modules)
