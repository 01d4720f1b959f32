from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/lumenwave/core/_kernels.py"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": False,
        },
    )
except ImportError:
    # Without Cython the package still works on the interpreted kernel module.
    ext_modules = []

setup(ext_modules=ext_modules)
